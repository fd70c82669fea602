#include "latwalk/expansion.hpp"

#include <cmath>
#include <limits>

#include "latwalk/error.hpp"
#include "latwalk/parallel.hpp"
#include "latwalk/stats.hpp"

namespace latwalk {

Representation Representation::parse(const std::string& text) {
    if (text == "standard") return standard();
    if (text == "adjoint") return adjoint();
    if (text.rfind("wedge:", 0) == 0) return wedge(std::stoi(text.substr(6)));
    throw Error(ErrorKind::Validation, "unknown representation '" + text + "'");
}

Mat Representation::operator()(const Mat& g) const {
    switch (kind) {
        case Kind::Standard: return g;
        case Kind::Adjoint: return adjoint_matrix(g);
        case Kind::Wedge: return wedge_power(g, grade).entries;
    }
    return g;
}

int Representation::dim(int base_dim) const {
    switch (kind) {
        case Kind::Standard: return base_dim;
        case Kind::Adjoint: return base_dim * base_dim - 1;
        case Kind::Wedge: return static_cast<int>(binomial(base_dim, grade));
    }
    return base_dim;
}

std::string Representation::name() const {
    switch (kind) {
        case Kind::Standard: return "standard";
        case Kind::Adjoint: return "adjoint";
        case Kind::Wedge: return "wedge:" + std::to_string(grade);
    }
    return "standard";
}

namespace {

std::vector<Mat> represent_all(const ChainSpec& chain, const Representation& rep) {
    const int base = chain.dim();
    if (rep.kind == Representation::Kind::Wedge && (rep.grade < 1 || rep.grade > base - 1))
        throw Error(ErrorKind::Grade, "representation grade out of range");
    if (static_cast<std::size_t>(rep.dim(base)) > kMaxRepresentationDim)
        throw Error(ErrorKind::Size, "representation dimension " + std::to_string(rep.dim(base)) + " exceeds cap");
    std::vector<Mat> out;
    out.reserve(chain.coding.size());
    for (const auto& g : chain.coding) out.push_back(rep(g));
    return out;
}

/// Draws the state sequence w_0, w_1, ... lazily.
class StatePath {
public:
    StatePath(const ChainSampler& sampler, Rng& rng) : sampler_(sampler), rng_(rng) {}

    int next() {
        state_ = first_ ? sampler_.draw_start(rng_) : sampler_.step(state_, rng_);
        first_ = false;
        return state_;
    }

private:
    const ChainSampler& sampler_;
    Rng& rng_;
    int state_ = 0;
    bool first_ = true;
};

/// log of the k-volume growth of the frame under one matrix, re-orthonormalizing
/// the frame in place.
double frame_step(Mat& frame, const Mat& g) {
    const OrthoStep step = ortho_product_step(frame, g);
    frame = step.q;
    return step.log_norms.sum();
}

}  // namespace

LyapunovReport lyapunov_spectrum(const ChainSpec& chain, const Representation& rep, std::size_t n_steps,
                                 std::size_t n_replicas, std::uint64_t seed, bool direct_check) {
    if (!is_irreducible(chain.trans)) throw Error(ErrorKind::Reducible, "lyapunov_spectrum: chain is reducible");
    if (n_steps == 0 || n_replicas == 0) throw Error(ErrorKind::InsufficientData, "lyapunov_spectrum: empty run");
    const std::vector<Mat> mats = represent_all(chain, rep);
    const int dim = static_cast<int>(mats.front().rows());
    const ChainSampler sampler(chain);

    constexpr std::size_t kMaxDirectWedge = 35;
    std::vector<std::vector<Mat>> wedges(static_cast<std::size_t>(dim));
    if (direct_check)
        for (int k = 1; k < dim; ++k) {
            if (binomial(dim, k) > kMaxDirectWedge) continue;
            for (const auto& m : mats) wedges[static_cast<std::size_t>(k)].push_back(wedge_power(m, k).entries);
        }

    LyapunovReport report;
    report.steps = n_steps;
    report.replicas = n_replicas;
    report.per_replica.assign(n_replicas, {});
    std::vector<std::vector<double>> direct(n_replicas, std::vector<double>(static_cast<std::size_t>(dim), NAN));

    parallel_for(n_replicas, [&](std::size_t r) {
        Rng rng(seed, r);
        StatePath path(sampler, rng);
        std::vector<CompensatedSum> sums(static_cast<std::size_t>(dim));
        Mat q = Mat::Identity(dim, dim);

        std::vector<Mat> products;
        std::vector<CompensatedSum> product_logs(static_cast<std::size_t>(dim));
        for (int k = 0; k < dim; ++k) {
            const auto& w = wedges[static_cast<std::size_t>(k)];
            products.push_back(w.empty() ? Mat() : Mat::Identity(w.front().rows(), w.front().cols()));
        }

        for (std::size_t step = 0; step < n_steps; ++step) {
            const int e = path.next();
            const OrthoStep os = ortho_product_step(q, mats[static_cast<std::size_t>(e)]);
            q = os.q;
            for (int i = 0; i < dim; ++i) sums[static_cast<std::size_t>(i)].add(os.log_norms(i));
            for (int k = 1; k < dim; ++k) {
                auto& p = products[static_cast<std::size_t>(k)];
                if (p.size() == 0) continue;
                p = wedges[static_cast<std::size_t>(k)][static_cast<std::size_t>(e)] * p;
                const double scale = p.cwiseAbs().maxCoeff();
                p /= scale;
                product_logs[static_cast<std::size_t>(k)].add(std::log(scale));
            }
        }
        auto& est = report.per_replica[r];
        for (int i = 0; i < dim; ++i)
            est.push_back(static_cast<double>(sums[static_cast<std::size_t>(i)].value()) / static_cast<double>(n_steps));
        for (int k = 1; k < dim; ++k) {
            const auto& p = products[static_cast<std::size_t>(k)];
            if (p.size() == 0) continue;
            const long double total = product_logs[static_cast<std::size_t>(k)].value() + std::log(operator_norm(p));
            direct[r][static_cast<std::size_t>(k)] = static_cast<double>(total / static_cast<long double>(n_steps));
        }
    });

    for (int i = 0; i < dim; ++i) {
        RunningStats st;
        for (const auto& est : report.per_replica) st.push(est[static_cast<std::size_t>(i)]);
        report.exponent_estimates.push_back(st.mean());
        report.std_errors.push_back(st.std_error());
    }
    report.direct_partial_sums.assign(static_cast<std::size_t>(dim), NAN);
    report.direct_partial_sums_se.assign(static_cast<std::size_t>(dim), NAN);
    for (int k = 1; k < dim && direct_check; ++k) {
        if (std::isnan(direct[0][static_cast<std::size_t>(k)])) continue;
        RunningStats st;
        for (const auto& d : direct) st.push(d[static_cast<std::size_t>(k)]);
        report.direct_partial_sums[static_cast<std::size_t>(k)] = st.mean();
        report.direct_partial_sums_se[static_cast<std::size_t>(k)] = st.std_error();
    }
    return report;
}

GrowthRate vector_growth_rate(const ChainSpec& chain, const Representation& rep, const Vec& v, std::size_t n_steps,
                              std::size_t n_replicas, std::uint64_t seed) {
    const std::vector<Mat> mats = represent_all(chain, rep);
    if (v.size() != mats.front().rows()) throw Error(ErrorKind::Dimension, "vector_growth_rate: vector size mismatch");
    const double v_norm = v.norm();
    if (!(v_norm > 0.0)) throw Error(ErrorKind::Domain, "vector_growth_rate: zero vector");
    if (n_steps == 0 || n_replicas == 0) throw Error(ErrorKind::InsufficientData, "vector_growth_rate: empty run");
    const ChainSampler sampler(chain);

    std::vector<double> rates(n_replicas, 0.0);
    parallel_for(n_replicas, [&](std::size_t r) {
        Rng rng(seed, r);
        StatePath path(sampler, rng);
        Vec w = v / v_norm;
        CompensatedSum total;
        for (std::size_t step = 0; step < n_steps; ++step) {
            w = mats[static_cast<std::size_t>(path.next())] * w;
            const double n = w.norm();
            if (!(n > 0.0)) throw Error(ErrorKind::Decomposition, "vector_growth_rate: vector annihilated");
            total.add(std::log(n));
            w /= n;
        }
        rates[r] = static_cast<double>(total.value() / static_cast<long double>(n_steps));
    });
    RunningStats st;
    for (double x : rates) st.push(x);
    return {st.mean(), st.std_error()};
}

namespace {

struct CandidateResult {
    double rate = 0.0;
    double se = 0.0;
};

CandidateResult frame_growth(const std::vector<Mat>& mats, const ChainSampler& sampler, Mat frame, std::size_t n_steps,
                             std::size_t batches, Rng& rng) {
    StatePath path(sampler, rng);
    batches = std::max<std::size_t>(2, std::min(batches, n_steps));
    const std::size_t per_batch = n_steps / batches;
    RunningStats batch_rates;
    CompensatedSum total;
    std::size_t done = 0;
    for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t len = b + 1 == batches ? n_steps - done : per_batch;
        CompensatedSum batch;
        for (std::size_t s = 0; s < len; ++s) batch.add(frame_step(frame, mats[static_cast<std::size_t>(path.next())]));
        done += len;
        total.add(batch.value());
        batch_rates.push(static_cast<double>(batch.value()) / static_cast<double>(len));
    }
    // batch means: se of the overall rate ~ sd(batch rates) / sqrt(batches)
    return {static_cast<double>(total.value() / static_cast<long double>(n_steps)), batch_rates.std_error()};
}

Mat random_frame(int dim, int k, Rng& rng) {
    while (true) {
        Mat v(dim, k);
        for (int j = 0; j < k; ++j) v.col(j) = random_unit_vector(dim, rng);
        Eigen::HouseholderQR<Mat> qr(v);
        const Mat r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
        double volume = 1.0;
        for (int i = 0; i < k; ++i) volume *= std::abs(r(i, i));
        if (volume < 1e-8) continue;  // resample degenerate wedges
        Mat q = qr.householderQ() * Mat::Identity(dim, k);
        return q;
    }
}

}  // namespace

ExpansionVerdict grassmannian_expansion_check(const ChainSpec& chain, const Representation& rep, int k,
                                              const ExpansionOptions& options, std::uint64_t seed) {
    const std::vector<Mat> mats = represent_all(chain, rep);
    const int dim = static_cast<int>(mats.front().rows());
    if (k < 1 || k > dim - 1)
        throw Error(ErrorKind::Grade, "grassmannian_expansion_check: k=" + std::to_string(k) + " outside [1, " +
                                          std::to_string(dim - 1) + "]");
    if (options.n_steps < 2) throw Error(ErrorKind::InsufficientData, "grassmannian_expansion_check: too few steps");
    const ChainSampler sampler(chain);

    // candidates: coordinate wedges first, then sphere-uniform random wedges
    std::vector<Mat> frames;
    if (binomial(dim, k) <= options.max_coordinate_candidates)
        for (const auto& subset : k_subsets(dim, k)) {
            Mat f = Mat::Zero(dim, k);
            for (int j = 0; j < k; ++j) f(subset[static_cast<std::size_t>(j)], j) = 1.0;
            frames.push_back(std::move(f));
        }
    Rng frame_rng(seed, 0xF2A3E5ull);
    for (std::size_t s = 0; s < options.n_samples; ++s) frames.push_back(random_frame(dim, k, frame_rng));

    std::vector<CandidateResult> results(frames.size());
    parallel_for(frames.size(), [&](std::size_t i) {
        Rng rng(seed, i);
        results[i] = frame_growth(mats, sampler, frames[i], options.n_steps, options.batches, rng);
    });

    ExpansionVerdict v;
    v.grade = k;
    v.candidates = frames.size();
    std::size_t min_rate_idx = 0, min_lcb_idx = 0;
    for (std::size_t i = 1; i < results.size(); ++i) {
        if (results[i].rate < results[min_rate_idx].rate) min_rate_idx = i;
        if (results[i].rate - 3.0 * results[i].se < results[min_lcb_idx].rate - 3.0 * results[min_lcb_idx].se)
            min_lcb_idx = i;
    }
    v.min_sampled_rate = results[min_rate_idx].rate;
    v.min_rate_se = results[min_rate_idx].se;
    const bool rate_fails = results[min_lcb_idx].rate - 3.0 * results[min_lcb_idx].se <= 0.0;
    const std::size_t witness_idx = rate_fails ? min_lcb_idx : min_rate_idx;
    v.witness = frames[witness_idx];
    v.witness_plucker = plucker(v.witness);
    v.witness_rate = results[witness_idx].rate;
    v.witness_rate_se = results[witness_idx].se;

    // N-step mean log expansion of the witness, chain started from stationarity
    ChainSpec stationary = chain;
    stationary.start = stationary_distribution(chain);
    const ChainSampler mc_sampler(stationary);
    std::vector<double> mc(options.mc_samples, 0.0);
    parallel_for(options.mc_samples, [&](std::size_t i) {
        Rng rng(seed ^ 0x9E3779B97F4A7C15ull, i);
        StatePath path(mc_sampler, rng);
        Mat frame = v.witness;
        double total = 0.0;
        for (std::size_t s = 0; s < options.mc_block; ++s)
            total += frame_step(frame, mats[static_cast<std::size_t>(path.next())]);
        mc[i] = total;
    });
    RunningStats mc_stats;
    for (double x : mc) mc_stats.push(x);
    v.mc_criterion_value = mc_stats.mean();
    v.mc_criterion_se = mc_stats.std_error();
    v.counterexample = rate_fails || v.mc_criterion_value - 3.0 * v.mc_criterion_se <= 0.0;
    return v;
}

}  // namespace latwalk
