#include "latwalk/lattice.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>

#include "latwalk/error.hpp"
#include "latwalk/lll.hpp"
#include "latwalk/parallel.hpp"

namespace latwalk {

namespace {

void make_det_positive(Mat& b, Mat* transform) {
    if (b.determinant() < 0.0) {
        b.col(b.cols() - 1) *= -1.0;
        if (transform) transform->col(transform->cols() - 1) *= -1.0;
    }
}

Mat lll_matrix(const Mat& b, Mat* transform) {
    const int d = static_cast<int>(b.rows());
    BasisT<double> work(d);
    std::copy(b.data(), b.data() + b.size(), work.data.begin());
    std::vector<double> u;
    lll_reduce(work, kLllDelta, transform ? &u : nullptr);
    Mat out = Eigen::Map<const Mat>(work.data.data(), d, d);
    if (transform) *transform = Eigen::Map<const Mat>(u.data(), d, d);
    make_det_positive(out, transform);
    return out;
}

struct GsData {
    Mat mu;  // mu(i, j), j < i
    Vec norms;
};

GsData gs_of(const Mat& b) {
    const int d = static_cast<int>(b.cols());
    GsData g{Mat::Zero(d, d), Vec::Zero(d)};
    Mat star = b;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < i; ++j) {
            const double m = b.col(i).dot(star.col(j)) / g.norms(j);
            g.mu(i, j) = m;
            star.col(i) -= m * star.col(j);
        }
        g.norms(i) = star.col(i).squaredNorm();
        if (!(g.norms(i) > 0.0)) throw Error(ErrorKind::Inversion, "singular lattice basis");
    }
    return g;
}

// Visits every nonzero integer vector x with |b x|^2 <= r2 (up to rounding
// slack). The visitor may shrink r2.
template <class Visit>
void enumerate(const Mat& b, double& r2, Visit&& visit) {
    const int d = static_cast<int>(b.cols());
    const GsData gs = gs_of(b);
    std::array<int, kMaxEnumerationDim> x{};
    std::array<double, kMaxEnumerationDim + 1> partial{};
    auto level = [&](auto&& self, int i) -> void {
        double c = 0.0;
        for (int j = i + 1; j < d; ++j) c -= gs.mu(j, i) * x[static_cast<std::size_t>(j)];
        const double rem = r2 * (1.0 + 1e-10) - partial[static_cast<std::size_t>(i + 1)];
        if (rem < 0.0) return;
        const double span = std::sqrt(rem / gs.norms(i));
        const long lo = static_cast<long>(std::ceil(c - span));
        const long hi = static_cast<long>(std::floor(c + span));
        for (long xi = lo; xi <= hi; ++xi) {
            x[static_cast<std::size_t>(i)] = static_cast<int>(xi);
            const double dx = static_cast<double>(xi) - c;
            const double li = partial[static_cast<std::size_t>(i + 1)] + dx * dx * gs.norms(i);
            if (li > r2 * (1.0 + 1e-10)) continue;
            partial[static_cast<std::size_t>(i)] = li;
            if (i == 0) {
                bool zero = true;
                for (int j = 0; j < d; ++j) zero = zero && x[static_cast<std::size_t>(j)] == 0;
                if (!zero) visit(x);
            } else {
                self(self, i - 1);
            }
        }
        x[static_cast<std::size_t>(i)] = 0;
    };
    partial[static_cast<std::size_t>(d)] = 0.0;
    level(level, d - 1);
}

bool lex_less(const std::array<int, kMaxEnumerationDim>& a, const Eigen::VectorXi& b) {
    for (int i = 0; i < b.size(); ++i) {
        if (a[static_cast<std::size_t>(i)] != b(i)) return a[static_cast<std::size_t>(i)] < b(i);
    }
    return false;
}

Vec combine(const Mat& b, const std::array<int, kMaxEnumerationDim>& x) {
    Vec v = Vec::Zero(b.rows());
    for (int j = 0; j < b.cols(); ++j) v += static_cast<double>(x[static_cast<std::size_t>(j)]) * b.col(j);
    return v;
}

double sup_norm(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

ShortestVector shortest_on_reduced(const Mat& b, Norm norm) {
    const int d = static_cast<int>(b.cols());
    if (d > kMaxEnumerationDim) throw Error(ErrorKind::Dimension, "shortest_vector: dimension above 6");
    ShortestVector best;
    best.coefficients = Eigen::VectorXi::Zero(d);
    best.length = std::numeric_limits<double>::infinity();
    auto length_of = [&](const Vec& v) { return norm == Norm::Euclidean ? v.norm() : sup_norm(v); };
    for (int j = 0; j < d; ++j) {
        const double len = length_of(b.col(j));
        if (len < best.length) {
            best.length = len;
            best.vector = b.col(j);
            best.coefficients.setZero();
            best.coefficients(j) = 1;
        }
    }
    auto radius_sq = [&] {
        const double r = norm == Norm::Euclidean ? best.length : best.length * std::sqrt(static_cast<double>(d));
        return r * r * (1.0 + 1e-9);
    };
    double r2 = radius_sq();
    enumerate(b, r2, [&](const std::array<int, kMaxEnumerationDim>& x) {
        const Vec v = combine(b, x);
        const double len = length_of(v);
        const double tie = 1e-12 * std::max(1.0, best.length);
        if (len < best.length - tie || (std::abs(len - best.length) <= tie && lex_less(x, best.coefficients))) {
            best.length = std::min(len, best.length);
            best.vector = v;
            for (int i = 0; i < d; ++i) best.coefficients(i) = x[static_cast<std::size_t>(i)];
            r2 = radius_sq();
        }
    });
    return best;
}

std::vector<std::uint64_t> siegel_counts(const Mat& b, const std::vector<double>& radii) {
    std::vector<std::uint64_t> counts(radii.size(), 0);
    if (radii.empty()) return counts;
    if (b.cols() > kMaxEnumerationDim) throw Error(ErrorKind::Dimension, "siegel_transform: dimension above 6");
    double rmax = 0.0;
    for (double r : radii) {
        if (!(r >= 0.0) || r > 10.0) throw Error(ErrorKind::Domain, "siegel_transform: radius must lie in [0, 10]");
        rmax = std::max(rmax, r);
    }
    // Levels >= 1 are enumerated; the innermost coordinate is counted in closed
    // form, so lattices near the cusp (huge counts) stay cheap.
    const int d = static_cast<int>(b.cols());
    const GsData gs = gs_of(b);
    const double slack = 1.0 + 1e-10;
    std::array<long, kMaxEnumerationDim> x{};
    std::array<double, kMaxEnumerationDim + 1> partial{};
    auto count_level0 = [&] {
        double c = 0.0;
        bool rest_zero = true;
        for (int j = 1; j < d; ++j) {
            c -= gs.mu(j, 0) * static_cast<double>(x[static_cast<std::size_t>(j)]);
            rest_zero = rest_zero && x[static_cast<std::size_t>(j)] == 0;
        }
        for (std::size_t i = 0; i < radii.size(); ++i) {
            const double rem = radii[i] * radii[i] * slack - partial[1];
            if (rem < 0.0) continue;
            const double span = std::sqrt(rem / gs.norms(0));
            const double lo = std::ceil(c - span);
            const double hi = std::floor(c + span);
            if (hi < lo) continue;
            counts[i] += static_cast<std::uint64_t>(hi - lo + 1.0) - (rest_zero ? 1 : 0);
        }
    };
    auto level = [&](auto&& self, int i) -> void {
        if (i == 0) {
            count_level0();
            return;
        }
        double c = 0.0;
        for (int j = i + 1; j < d; ++j) c -= gs.mu(j, i) * static_cast<double>(x[static_cast<std::size_t>(j)]);
        const double rem = rmax * rmax * slack - partial[static_cast<std::size_t>(i + 1)];
        if (rem < 0.0) return;
        const double span = std::sqrt(rem / gs.norms(i));
        for (long xi = static_cast<long>(std::ceil(c - span)); xi <= static_cast<long>(std::floor(c + span)); ++xi) {
            x[static_cast<std::size_t>(i)] = xi;
            const double dx = static_cast<double>(xi) - c;
            partial[static_cast<std::size_t>(i)] = partial[static_cast<std::size_t>(i + 1)] + dx * dx * gs.norms(i);
            self(self, i - 1);
        }
        x[static_cast<std::size_t>(i)] = 0;
    };
    level(level, d - 1);
    return counts;
}

const Mat& reduced_basis_of(const LatticePoint& x, Mat& storage) {
    if (x.reduced()) return x.basis();
    storage = lll_matrix(x.basis(), nullptr);
    return storage;
}

}  // namespace

LatticePoint::LatticePoint(Mat basis, bool reduced) : basis_(std::move(basis)), reduced_(reduced) {
    if (basis_.rows() != basis_.cols() || basis_.rows() == 0)
        throw Error(ErrorKind::Dimension, "LatticePoint: basis must be square");
    if (!is_finite(basis_)) throw Error(ErrorKind::Inversion, "LatticePoint: non-finite basis");
    const double det = basis_.determinant();
    if (std::abs(std::abs(det) - 1.0) > kUnimodularTol)
        throw Error(ErrorKind::Domain, "LatticePoint: |det| = " + std::to_string(std::abs(det)) + " is not 1");
    make_det_positive(basis_, nullptr);
}

LatticePoint LatticePoint::standard(int d) { return LatticePoint(Mat::Identity(d, d), true); }

LatticePoint reduce_basis(const LatticePoint& x, Mat* transform) {
    return LatticePoint(lll_matrix(x.basis(), transform), true);
}

ShortestVector shortest_vector(const LatticePoint& x, Norm norm) {
    if (x.dim() > kMaxEnumerationDim) throw Error(ErrorKind::Dimension, "shortest_vector: dimension above 6");
    Mat storage;
    return shortest_on_reduced(reduced_basis_of(x, storage), norm);
}

double shortest_length_lower_bound(const LatticePoint& x) {
    Mat storage;
    const GsData gs = gs_of(reduced_basis_of(x, storage));
    return std::sqrt(gs.norms.minCoeff());
}

std::uint64_t siegel_transform(const LatticePoint& x, double radius) {
    if (x.dim() > kMaxEnumerationDim) throw Error(ErrorKind::Dimension, "siegel_transform: dimension above 6");
    Mat storage;
    return siegel_counts(reduced_basis_of(x, storage), {radius}).front();
}

double ball_volume(int d, double radius) {
    const double half = 0.5 * d;
    return std::pow(std::numbers::pi, half) * std::pow(radius, d) / std::tgamma(half + 1.0);
}

double lattice_residual(const LatticePoint& x, const LatticePoint& y) {
    if (x.dim() != y.dim()) throw Error(ErrorKind::Dimension, "lattice_residual: dimension mismatch");
    Eigen::PartialPivLU<Mat> lu(x.basis());
    const Mat u = lu.solve(y.basis());
    if (!is_finite(u)) throw Error(ErrorKind::Inversion, "lattice_residual: singular basis");
    const Mat r = u.array().round().matrix();
    if (std::abs(std::abs(r.determinant()) - 1.0) > 0.5) return std::numeric_limits<double>::infinity();
    return (u - r).cwiseAbs().maxCoeff();
}

bool lattice_equal(const LatticePoint& x, const LatticePoint& y, double tol) {
    return lattice_residual(x, y) <= tol;
}

bool in_mahler_set(const LatticePoint& x, double eps) { return shortest_vector(x, Norm::Sup).length >= eps; }

int lattice_bin(double shortest_euclidean) {
    static const double lo = std::log(0.05);
    static const double hi = std::log(1.2);
    const double u = (std::log(shortest_euclidean) - lo) / (hi - lo);
    const int b = static_cast<int>(std::floor(u * kLatticeBins));
    return std::clamp(b, 0, kLatticeBins - 1);
}

// ---------------------------------------------------------------------------
// accumulator

EmpiricalAccumulator EmpiricalAccumulator::empty_for(int dim, int states, const WalkObservables& obs) {
    EmpiricalAccumulator acc;
    acc.dim = dim;
    acc.states = states;
    acc.eps = obs.eps_list;
    acc.keps_counts.assign(obs.eps_list.size(), 0);
    acc.radii = obs.radii;
    acc.siegel_sums.assign(obs.radii.size(), 0);
    acc.batch_length = obs.batch_length;
    acc.batch_sum.assign(obs.radii.size(), 0);
    acc.batch_sq_sum.assign(obs.radii.size(), 0.0L);
    if (obs.joint) acc.joint_counts.assign(static_cast<std::size_t>(states) * kLatticeBins, 0);
    return acc;
}

void EmpiricalAccumulator::merge(const EmpiricalAccumulator& other) {
    if (other.empty() && other.eps.empty() && other.radii.empty()) return;
    if (empty() && eps.empty() && radii.empty() && joint_counts.empty()) {
        const std::uint64_t steps = step_count;
        *this = other;
        step_count += steps;
        return;
    }
    if (dim != other.dim || states != other.states || eps != other.eps || radii != other.radii ||
        batch_length != other.batch_length || joint_counts.size() != other.joint_counts.size())
        throw Error(ErrorKind::Dimension, "EmpiricalAccumulator::merge: incompatible accumulators");
    step_count += other.step_count;
    for (std::size_t i = 0; i < keps_counts.size(); ++i) keps_counts[i] += other.keps_counts[i];
    for (std::size_t i = 0; i < siegel_sums.size(); ++i) {
        siegel_sums[i] += other.siegel_sums[i];
        batch_sum[i] += other.batch_sum[i];
        batch_sq_sum[i] += other.batch_sq_sum[i];
    }
    batches += other.batches;
    for (std::size_t i = 0; i < joint_counts.size(); ++i) joint_counts[i] += other.joint_counts[i];
}

void to_json(nlohmann::json& j, const EmpiricalAccumulator& acc) {
    nlohmann::json keps = nlohmann::json::array();
    for (std::size_t i = 0; i < acc.eps.size(); ++i) keps.push_back({{"eps", acc.eps[i]}, {"count", acc.keps_counts[i]}});
    nlohmann::json siegel = nlohmann::json::array();
    for (std::size_t i = 0; i < acc.radii.size(); ++i)
        siegel.push_back({{"radius", acc.radii[i]},
                          {"sum", acc.siegel_sums[i]},
                          {"batch_sum", acc.batch_sum[i]},
                          {"batch_sq_sum", static_cast<double>(acc.batch_sq_sum[i])}});
    j = nlohmann::json{{"dim", acc.dim},
                       {"states", acc.states},
                       {"step_count", acc.step_count},
                       {"keps_counts", keps},
                       {"siegel_sums", siegel},
                       {"batch_length", acc.batch_length},
                       {"batches", acc.batches},
                       {"lattice_bins", kLatticeBins},
                       {"joint_counts", acc.joint_counts}};
}

void from_json(const nlohmann::json& j, EmpiricalAccumulator& acc) {
    acc = EmpiricalAccumulator{};
    acc.dim = j.at("dim").get<int>();
    acc.states = j.at("states").get<int>();
    acc.step_count = j.at("step_count").get<std::uint64_t>();
    for (const auto& e : j.at("keps_counts")) {
        acc.eps.push_back(e.at("eps").get<double>());
        acc.keps_counts.push_back(e.at("count").get<std::uint64_t>());
    }
    for (const auto& e : j.at("siegel_sums")) {
        acc.radii.push_back(e.at("radius").get<double>());
        acc.siegel_sums.push_back(e.at("sum").get<std::uint64_t>());
        acc.batch_sum.push_back(e.at("batch_sum").get<std::uint64_t>());
        acc.batch_sq_sum.push_back(e.at("batch_sq_sum").get<double>());
    }
    acc.batch_length = j.at("batch_length").get<std::uint64_t>();
    acc.batches = j.at("batches").get<std::uint64_t>();
    acc.joint_counts = j.at("joint_counts").get<std::vector<std::uint64_t>>();
}

// ---------------------------------------------------------------------------
// walk

namespace {

constexpr double kOverflowEntry = 1e12;
constexpr std::size_t kRenormalizeEvery = 64;

}  // namespace

EmpiricalAccumulator run_walk(const ChainSpec& chain, const LatticePoint& x0, std::size_t n_steps,
                              const WalkObservables& observables, Rng& rng, std::vector<TracePoint>* trace,
                              std::size_t trace_stride) {
    const int d = x0.dim();
    if (chain.dim() != d) throw Error(ErrorKind::Dimension, "run_walk: chain and lattice dimensions differ");
    const bool exact = d <= kMaxEnumerationDim;
    if (!exact) {
        if (!observables.radii.empty())
            throw Error(ErrorKind::Dimension, "run_walk: Siegel counts need d <= 6");
        std::cerr << "warning: d = " << d << " > 6, shortest vectors replaced by Gram-Schmidt lower bounds\n";
    }
    const std::size_t joint_stride = std::max<std::size_t>(1, observables.joint_stride);
    const std::size_t batch_length = std::max<std::size_t>(1, observables.batch_length);

    EmpiricalAccumulator acc = EmpiricalAccumulator::empty_for(d, chain.size(), observables);
    std::vector<std::uint64_t> batch_current(observables.radii.size(), 0);
    std::size_t batch_steps = 0;

    const ChainSampler sampler(chain);
    Mat b = x0.reduced() ? x0.basis() : lll_matrix(x0.basis(), nullptr);
    int state = sampler.draw_start(rng);

    for (std::size_t k = 0; k < n_steps; ++k) {
        // observe (e_k, x_k) on the reduced basis
        double shortest_euclid = 0.0;
        double shortest_sup = 0.0;
        if (exact) {
            shortest_euclid = shortest_on_reduced(b, Norm::Euclidean).length;
            shortest_sup = shortest_on_reduced(b, Norm::Sup).length;
        } else {
            shortest_euclid = std::sqrt(gs_of(b).norms.minCoeff());
            shortest_sup = shortest_euclid / std::sqrt(static_cast<double>(d));
        }
        for (std::size_t i = 0; i < acc.eps.size(); ++i)
            if (shortest_sup < acc.eps[i]) ++acc.keps_counts[i];
        if (!observables.radii.empty()) {
            const auto counts = siegel_counts(b, observables.radii);
            for (std::size_t i = 0; i < counts.size(); ++i) {
                acc.siegel_sums[i] += counts[i];
                batch_current[i] += counts[i];
            }
            if (++batch_steps == batch_length) {
                for (std::size_t i = 0; i < counts.size(); ++i) {
                    acc.batch_sum[i] += batch_current[i];
                    acc.batch_sq_sum[i] += static_cast<long double>(batch_current[i]) * batch_current[i];
                    batch_current[i] = 0;
                }
                ++acc.batches;
                batch_steps = 0;
            }
        }
        if (observables.joint && k % joint_stride == 0)
            ++acc.joint_counts[static_cast<std::size_t>(state) * kLatticeBins +
                               static_cast<std::size_t>(lattice_bin(shortest_euclid))];
        if (trace && trace_stride > 0 && k % trace_stride == 0) trace->push_back({k, shortest_euclid});
        ++acc.step_count;

        // advance
        b = chain.coding[static_cast<std::size_t>(state)] * b;
        if ((k + 1) % kRenormalizeEvery == 0) b = renormalize_det(b);
        b = lll_matrix(b, nullptr);
        if (!is_finite(b) || b.cwiseAbs().maxCoeff() > kOverflowEntry)
            throw Error(ErrorKind::Overflow, "run_walk: basis entry above 1e12 after reduction at step " +
                                                 std::to_string(k + 1));
        state = sampler.step(state, rng);
    }
    return acc;
}

WalkReplicas run_walk_replicas(const ChainSpec& chain, const LatticePoint& x0, std::size_t n_steps,
                               const WalkObservables& observables, std::uint64_t seed, std::size_t replicas,
                               std::size_t trace_stride, std::size_t first_replica) {
    WalkReplicas out;
    out.per_replica.resize(replicas);
    out.traces.resize(replicas);
    parallel_for(replicas, [&](std::size_t r) {
        Rng rng(seed, first_replica + r);
        out.per_replica[r] = run_walk(chain, x0, n_steps, observables, rng,
                                      trace_stride > 0 ? &out.traces[r] : nullptr, trace_stride);
    });
    for (const auto& acc : out.per_replica) out.merged.merge(acc);
    return out;
}

EquidistributionReport equidistribution_report(const EmpiricalAccumulator& acc) {
    if (acc.empty()) throw Error(ErrorKind::InsufficientData, "equidistribution_report: empty accumulator");
    if (acc.step_count < 10'000)
        throw Error(ErrorKind::InsufficientData, "equidistribution_report: need at least 1e4 steps");
    EquidistributionReport rep;
    rep.step_count = acc.step_count;
    const double n = static_cast<double>(acc.step_count);
    rep.eps = acc.eps;
    for (auto c : acc.keps_counts) rep.escape_fractions.push_back(static_cast<double>(c) / n);
    for (std::size_t i = 0; i < acc.radii.size(); ++i) {
        SiegelSummary s;
        s.radius = acc.radii[i];
        s.average = static_cast<double>(acc.siegel_sums[i]) / n;
        s.target = ball_volume(acc.dim, s.radius);
        s.relative_error = (s.average - s.target) / s.target;
        if (acc.batches >= 2) {
            const long double nb = static_cast<long double>(acc.batches);
            const long double len = static_cast<long double>(acc.batch_length);
            const long double mean = static_cast<long double>(acc.batch_sum[i]) / (nb * len);
            const long double var = (acc.batch_sq_sum[i] / (len * len) - nb * mean * mean) / (nb - 1.0L);
            s.std_error = static_cast<double>(std::sqrt(std::max(0.0L, var) / nb));
        } else {
            s.std_error = std::numeric_limits<double>::quiet_NaN();
        }
        rep.siegel.push_back(s);
    }
    if (!acc.joint_counts.empty()) {
        std::vector<double> table(acc.joint_counts.begin(), acc.joint_counts.end());
        for (int b = 0; b < kLatticeBins; ++b) {
            std::uint64_t col = 0;
            for (int s = 0; s < acc.states; ++s) col += acc.joint_counts[static_cast<std::size_t>(s * kLatticeBins + b)];
            rep.occupied_bins += col > 0;
        }
        rep.independence =
            chi_square_independence(table, static_cast<std::size_t>(acc.states), static_cast<std::size_t>(kLatticeBins));
    }
    return rep;
}

}  // namespace latwalk
