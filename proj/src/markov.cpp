#include "latwalk/markov.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>

#include "latwalk/error.hpp"
#include "latwalk/groups.hpp"
#include "latwalk/stats.hpp"

namespace latwalk {

namespace {

constexpr double kStochasticTol = 1e-12;

std::string state_name(const ChainSpec& chain, int e) {
    if (static_cast<std::size_t>(e) < chain.labels.size()) return "'" + chain.labels[static_cast<std::size_t>(e)] + "'";
    return "#" + std::to_string(e);
}

std::vector<bool> reachable(const Mat& trans, int from, bool reverse) {
    const int n = static_cast<int>(trans.cols());
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<int> stack{from};
    seen[static_cast<std::size_t>(from)] = true;
    while (!stack.empty()) {
        const int e = stack.back();
        stack.pop_back();
        for (int f = 0; f < n; ++f) {
            const double p = reverse ? trans(e, f) : trans(f, e);
            if (p > 0.0 && !seen[static_cast<std::size_t>(f)]) {
                seen[static_cast<std::size_t>(f)] = true;
                stack.push_back(f);
            }
        }
    }
    return seen;
}

}  // namespace

int ChainSpec::index_of(const std::string& label) const {
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw Error(ErrorKind::Validation, "unknown state '" + label + "'");
    return static_cast<int>(it - labels.begin());
}

ChainSpec ChainSpec::iid(std::vector<Mat> elements, std::vector<double> weights) {
    if (elements.empty() || elements.size() != weights.size())
        throw Error(ErrorKind::Validation, "iid: need one weight per element");
    const auto n = static_cast<Eigen::Index>(elements.size());
    double total = 0.0;
    for (double w : weights) total += w;
    Vec mu(n);
    for (Eigen::Index i = 0; i < n; ++i) mu(i) = weights[static_cast<std::size_t>(i)] / total;
    ChainSpec c;
    c.trans = mu.replicate(1, n);
    c.coding = std::move(elements);
    c.start = mu;
    for (Eigen::Index i = 0; i < n; ++i) c.labels.push_back("g" + std::to_string(i + 1));
    return c;
}

bool is_irreducible(const Mat& trans) {
    if (trans.cols() == 0) return false;
    const auto fwd = reachable(trans, 0, false);
    const auto bwd = reachable(trans, 0, true);
    return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
           std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

ChainReport validate_chain(const ChainSpec& chain) {
    const int n = chain.size();
    if (n == 0 || chain.trans.rows() != n) throw Error(ErrorKind::Validation, "chain: transition matrix must be square and nonempty");
    if (static_cast<int>(chain.coding.size()) != n)
        throw Error(ErrorKind::Validation, "chain: need one coded element per state");
    for (const auto& g : chain.coding)
        if (g.rows() != chain.dim() || g.cols() != chain.dim() || !g.allFinite())
            throw Error(ErrorKind::Validation, "chain: coded elements must be finite square matrices of one size");

    ChainReport r;
    for (int e = 0; e < n; ++e) {
        if ((chain.trans.col(e).array() < 0.0).any() || !chain.trans.col(e).allFinite())
            throw Error(ErrorKind::Validation, "chain: negative or non-finite transition out of state " + state_name(chain, e));
        const double resid = std::abs(chain.trans.col(e).sum() - 1.0);
        r.stochastic_residual = std::max(r.stochastic_residual, resid);
        if (resid > kStochasticTol)
            throw Error(ErrorKind::Validation, "chain: transitions out of state " + state_name(chain, e) +
                                                   " sum to " + std::to_string(chain.trans.col(e).sum()));
    }
    if (chain.start.size() != n || (chain.start.array() < 0.0).any() || std::abs(chain.start.sum() - 1.0) > 1e-9)
        throw Error(ErrorKind::Validation, "chain: start distribution must be a probability vector over the states");

    r.irreducible = is_irreducible(chain.trans);
    r.exponentially_recurrent = r.irreducible;
    for (int target = 0; target < n; ++target)
        if ((chain.trans.row(target).array() > 0.0).all()) r.universally_accessible.push_back(target);
    return r;
}

Vec stationary_distribution(const ChainSpec& chain) {
    const int n = chain.size();
    if (!is_irreducible(chain.trans)) throw Error(ErrorKind::Reducible, "stationary_distribution: chain is reducible");
    // (P - I) pi = 0 with the last equation replaced by sum(pi) = 1
    Mat a = chain.trans - Mat::Identity(n, n);
    a.row(n - 1).setOnes();
    Vec b = Vec::Zero(n);
    b(n - 1) = 1.0;
    Vec pi = a.fullPivLu().solve(b);
    for (int i = 0; i < n; ++i) pi(i) = std::max(pi(i), 0.0);
    return pi / pi.sum();
}

ChainSampler::ChainSampler(const ChainSpec& chain) {
    const int n = chain.size();
    columns_.resize(static_cast<std::size_t>(n));
    for (int e = 0; e < n; ++e) {
        auto& col = columns_[static_cast<std::size_t>(e)];
        col.resize(static_cast<std::size_t>(n));
        for (int f = 0; f < n; ++f) col[static_cast<std::size_t>(f)] = chain.trans(f, e);
    }
    start_.assign(chain.start.data(), chain.start.data() + chain.start.size());
}

int ChainSampler::draw_start(Rng& rng) const {
    return static_cast<int>(rng.categorical(start_));
}

int ChainSampler::step(int from, Rng& rng) const {
    return static_cast<int>(rng.categorical(columns_[static_cast<std::size_t>(from)]));
}

Excursion sample_excursion(const ChainSpec& chain, const ChainSampler& sampler, int anchor, Rng& rng) {
    Excursion ex;
    ex.word.push_back(anchor);
    ex.element = chain.coding[static_cast<std::size_t>(anchor)];
    int state = anchor;
    for (long steps = 1; steps <= kExcursionStepCap; ++steps) {
        const int next = sampler.step(state, rng);
        ex.weight *= chain.trans(next, state);
        if (next == anchor) return ex;
        ex.word.push_back(next);
        ex.element = chain.coding[static_cast<std::size_t>(next)] * ex.element;
        state = next;
    }
    throw Error(ErrorKind::NonRecurrence, "sample_excursion: no return within the step cap");
}

Excursion sample_excursion(const ChainSpec& chain, int anchor, Rng& rng) {
    return sample_excursion(chain, ChainSampler(chain), anchor, rng);
}

std::vector<RenewalWord> renewal_words(const ChainSpec& chain, int anchor, double mass, std::size_t max_words) {
    struct Prefix {
        double weight;
        std::vector<int> word;
        bool operator<(const Prefix& o) const { return weight < o.weight; }
    };
    const int n = chain.size();
    std::priority_queue<Prefix> open;
    open.push({1.0, {anchor}});
    std::vector<RenewalWord> out;
    double found = 0.0;
    while (!open.empty() && found < mass && out.size() < max_words) {
        Prefix top = open.top();
        open.pop();
        const int last = top.word.back();
        for (int next = 0; next < n; ++next) {
            const double p = chain.trans(next, last);
            if (p <= 0.0) continue;
            if (next == anchor) {
                out.push_back({top.word, top.weight * p});
                found += top.weight * p;
            } else {
                Prefix ext{top.weight * p, top.word};
                ext.word.push_back(next);
                open.push(std::move(ext));
            }
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const RenewalWord& a, const RenewalWord& b) { return a.weight > b.weight; });
    return out;
}

ChiSquareResult excursion_word_test(const ChainSpec& chain, int anchor, std::size_t n_samples, Rng& rng,
                                    double mass) {
    const auto words = renewal_words(chain, anchor, mass);
    std::map<std::vector<int>, std::size_t> index;
    double listed = 0.0;
    for (std::size_t i = 0; i < words.size(); ++i) {
        index.emplace(words[i].word, i);
        listed += words[i].weight;
    }
    std::vector<double> observed(words.size() + 1, 0.0);
    std::vector<double> expected(words.size() + 1, 0.0);
    const ChainSampler sampler(chain);
    for (std::size_t s = 0; s < n_samples; ++s) {
        const auto ex = sample_excursion(chain, sampler, anchor, rng);
        const auto it = index.find(ex.word);
        observed[it == index.end() ? words.size() : it->second] += 1.0;
    }
    const double n = static_cast<double>(n_samples);
    for (std::size_t i = 0; i < words.size(); ++i) expected[i] = words[i].weight * n;
    expected.back() = std::max(0.0, 1.0 - listed) * n;
    return chi_square_gof(observed, expected);
}

ExcursionStats excursion_stats(const ChainSpec& chain, int anchor, std::size_t n_samples, Rng& rng,
                               std::vector<double> deltas) {
    if (!is_irreducible(chain.trans)) throw Error(ErrorKind::Reducible, "excursion_stats: chain is reducible");
    if (n_samples < 2) throw Error(ErrorKind::InsufficientData, "excursion_stats: need at least two excursions");
    const int n = chain.size();
    const ChainSampler sampler(chain);

    std::vector<double> taus;
    taus.reserve(n_samples);
    Mat visits = Mat::Zero(n, static_cast<Eigen::Index>(n_samples));
    RunningStats log_gauge;
    std::vector<RunningStats> delta_stats(deltas.size());
    for (std::size_t s = 0; s < n_samples; ++s) {
        const Excursion ex = sample_excursion(chain, sampler, anchor, rng);
        taus.push_back(static_cast<double>(ex.word.size()));
        for (int e : ex.word) visits(e, static_cast<Eigen::Index>(s)) += 1.0;
        const double gauge = norm_gauge(ex.element);
        log_gauge.push(std::log(gauge));
        for (std::size_t i = 0; i < deltas.size(); ++i) delta_stats[i].push(std::pow(gauge, deltas[i]));
    }

    ExcursionStats st;
    st.samples = n_samples;
    RunningStats tau_stats;
    for (double t : taus) tau_stats.push(t);
    st.mean_tau = tau_stats.mean();
    st.mean_tau_se = tau_stats.std_error();

    // ratio estimator pi(e') = sum visits / sum tau, delta-method standard error
    st.pi_estimate = Vec(n);
    st.pi_se = Vec(n);
    const double ns = static_cast<double>(n_samples);
    for (int e = 0; e < n; ++e) {
        const double pi_hat = visits.row(e).sum() / (tau_stats.mean() * ns);
        RunningStats resid;
        for (std::size_t s = 0; s < n_samples; ++s) resid.push(visits(e, static_cast<Eigen::Index>(s)) - pi_hat * taus[s]);
        st.pi_estimate(e) = pi_hat;
        st.pi_se(e) = resid.stddev() / (tau_stats.mean() * std::sqrt(ns));
    }
    st.log_moment = log_gauge.mean();
    st.log_moment_se = log_gauge.std_error();
    st.deltas = std::move(deltas);
    for (const auto& d : delta_stats) st.delta_moments.push_back(d.mean());

    // fit log P(tau > l) ~ a + l log(rate) over levels with at least 10 survivors
    std::vector<double> ls, logs;
    const double max_tau = *std::max_element(taus.begin(), taus.end());
    for (double l = 1.0; l < max_tau; l += 1.0) {
        const double survivors = static_cast<double>(std::count_if(taus.begin(), taus.end(), [l](double t) { return t > l; }));
        if (survivors < 10.0) break;
        ls.push_back(l);
        logs.push_back(std::log(survivors / ns));
    }
    if (ls.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < ls.size(); ++i) {
            mx += ls[i];
            my += logs[i];
        }
        mx /= static_cast<double>(ls.size());
        my /= static_cast<double>(ls.size());
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < ls.size(); ++i) {
            sxy += (ls[i] - mx) * (logs[i] - my);
            sxx += (ls[i] - mx) * (ls[i] - mx);
        }
        st.tail_rate = std::exp(sxy / sxx);
    }
    st.lag1_autocorrelation = autocorrelation(taus, 1);
    return st;
}

RenewalIdentity renewal_t_identity(const ChainSpec& chain, int anchor, std::size_t n_samples, Rng& rng, int m_dim,
                                   int n_dim) {
    const Vec pi = stationary_distribution(chain);
    RenewalIdentity r;
    for (int e = 0; e < chain.size(); ++e) {
        const PElement p = aku_decompose(chain.coding[static_cast<std::size_t>(e)], m_dim, n_dim);
        r.drift += p.t * pi(e);
    }
    // Kac: E_e[tau_e] = 1 / pi(e)
    r.rhs = r.drift / pi(anchor);

    const ChainSampler sampler(chain);
    RunningStats lhs;
    for (std::size_t s = 0; s < n_samples; ++s) {
        const Excursion ex = sample_excursion(chain, sampler, anchor, rng);
        lhs.push(flow_time(ex.element, m_dim));
    }
    r.lhs = lhs.mean();
    r.lhs_se = lhs.std_error();
    const double diff = r.lhs - r.rhs;
    if (r.lhs_se > 0.0)
        r.z_score = diff / r.lhs_se;
    else
        r.z_score = std::abs(diff) <= 1e-12 * std::max(1.0, std::abs(r.rhs)) ? 0.0 : INFINITY;
    return r;
}

}  // namespace latwalk
