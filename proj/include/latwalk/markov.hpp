#pragma once

#include <string>
#include <vector>

#include "latwalk/linalg.hpp"
#include "latwalk/rng.hpp"
#include "latwalk/stats.hpp"

namespace latwalk {

/// Finite Markov chain with a coding map into GL_d.
///
/// Transition storage is column-stochastic: trans(to, from) is the probability
/// of moving from state `from` to state `to`, so every column sums to one and a
/// stationary distribution pi satisfies trans * pi = pi.
///
/// The coded process is Y_n = coding[w_{n-1}]; a walk applies coding[w_0]
/// first.
struct ChainSpec {
    std::vector<std::string> labels;
    Mat trans;
    std::vector<Mat> coding;
    Vec start;

    int size() const { return static_cast<int>(trans.cols()); }
    int dim() const { return coding.empty() ? 0 : static_cast<int>(coding.front().rows()); }
    int index_of(const std::string& label) const;

    /// i.i.d. process with law sum_i weights[i] delta_{elements[i]}, realized as
    /// a chain whose every column equals the law.
    static ChainSpec iid(std::vector<Mat> elements, std::vector<double> weights);
};

struct ChainReport {
    double stochastic_residual = 0.0;
    bool irreducible = false;
    /// Finite irreducible chains are positive and exponentially recurrent.
    bool exponentially_recurrent = false;
    /// States reachable in one step from every state.
    std::vector<int> universally_accessible;
};

/// Throws Validation (naming the offending state) on negative entries,
/// non-stochastic columns, a bad start vector or inconsistent coding.
ChainReport validate_chain(const ChainSpec& chain);

bool is_irreducible(const Mat& trans);

/// Unique stationary distribution by a direct linear solve. Throws Reducible
/// for reducible chains.
Vec stationary_distribution(const ChainSpec& chain);

/// Samples successive states; owns no randomness.
class ChainSampler {
public:
    explicit ChainSampler(const ChainSpec& chain);

    int draw_start(Rng& rng) const;
    int step(int from, Rng& rng) const;

private:
    std::vector<std::vector<double>> columns_;
    std::vector<double> start_;
};

/// One excursion from the anchor back to it. `word` is stored in time order:
/// word[0] is the anchor, word[k] the state visited k steps later. `element`
/// is coding[word[n-1]] * ... * coding[word[0]].
struct Excursion {
    std::vector<int> word;
    double weight = 1.0;
    Mat element;
};

inline constexpr long kExcursionStepCap = 10'000'000;

Excursion sample_excursion(const ChainSpec& chain, const ChainSampler& sampler, int anchor, Rng& rng);
Excursion sample_excursion(const ChainSpec& chain, int anchor, Rng& rng);

struct RenewalWord {
    std::vector<int> word;
    double weight = 0.0;
};

/// Renewal words of the anchor in decreasing weight order until the listed
/// weights reach `mass` (or `max_words` is hit).
std::vector<RenewalWord> renewal_words(const ChainSpec& chain, int anchor, double mass = 0.999,
                                       std::size_t max_words = 100'000);

/// Goodness of fit of sampled excursion words against their renewal weights.
/// Words beyond the listed mass are pooled into one remainder cell.
ChiSquareResult excursion_word_test(const ChainSpec& chain, int anchor, std::size_t n_samples, Rng& rng,
                                    double mass = 0.999);

struct ExcursionStats {
    std::size_t samples = 0;
    double mean_tau = 0.0;
    double mean_tau_se = 0.0;
    Vec pi_estimate;
    Vec pi_se;
    double log_moment = 0.0;  // E[log N(g_w)]
    double log_moment_se = 0.0;
    std::vector<double> deltas;
    std::vector<double> delta_moments;  // E[N(g_w)^delta]
    double tail_rate = 0.0;             // fitted geometric rate of P(tau > l)
    double lag1_autocorrelation = 0.0;  // of consecutive excursion lengths
};

ExcursionStats excursion_stats(const ChainSpec& chain, int anchor, std::size_t n_samples, Rng& rng,
                               std::vector<double> deltas = {0.05, 0.1, 0.25, 0.5, 1.0});

struct RenewalIdentity {
    double lhs = 0.0;  // Monte Carlo E_e[t(g over one excursion)]
    double lhs_se = 0.0;
    double rhs = 0.0;  // E_e[tau_e] * sum_e' t(g_e') pi(e')
    double z_score = 0.0;
    double drift = 0.0;  // sum_e' t(g_e') pi(e')
};

/// Every coded element must lie in P for the given block sizes.
RenewalIdentity renewal_t_identity(const ChainSpec& chain, int anchor, std::size_t n_samples, Rng& rng,
                                   int m_dim, int n_dim);

}  // namespace latwalk
