#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latwalk/linalg.hpp"
#include "latwalk/markov.hpp"

namespace latwalk {

/// Linear representation used to push the coded matrices forward.
struct Representation {
    enum class Kind { Standard, Adjoint, Wedge };
    Kind kind = Kind::Standard;
    int grade = 0;  // only for Wedge

    static Representation standard() { return {Kind::Standard, 0}; }
    static Representation adjoint() { return {Kind::Adjoint, 0}; }
    static Representation wedge(int k) { return {Kind::Wedge, k}; }
    /// "standard", "adjoint" or "wedge:k".
    static Representation parse(const std::string& text);

    Mat operator()(const Mat& g) const;
    int dim(int base_dim) const;
    std::string name() const;
};

/// Representation sizes above this are rejected.
inline constexpr std::size_t kMaxRepresentationDim = 1000;

struct LyapunovReport {
    std::vector<double> exponent_estimates;  // nats/step, nonincreasing
    std::vector<double> std_errors;
    std::size_t steps = 0;
    std::size_t replicas = 0;
    /// Per-replica estimates, replica-major.
    std::vector<std::vector<double>> per_replica;
    /// Index k holds (1/n) log ||wedge^k(product)|| grown directly from wedge
    /// matrices, for k = 1..D-1 with C(D, k) small enough; NaN at index 0 and
    /// where skipped.
    std::vector<double> direct_partial_sums;
    std::vector<double> direct_partial_sums_se;
};

LyapunovReport lyapunov_spectrum(const ChainSpec& chain, const Representation& rep, std::size_t n_steps,
                                 std::size_t n_replicas, std::uint64_t seed, bool direct_check = false);

struct GrowthRate {
    double rate = 0.0;
    double std_error = 0.0;
};

/// Mean over replicas of (1/n) log(||rho(Y_n ... Y_1) v|| / ||v||).
GrowthRate vector_growth_rate(const ChainSpec& chain, const Representation& rep, const Vec& v, std::size_t n_steps,
                              std::size_t n_replicas, std::uint64_t seed);

struct ExpansionVerdict {
    int grade = 0;
    double min_sampled_rate = 0.0;
    double min_rate_se = 0.0;
    /// Orthonormal D x k frame spanning the witness; its Plucker vector is the
    /// sampled pure wedge.
    Mat witness;
    Vec witness_plucker;
    double witness_rate = 0.0;
    double witness_rate_se = 0.0;
    double mc_criterion_value = 0.0;
    double mc_criterion_se = 0.0;
    bool counterexample = false;
    std::size_t candidates = 0;
};

struct ExpansionOptions {
    std::size_t n_steps = 10'000;
    std::size_t n_samples = 200;
    std::size_t mc_block = 20;
    std::size_t mc_samples = 2'000;
    std::size_t batches = 20;
    /// Also test coordinate wedges e_I when C(D, k) does not exceed this.
    std::size_t max_coordinate_candidates = 128;
};

/// Statistical falsifier for uniform expansion on the Grassmannian of k-planes
/// of the representation. A counterexample is reported when some candidate's
/// growth rate, or the N-step mean log expansion at the witness, cannot be
/// shown positive at three standard errors. `counterexample == false` is
/// evidence, not a proof.
ExpansionVerdict grassmannian_expansion_check(const ChainSpec& chain, const Representation& rep, int k,
                                              const ExpansionOptions& options, std::uint64_t seed);

}  // namespace latwalk
