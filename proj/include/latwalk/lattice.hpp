#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "json.hpp"

#include "latwalk/linalg.hpp"
#include "latwalk/markov.hpp"
#include "latwalk/stats.hpp"

namespace latwalk {

/// A unimodular lattice g Z^d, represented by a basis whose columns generate
/// it. Bases with determinant -1 are accepted and a column is negated so the
/// stored basis has determinant +1.
class LatticePoint {
public:
    explicit LatticePoint(Mat basis, bool reduced = false);
    static LatticePoint standard(int d);

    const Mat& basis() const { return basis_; }
    bool reduced() const { return reduced_; }
    int dim() const { return static_cast<int>(basis_.rows()); }

private:
    Mat basis_;
    bool reduced_ = false;
};

inline constexpr double kUnimodularTol = 1e-8;
inline constexpr double kLllDelta = 0.99;
inline constexpr int kMaxEnumerationDim = 6;

/// LLL reduction (delta = 0.99). If `transform` is non-null it receives the
/// integer change of basis U with reduced = basis * U.
LatticePoint reduce_basis(const LatticePoint& x, Mat* transform = nullptr);

enum class Norm { Euclidean, Sup };

struct ShortestVector {
    Vec vector;
    Eigen::VectorXi coefficients;  // in the reduced basis
    double length = 0.0;
};

/// Exact shortest nonzero vector by enumeration on a reduced basis. Ties are
/// broken by the lexicographically smallest coefficient vector.
ShortestVector shortest_vector(const LatticePoint& x, Norm norm);

/// Lower bound on the shortest Euclidean length from Gram-Schmidt norms of a
/// reduced basis; usable in any dimension.
double shortest_length_lower_bound(const LatticePoint& x);

/// #{v in lattice \ 0 : |v|_2 <= R}.
std::uint64_t siegel_transform(const LatticePoint& x, double radius);

/// Volume of the Euclidean ball of radius R in R^d (the Haar average of the
/// Siegel transform).
double ball_volume(int d, double radius);

/// max |U - round(U)| for U = basis(x)^{-1} basis(y), or +inf when round(U)
/// is not unimodular.
double lattice_residual(const LatticePoint& x, const LatticePoint& y);
bool lattice_equal(const LatticePoint& x, const LatticePoint& y, double tol = 1e-8);

/// Mahler set membership: every nonzero vector has sup norm >= eps.
bool in_mahler_set(const LatticePoint& x, double eps);

inline constexpr int kLatticeBins = 16;
/// Bin of log(shortest Euclidean length) on [log 0.05, log 1.2], clamped.
int lattice_bin(double shortest_euclidean);

struct WalkObservables {
    std::vector<double> eps_list{0.05, 0.1, 0.2};
    std::vector<double> radii{1.0, 1.5, 2.0};
    bool joint = true;
    /// Joint (state, bin) counts are taken every `joint_stride` steps to
    /// weaken serial correlation in the independence test.
    std::size_t joint_stride = 10;
    /// Siegel batch length for standard errors.
    std::size_t batch_length = 1000;
};

/// Mergeable record of a walk. All tallies are integers so merging is exact,
/// associative and commutative; the default-constructed value is the identity.
struct EmpiricalAccumulator {
    int dim = 0;
    int states = 0;
    std::uint64_t step_count = 0;
    std::vector<double> eps;
    std::vector<std::uint64_t> keps_counts;  // steps with shortest sup norm < eps
    std::vector<double> radii;
    std::vector<std::uint64_t> siegel_sums;
    // Completed Siegel batches: count, sum of batch sums and of their squares.
    std::uint64_t batch_length = 0;
    std::uint64_t batches = 0;
    std::vector<std::uint64_t> batch_sum;
    std::vector<long double> batch_sq_sum;
    // Row-major states x kLatticeBins.
    std::vector<std::uint64_t> joint_counts;

    static EmpiricalAccumulator empty_for(int dim, int states, const WalkObservables& obs);
    void merge(const EmpiricalAccumulator& other);
    bool empty() const { return step_count == 0; }
};

void to_json(nlohmann::json& j, const EmpiricalAccumulator& acc);
void from_json(const nlohmann::json& j, EmpiricalAccumulator& acc);

struct TracePoint {
    std::uint64_t step = 0;
    double shortest = 0.0;
};

/// Simulates the action chain (e_n, x_n), x_{n+1} = g_{e_n} x_n, recording
/// (e_n, x_n) for n = 0..n_steps-1. Throws Overflow if a reduced basis entry
/// exceeds 1e12. If `trace` is given, the shortest Euclidean length is
/// appended every `trace_stride` steps.
EmpiricalAccumulator run_walk(const ChainSpec& chain, const LatticePoint& x0, std::size_t n_steps,
                              const WalkObservables& observables, Rng& rng, std::vector<TracePoint>* trace = nullptr,
                              std::size_t trace_stride = 100);

struct WalkReplicas {
    EmpiricalAccumulator merged;
    std::vector<EmpiricalAccumulator> per_replica;
    std::vector<std::vector<TracePoint>> traces;
};

/// Replica r uses Rng(seed, first_replica + r); results do not depend on
/// scheduling.
WalkReplicas run_walk_replicas(const ChainSpec& chain, const LatticePoint& x0, std::size_t n_steps,
                               const WalkObservables& observables, std::uint64_t seed, std::size_t replicas,
                               std::size_t trace_stride = 0, std::size_t first_replica = 0);

struct SiegelSummary {
    double radius = 0.0;
    double average = 0.0;
    double std_error = 0.0;
    double target = 0.0;
    double relative_error = 0.0;
};

struct EquidistributionReport {
    std::uint64_t step_count = 0;
    std::vector<double> eps;
    std::vector<double> escape_fractions;
    std::vector<SiegelSummary> siegel;
    ChiSquareResult independence;
    std::size_t occupied_bins = 0;
};

/// Throws InsufficientData for fewer than 1e4 steps.
EquidistributionReport equidistribution_report(const EmpiricalAccumulator& acc);

}  // namespace latwalk
