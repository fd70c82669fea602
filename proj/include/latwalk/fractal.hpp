#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "latwalk/groups.hpp"
#include "latwalk/markov.hpp"
#include "latwalk/mp.hpp"
#include "latwalk/stats.hpp"

namespace latwalk {

struct GdifsEdge {
    std::string id;
    int from = 0;  // i(e)
    int to = 0;    // t(e)
    Similarity map;
};

/// Axis-aligned box in R^{M x N} used by the open-set spot check.
struct VertexBox {
    Mat lower;
    Mat upper;
};

/// Graph-directed similarity IFS on M x N matrices. phi_e maps the piece at
/// t(e) into the piece at i(e); an edge path satisfies t(w_{j-1}) = i(w_j).
struct GDIFS {
    int m_dim = 1;
    int n_dim = 1;
    std::vector<std::string> vertices;
    std::vector<GdifsEdge> edges;
    std::vector<std::optional<VertexBox>> boxes;  // empty or one per vertex

    int vertex_index(const std::string& name) const;
    double max_ratio() const;
    bool strictly_contracting() const { return max_ratio() < 1.0; }
};

/// Loads {m_dim, n_dim, vertices, edges: [{id, from, to, ratio, o1, o2,
/// translation}], boxes?}. Throws Validation listing every problem found.
GDIFS gdifs_from_json(const nlohmann::json& j);
nlohmann::json gdifs_to_json(const GDIFS& g);

/// Problems found by structural validation (empty when valid): shapes,
/// positive ratios, orthogonal blocks, connectivity.
std::vector<std::string> validate_gdifs(const GDIFS& g);
bool is_connected(const GDIFS& g);

/// Randomized falsifier for irreducibility: searches affine subspaces spanned
/// by fixed points of edge-path compositions of length <= 4 for an invariant
/// proper family. Returns a description of the family if one is found.
std::optional<std::string> find_invariant_subspaces(const GDIFS& g);

/// Heuristic open-set check: samples points in each vertex box and tests that
/// the images phi_e(box) for edges leaving a vertex are pairwise disjoint and
/// lie inside the box. Returns false on the first violation found.
bool open_set_spot_check(const GDIFS& g, std::size_t samples, Rng& rng);

/// A(s)_{u,v} = sum over edges u -> v of r_e^s.
Mat dimension_matrix(const GDIFS& g, double s);
/// Perron root of a nonnegative irreducible matrix with its right eigenvector
/// (positive, max entry 1).
struct Perron {
    double root = 0.0;
    Vec vector;
};
Perron perron(const Mat& a);

/// Root s of rho(A(s)) = 1 (0 if rho(A(0)) <= 1).
double hausdorff_dimension(const GDIFS& g);

/// Edge-shift chain with p(e -> e') = r_{e'}^s h_{t(e')} / h_{i(e')} when
/// t(e) = i(e'), started from its stationary law. Coding g_e = phi_e^{-1}.
ChainSpec wang_measure(const GDIFS& g);

/// phi_e^{-1} as an element of P.
Mat coded_element(const Similarity& phi);

/// An infinite edge path, given lazily.
using EdgePath = std::function<int(std::size_t)>;
/// prefix followed by cycle repeated forever (cycle may be empty only if the
/// projection converges within the prefix).
EdgePath eventually_periodic(std::vector<int> prefix, std::vector<int> cycle);

struct Projection {
    Mat point;
    double error_bound = 0.0;
    std::size_t terms = 0;
};

/// Pi(w) = lim phi_{w_0} ... phi_{w_{n-1}}(x). For a strictly contracting
/// IFS the bound is prod(r) * (|x| + R0) with R0 = max|b| / (1 - max r).
/// Otherwise `mean_log_ratio` (< 0) must be supplied and the bound is the
/// heuristic prod(r) * (|x| + max|b| / (1 - exp(mean_log_ratio))).
Projection natural_project(const GDIFS& g, const EdgePath& omega, double tol, const Mat& seed = Mat(),
                           std::optional<double> mean_log_ratio = std::nullopt);

struct ProjectionR {
    MatR point;
    Real error_bound;
    std::size_t terms = 0;
};
/// Extended-precision projection; similarity coefficients are taken as the
/// exact binary values of the stored doubles.
ProjectionR natural_project_mp(const GDIFS& g, const EdgePath& omega, const Real& tol);

inline constexpr std::size_t kProjectionTermCap = 1'000'000;

/// Draws an edge path of the given length from a chain over the edges.
std::vector<int> sample_path(const ChainSpec& chain, std::size_t length, Rng& rng);

// ---------------------------------------------------------------------------
// Diophantine battery

struct DiophThresholds {
    double badly_approx_min = 0.1;
    double dirichlet_lambda = 0.95;
    double generic_rel_tol = 0.1;
};

struct KLambdaExit {
    double lambda = 0.0;
    bool outside_at_end = false;
    /// Last sampled time with shortest sup norm >= lambda; -1 if never.
    double last_exit_time = -1.0;
};

struct DiophCurve {
    std::vector<long> q_max;
    /// min over 0 < |q| <= Q of |q|^{N/M} dist(alpha q, Z^M); nonincreasing.
    std::vector<double> cumulative;
    /// Same minimum restricted to Q/2 < |q| <= Q (the value at scale Q).
    std::vector<double> shell;
};

struct DiophReport {
    Mat alpha;
    double horizon = 0.0;
    double dt = 0.0;
    std::size_t samples = 0;
    double trajectory_min_shortest = 0.0;  // sup norm, as in K_eps
    double trajectory_min_shortest_euclidean = 0.0;
    std::vector<KLambdaExit> escape;
    DiophCurve direct_search_curve;
    std::vector<double> radii;
    std::vector<double> siegel_time_average;
    std::vector<double> siegel_targets;
    bool badly_approx_evidence = false;
    bool dirichlet_improvable_evidence = false;
    bool generic_type_evidence = false;
    /// (t, shortest sup norm) at every sample.
    std::vector<std::pair<double, double>> trace;
};

struct TrajectoryOptions {
    double horizon = 30.0;
    double dt = 0.05;
    std::vector<double> eps_list{0.1, 0.5, 0.95};
    std::vector<double> radii{1.0, 1.5, 2.0};
    DiophThresholds thresholds;
    long direct_q_max = 0;  // 0 skips the direct search
};

/// Samples a_{j dt} u_alpha Z^d for j dt <= T. The flow runs in extended
/// precision so T up to 200 is reliable.
DiophReport trajectory_report(const MatR& alpha, const TrajectoryOptions& options);
DiophReport trajectory_report(const Mat& alpha, const TrajectoryOptions& options);

/// Doubling schedule Q_j = ceil(Q_max / 2^j) (ascending).
DiophCurve direct_dioph_search(const MatR& alpha, long q_max);
DiophCurve direct_dioph_search(const Mat& alpha, long q_max);

struct CfExpansion {
    std::vector<int> digits;
    /// The input is rational within its precision; the last digit closes it.
    bool terminated = false;
    /// Precision ran out before n digits.
    bool precision_exhausted = false;
};

/// Digits of a number known to lie in [lo, hi] within (0, 1): emitted while
/// every point of the interval shares them.
CfExpansion cf_digits(const Real& lo, const Real& hi, std::size_t n);
/// Double input is treated as the interval x +- 2 ulp.
CfExpansion cf_digits(double x, std::size_t n);

/// Gauss-Kuzmin law P(a = k) = log2(1 + 1/(k(k+2))).
double gauss_probability(int k);

struct GaussStats {
    std::size_t points = 0;
    std::size_t digits = 0;
    int max_digit_bin = 0;                // bins 1..max_digit_bin-1 and a tail bin
    std::vector<double> frequencies;      // index k-1
    std::vector<double> predicted;
    std::vector<double> deviations;
    ChiSquareResult chi_square;
    double digit1_frequency = 0.0;
    bool non_generic = false;  // all digits identical
};

/// Pooled digit statistics. Throws InsufficientData for fewer than 100 points.
GaussStats gauss_statistics(const std::vector<std::vector<int>>& expansions, int max_digit_bin = 11);
GaussStats gauss_statistics(const std::vector<double>& points, std::size_t digits_per_point, int max_digit_bin = 11);

struct MagicFormulaResult {
    double residual = 0.0;
    double flow_time = 0.0;  // t_n
    std::size_t terms = 0;
};

/// Builds k(g)^{-1} u_{Pi(T^n w)} g_{w|n} and a_{t_n} u_{Pi(w)} in extended
/// precision and returns their lattice residual. `omega` must be a path long
/// enough that Pi(T^n w) reaches `tol` within it.
MagicFormulaResult magic_formula_check(const GDIFS& g, const std::vector<int>& omega, std::size_t n,
                                       double tol = 1e-10);

/// t_n = t(g_{w|n}) for n = 0..len(w).
std::vector<double> flow_times(const GDIFS& g, const std::vector<int>& omega);

}  // namespace latwalk
