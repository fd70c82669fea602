#pragma once

#include <array>

#include "latwalk/linalg.hpp"

namespace latwalk {

/// Element a_t k u_alpha of the block upper-triangular group P = AKU inside
/// GL_{M+N}, with
///   a_t     = diag(e^{t/M} 1_M, e^{-t/N} 1_N),
///   k       = o1 (+) o2,
///   u_alpha = [[1_M, -alpha], [0, 1_N]].
/// Elements built from orientation-preserving data have determinant 1; in
/// general |det| = 1 (det = det o1 * det o2).
struct PElement {
    int m_dim = 1;
    int n_dim = 1;
    double t = 0.0;
    Mat o1;
    Mat o2;
    Mat alpha;

    static PElement identity(int m_dim, int n_dim);
};

/// beta -> ratio * o1 * beta * o2 + translation on M x N matrices.
struct Similarity {
    int m_dim = 1;
    int n_dim = 1;
    double ratio = 1.0;
    Mat o1;
    Mat o2;
    Mat translation;

    bool contracting() const { return ratio < 1.0; }
    Mat apply(const Mat& beta) const;
    /// this o other
    Similarity compose(const Similarity& other) const;
    Similarity inverse() const;

    static Similarity scalar(double ratio, double translation);
};

/// Tolerances used when recognizing P-membership.
inline constexpr double kLowerBlockTol = 1e-9;
inline constexpr double kOrthoTol = 1e-8;

Mat aku_compose(const PElement& p);

/// Exact inverse of aku_compose. Throws NotInP if g is not block upper
/// triangular or its diagonal blocks are not scaled orthogonal matrices.
PElement aku_decompose(const Mat& g, int m_dim, int n_dim);

/// Flow time t(g) = log |det(top-left block)|; a homomorphism P -> (R, +).
double flow_time(const Mat& g, int m_dim);

/// g . beta = e^{t(1/M + 1/N)} o1 (beta - alpha) o2^{-1}.
Mat similarity_action(const PElement& p, const Mat& beta);

PElement multiply(const PElement& p, const PElement& q);
PElement inverse(const PElement& p);

/// Scalar orthogonal blocks are normalized to +1: for M = 1 the sign of o1 is
/// moved to o2, for N = 1 (M > 1) the sign of o2 is moved to o1.
Similarity normalize_signs(const Similarity& s);

/// Group element whose action on M x N matrices equals the similarity.
PElement similarity_to_group(const Similarity& s);

Similarity group_to_similarity(const PElement& p);

/// [[c o, y], [0, c^{-d}]] with c > 1, o in SO_d, y in R^d.
Mat make_block_element(double c, const Mat& o, const Vec& y);

/// g1 = diag(3, 2, 1/6), g2 = g1 + E_13, g3 = g1 + E_23.
std::array<Mat, 3> sl3_paper_example();

}  // namespace latwalk
