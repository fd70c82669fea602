#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace latwalk {

class Rng;

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Matrix of the k-th exterior power in the basis e_I, I ranging over the
/// k-subsets of {0..d-1} in lexicographic order. Entry (I, J) is the minor of
/// the base matrix on rows I, columns J.
struct WedgeMat {
    int base_dim = 0;
    int grade = 0;
    Mat entries;
};

/// k-subsets of {0..n-1}, lexicographic.
std::vector<std::vector<int>> k_subsets(int n, int k);

std::size_t binomial(int n, int k);

WedgeMat wedge_power(const Mat& m, int k);

/// Plucker coordinates of the column span of `v` (D x k): all k x k row minors,
/// rows ordered like wedge_power's basis.
Vec plucker(const Mat& v);

/// Matrix of X -> g X g^{-1} on traceless d x d matrices. Basis: E_ij for
/// i != j in lexicographic order, then H_i = E_ii - E_{i+1,i+1}.
Mat adjoint_matrix(const Mat& g);

/// Index of E_ij (i != j) in the adjoint basis.
int adjoint_offdiag_index(int d, int i, int j);

/// Singular values in decreasing order.
Vec singular_values(const Mat& m);

double operator_norm(const Mat& m);

/// max(||m||, ||m^{-1}||) with operator norms.
double norm_gauge(const Mat& m);

struct OrthoStep {
    Mat q;
    Vec log_norms;
};

/// One step of QR re-orthonormalization: g q = q' R with R upper triangular
/// and positive diagonal; returns q' and log diag(R).
OrthoStep ortho_product_step(const Mat& q, const Mat& g);

/// Scales m so that |det m| = 1. Throws on a singular input.
Mat renormalize_det(const Mat& m);

bool is_finite(const Mat& m);

/// Residual max |m^T m - 1|.
double orthogonality_residual(const Mat& m);

/// Gaussian random matrix rescaled to determinant 1.
Mat random_sl(int d, Rng& rng);

/// Haar-random orthogonal matrix (QR of a Gaussian matrix with sign fix).
Mat random_orthogonal(int d, Rng& rng);

/// Haar-random special orthogonal matrix.
Mat random_special_orthogonal(int d, Rng& rng);

/// Uniform point on the unit sphere in R^n.
Vec random_unit_vector(int n, Rng& rng);

}  // namespace latwalk
