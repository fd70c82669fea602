#include "latwalk/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "latwalk/error.hpp"
#include "latwalk/rng.hpp"

namespace latwalk {

std::vector<std::vector<int>> k_subsets(int n, int k) {
    std::vector<std::vector<int>> out;
    if (k < 0 || k > n) return out;
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
        out.push_back(idx);
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
        if (i < 0) break;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

std::size_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::size_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
    return r;
}

namespace {

double minor_of(const Mat& m, const std::vector<int>& rows, const std::vector<int>& cols) {
    const auto k = static_cast<Eigen::Index>(rows.size());
    if (k == 1) return m(rows[0], cols[0]);
    if (k == 2)
        return m(rows[0], cols[0]) * m(rows[1], cols[1]) - m(rows[0], cols[1]) * m(rows[1], cols[0]);
    Mat sub(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            sub(i, j) = m(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
    return sub.partialPivLu().determinant();
}

}  // namespace

WedgeMat wedge_power(const Mat& m, int k) {
    const int d = static_cast<int>(m.rows());
    if (m.cols() != m.rows()) throw Error(ErrorKind::Dimension, "wedge_power: matrix not square");
    if (k < 1 || k > d - 1)
        throw Error(ErrorKind::Grade,
                    "wedge_power: grade " + std::to_string(k) + " outside [1, " + std::to_string(d - 1) + "]");
    const auto subsets = k_subsets(d, k);
    const auto n = static_cast<Eigen::Index>(subsets.size());
    WedgeMat w{d, k, Mat(n, n)};
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            w.entries(i, j) = minor_of(m, subsets[static_cast<std::size_t>(i)], subsets[static_cast<std::size_t>(j)]);
    return w;
}

Vec plucker(const Mat& v) {
    const int rows = static_cast<int>(v.rows());
    const int k = static_cast<int>(v.cols());
    const auto subsets = k_subsets(rows, k);
    std::vector<int> all_cols(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) all_cols[static_cast<std::size_t>(j)] = j;
    Vec out(static_cast<Eigen::Index>(subsets.size()));
    for (std::size_t i = 0; i < subsets.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = minor_of(v, subsets[i], all_cols);
    return out;
}

int adjoint_offdiag_index(int d, int i, int j) {
    // row i contributes d-1 entries, skipping the diagonal
    return i * (d - 1) + (j < i ? j : j - 1);
}

Mat adjoint_matrix(const Mat& g) {
    const int d = static_cast<int>(g.rows());
    if (g.cols() != g.rows() || d < 2) throw Error(ErrorKind::Dimension, "adjoint_matrix: need square d >= 2");
    Eigen::PartialPivLU<Mat> lu(g);
    if (!(std::abs(lu.determinant()) > 0.0) || !std::isfinite(lu.determinant()))
        throw Error(ErrorKind::Inversion, "adjoint_matrix: singular matrix");
    const Mat ginv = lu.inverse();
    const int dim = d * d - 1;
    Mat ad = Mat::Zero(dim, dim);

    auto coordinates = [&](const Mat& x, Eigen::Index col) {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                if (i != j) ad(adjoint_offdiag_index(d, i, j), col) = x(i, j);
        // X = sum c_i H_i on the diagonal gives c_i = X_00 + ... + X_ii
        double running = 0.0;
        for (int i = 0; i < d - 1; ++i) {
            running += x(i, i);
            ad(d * (d - 1) + i, col) = running;
        }
    };

    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            // g E_ij g^{-1} = (g e_i)(e_j^T g^{-1})
            const Mat x = g.col(i) * ginv.row(j);
            coordinates(x, adjoint_offdiag_index(d, i, j));
        }
    for (int i = 0; i < d - 1; ++i) {
        const Mat x = g.col(i) * ginv.row(i) - g.col(i + 1) * ginv.row(i + 1);
        coordinates(x, d * (d - 1) + i);
    }
    return ad;
}

Vec singular_values(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues();
}

double operator_norm(const Mat& m) {
    return singular_values(m)(0);
}

double norm_gauge(const Mat& m) {
    const Vec s = singular_values(m);
    const double smin = s(s.size() - 1);
    if (!(smin > 0.0) || smin < 1e-300 * s(0))
        throw Error(ErrorKind::Inversion, "norm_gauge: singular matrix");
    return std::max(s(0), 1.0 / smin);
}

OrthoStep ortho_product_step(const Mat& q, const Mat& g) {
    const Mat gq = g * q;
    Eigen::HouseholderQR<Mat> qr(gq);
    const auto k = gq.cols();
    Mat r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    Mat qnew = qr.householderQ() * Mat::Identity(gq.rows(), k);
    OrthoStep out{Mat(gq.rows(), k), Vec(k)};
    for (Eigen::Index i = 0; i < k; ++i) {
        const double rii = r(i, i);
        if (!(std::abs(rii) > std::numeric_limits<double>::min()) || !std::isfinite(rii))
            throw Error(ErrorKind::Decomposition, "ortho_product_step: rank-deficient product");
        const double sign = rii < 0.0 ? -1.0 : 1.0;
        out.q.col(i) = sign * qnew.col(i);
        out.log_norms(i) = std::log(std::abs(rii));
    }
    return out;
}

Mat renormalize_det(const Mat& m) {
    const double det = m.determinant();
    if (!(std::abs(det) > 0.0) || !std::isfinite(det))
        throw Error(ErrorKind::Inversion, "renormalize_det: singular matrix");
    return m / std::pow(std::abs(det), 1.0 / static_cast<double>(m.rows()));
}

bool is_finite(const Mat& m) {
    return m.allFinite();
}

double orthogonality_residual(const Mat& m) {
    return (m.transpose() * m - Mat::Identity(m.cols(), m.cols())).cwiseAbs().maxCoeff();
}

Mat random_sl(int d, Rng& rng) {
    Mat m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
    if (m.determinant() < 0.0) m.col(0) *= -1.0;
    return renormalize_det(m);
}

Mat random_orthogonal(int d, Rng& rng) {
    Mat m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
    Eigen::HouseholderQR<Mat> qr(m);
    Mat q = qr.householderQ();
    const Mat r = qr.matrixQR();
    for (int i = 0; i < d; ++i)
        if (r(i, i) < 0.0) q.col(i) *= -1.0;
    return q;
}

Mat random_special_orthogonal(int d, Rng& rng) {
    Mat q = random_orthogonal(d, rng);
    if (q.determinant() < 0.0) q.col(0) *= -1.0;
    return q;
}

Vec random_unit_vector(int n, Rng& rng) {
    Vec v(n);
    do {
        for (int i = 0; i < n; ++i) v(i) = rng.normal();
    } while (v.norm() < 1e-12);
    return v.normalized();
}

}  // namespace latwalk
