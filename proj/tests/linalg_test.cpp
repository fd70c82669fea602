#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "latwalk/error.hpp"
#include "latwalk/linalg.hpp"
#include "latwalk/rng.hpp"

using namespace latwalk;

namespace {

Mat diag(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v.asDiagonal();
}

// k x k minor by direct determinant, independent of wedge_power.
double minor(const Mat& m, const std::vector<int>& rows, const std::vector<int>& cols) {
    const auto k = static_cast<Eigen::Index>(rows.size());
    Mat sub(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = m(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
    return sub.determinant();
}

}  // namespace

TEST_CASE("k_subsets are lexicographic") {
    const auto s = k_subsets(3, 2);
    REQUIRE(s.size() == 3);
    CHECK(s[0] == std::vector<int>{0, 1});
    CHECK(s[1] == std::vector<int>{0, 2});
    CHECK(s[2] == std::vector<int>{1, 2});
    CHECK(binomial(8, 3) == 56);
}

TEST_CASE("wedge_power examples") {
    CHECK(wedge_power(Mat::Identity(3, 3), 2).entries.isApprox(Mat::Identity(3, 3)));
    const Mat w = wedge_power(diag({3, 2, 1.0 / 6}), 2).entries;
    CHECK((w - diag({6, 0.5, 1.0 / 3})).cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THROWS_AS(wedge_power(Mat::Identity(3, 3), 0), Error);
    CHECK_THROWS_AS(wedge_power(Mat::Identity(3, 3), 3), Error);
}

TEST_CASE("wedge_power entries are minors") {
    Rng rng(11);
    const Mat m = random_sl(4, rng);
    const auto subsets = k_subsets(4, 2);
    const Mat w = wedge_power(m, 2).entries;
    for (std::size_t i = 0; i < subsets.size(); ++i)
        for (std::size_t j = 0; j < subsets.size(); ++j)
            CHECK(w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
                  doctest::Approx(minor(m, subsets[i], subsets[j])).epsilon(1e-12));
}

TEST_CASE("Cauchy-Binet on random SL_3 pairs") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat a = random_sl(3, rng), b = random_sl(3, rng);
        const Mat lhs = wedge_power(a * b, 2).entries;
        const Mat rhs = wedge_power(a, 2).entries * wedge_power(b, 2).entries;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, lhs.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("adjoint_matrix examples") {
    CHECK(adjoint_matrix(Mat::Identity(3, 3)).isApprox(Mat::Identity(8, 8)));
    const Mat ad = adjoint_matrix(diag({3, 2, 1.0 / 6}));
    const int e13 = adjoint_offdiag_index(3, 0, 2), e23 = adjoint_offdiag_index(3, 1, 2);
    Vec v = Vec::Zero(8);
    v(e13) = 1.0;
    CHECK((ad * v - 18.0 * v).norm() < 1e-12);
    v.setZero();
    v(e23) = 1.0;
    CHECK((ad * v - 12.0 * v).norm() < 1e-12);
    CHECK_THROWS_AS(adjoint_matrix(Mat::Zero(2, 2)), Error);
}

TEST_CASE("adjoint_matrix matches direct conjugation") {
    Rng rng(5);
    const int d = 2;
    const Mat g = random_sl(d, rng);
    const Mat ad = adjoint_matrix(g);
    // basis E_01, E_10, H_0
    std::vector<Mat> basis(3, Mat::Zero(2, 2));
    basis[0](0, 1) = 1;
    basis[1](1, 0) = 1;
    basis[2](0, 0) = 1;
    basis[2](1, 1) = -1;
    for (int j = 0; j < 3; ++j) {
        const Mat x = g * basis[static_cast<std::size_t>(j)] * g.inverse();
        Mat y = Mat::Zero(2, 2);
        for (int i = 0; i < 3; ++i) y += ad(i, j) * basis[static_cast<std::size_t>(i)];
        CHECK((x - y).cwiseAbs().maxCoeff() < 1e-10);
    }
    const Mat h = random_sl(d, rng);
    CHECK((adjoint_matrix(g * h) - adjoint_matrix(g) * adjoint_matrix(h)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("norm_gauge examples") {
    CHECK(norm_gauge(Mat::Identity(3, 3)) == doctest::Approx(1.0));
    CHECK(norm_gauge(diag({3, 1.0 / 3})) == doctest::Approx(3.0));
    CHECK(norm_gauge(diag({3, 2, 1.0 / 6})) == doctest::Approx(6.0));
    CHECK_THROWS_AS(norm_gauge(Mat::Zero(2, 2)), Error);
    Rng rng(9);
    const Mat g = random_sl(3, rng);
    CHECK(norm_gauge(g) >= 1.0);
    CHECK(norm_gauge(g) == doctest::Approx(norm_gauge(g.inverse())).epsilon(1e-10));
}

TEST_CASE("singular values match Eigen's SVD") {
    Rng rng(17);
    const Mat m = random_sl(5, rng);
    const Vec ours = singular_values(m);
    const Vec ref = Eigen::JacobiSVD<Mat>(m).singularValues();
    CHECK((ours - ref).cwiseAbs().maxCoeff() < 1e-12 * ref(0));
}

TEST_CASE("ortho_product_step examples") {
    const auto id = ortho_product_step(Mat::Identity(3, 3), Mat::Identity(3, 3));
    CHECK(id.q.isApprox(Mat::Identity(3, 3)));
    CHECK(id.log_norms.cwiseAbs().maxCoeff() < 1e-15);
    const auto d = ortho_product_step(Mat::Identity(3, 3), diag({3, 2, 1.0 / 6}));
    CHECK((d.q - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(d.log_norms(0) == doctest::Approx(std::log(3.0)));
    CHECK(d.log_norms(1) == doctest::Approx(std::log(2.0)));
    CHECK(d.log_norms(2) == doctest::Approx(-std::log(6.0)));
    CHECK_THROWS_AS(ortho_product_step(Mat::Identity(2, 2), Mat::Zero(2, 2)), Error);
}

TEST_CASE("30-step rotation-diagonal product: QR logs vs direct norm") {
    Rng rng(21);
    Mat q = Mat::Identity(2, 2), product = Mat::Identity(2, 2);
    double top = 0.0;
    for (int n = 0; n < 30; ++n) {
        const double th = 2 * M_PI * rng.uniform();
        Mat r(2, 2);
        r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
        const Mat g = r * diag({2, 0.5});
        product = g * product;
        const auto step = ortho_product_step(q, g);
        q = step.q;
        top += step.log_norms(0);
    }
    // the first QR column follows product * e_1
    CHECK(top == doctest::Approx(std::log((product * Vec::Unit(2, 0)).norm())).epsilon(1e-6));
}

TEST_CASE("renormalize_det and helpers") {
    const Mat m = 2.0 * Mat::Identity(2, 2);
    CHECK(std::abs(renormalize_det(m).determinant()) == doctest::Approx(1.0));
    CHECK_THROWS_AS(renormalize_det(Mat::Zero(2, 2)), Error);
    Rng rng(1);
    CHECK(orthogonality_residual(random_orthogonal(4, rng)) < 1e-12);
    CHECK(random_special_orthogonal(3, rng).determinant() == doctest::Approx(1.0));
    CHECK(random_unit_vector(5, rng).norm() == doctest::Approx(1.0));
    Mat bad = Mat::Identity(2, 2);
    bad(0, 0) = NAN;
    CHECK_FALSE(is_finite(bad));
}
