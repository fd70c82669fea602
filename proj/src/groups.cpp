#include "latwalk/groups.hpp"

#include <cmath>
#include <string>

#include "latwalk/error.hpp"

namespace latwalk {

namespace {

void check_dims(int m_dim, int n_dim) {
    if (m_dim < 1 || n_dim < 1) throw Error(ErrorKind::Dimension, "block dimensions must be positive");
}

}  // namespace

PElement PElement::identity(int m_dim, int n_dim) {
    check_dims(m_dim, n_dim);
    return PElement{m_dim, n_dim, 0.0, Mat::Identity(m_dim, m_dim), Mat::Identity(n_dim, n_dim),
                    Mat::Zero(m_dim, n_dim)};
}

Mat Similarity::apply(const Mat& beta) const {
    if (beta.rows() != m_dim || beta.cols() != n_dim)
        throw Error(ErrorKind::Dimension, "Similarity::apply: dimension mismatch");
    return ratio * o1 * beta * o2 + translation;
}

Similarity Similarity::compose(const Similarity& other) const {
    if (other.m_dim != m_dim || other.n_dim != n_dim)
        throw Error(ErrorKind::Dimension, "Similarity::compose: dimension mismatch");
    return Similarity{m_dim, n_dim, ratio * other.ratio, o1 * other.o1, other.o2 * o2,
                      ratio * o1 * other.translation * o2 + translation};
}

Similarity Similarity::inverse() const {
    return Similarity{m_dim, n_dim, 1.0 / ratio, o1.transpose(), o2.transpose(),
                      -(1.0 / ratio) * o1.transpose() * translation * o2.transpose()};
}

Similarity Similarity::scalar(double ratio, double translation) {
    return Similarity{1, 1, ratio, Mat::Identity(1, 1), Mat::Identity(1, 1), Mat::Constant(1, 1, translation)};
}

Mat aku_compose(const PElement& p) {
    check_dims(p.m_dim, p.n_dim);
    const int m = p.m_dim;
    const int n = p.n_dim;
    const double up = std::exp(p.t / m);
    const double down = std::exp(-p.t / n);
    Mat g = Mat::Zero(m + n, m + n);
    g.topLeftCorner(m, m) = up * p.o1;
    g.topRightCorner(m, n) = -up * p.o1 * p.alpha;
    g.bottomRightCorner(n, n) = down * p.o2;
    return g;
}

double flow_time(const Mat& g, int m_dim) {
    const double det = g.topLeftCorner(m_dim, m_dim).determinant();
    if (!(std::abs(det) > 0.0) || !std::isfinite(det))
        throw Error(ErrorKind::NotInP, "flow_time: singular top-left block");
    return std::log(std::abs(det));
}

PElement aku_decompose(const Mat& g, int m_dim, int n_dim) {
    check_dims(m_dim, n_dim);
    const int d = m_dim + n_dim;
    if (g.rows() != d || g.cols() != d)
        throw Error(ErrorKind::Dimension, "aku_decompose: expected a " + std::to_string(d) + "x" +
                                              std::to_string(d) + " matrix");
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    if (g.bottomLeftCorner(n_dim, m_dim).cwiseAbs().maxCoeff() > kLowerBlockTol * scale)
        throw Error(ErrorKind::NotInP, "aku_decompose: nonzero lower-left block");

    PElement p;
    p.m_dim = m_dim;
    p.n_dim = n_dim;
    p.t = flow_time(g, m_dim);
    p.o1 = std::exp(-p.t / m_dim) * g.topLeftCorner(m_dim, m_dim);
    p.o2 = std::exp(p.t / n_dim) * g.bottomRightCorner(n_dim, n_dim);
    if (orthogonality_residual(p.o1) > kOrthoTol)
        throw Error(ErrorKind::NotInP, "aku_decompose: top-left block is not a scaled orthogonal matrix");
    if (orthogonality_residual(p.o2) > kOrthoTol)
        throw Error(ErrorKind::NotInP, "aku_decompose: bottom-right block is not a scaled orthogonal matrix");
    p.alpha = -std::exp(-p.t / m_dim) * p.o1.transpose() * g.topRightCorner(m_dim, n_dim);
    return p;
}

Mat similarity_action(const PElement& p, const Mat& beta) {
    if (beta.rows() != p.m_dim || beta.cols() != p.n_dim)
        throw Error(ErrorKind::Dimension, "similarity_action: dimension mismatch");
    const double scale = std::exp(p.t * (1.0 / p.m_dim + 1.0 / p.n_dim));
    return scale * p.o1 * (beta - p.alpha) * p.o2.transpose();
}

PElement multiply(const PElement& p, const PElement& q) {
    if (p.m_dim != q.m_dim || p.n_dim != q.n_dim)
        throw Error(ErrorKind::Dimension, "multiply: block dimensions differ");
    return aku_decompose(aku_compose(p) * aku_compose(q), p.m_dim, p.n_dim);
}

PElement inverse(const PElement& p) {
    // (a k u_alpha)^{-1} = u_{-alpha} k^{-1} a_{-t} = a_{-t} k^{-1} u_{-(a k)alpha(a k)^{-1}}
    PElement r;
    r.m_dim = p.m_dim;
    r.n_dim = p.n_dim;
    r.t = -p.t;
    r.o1 = p.o1.transpose();
    r.o2 = p.o2.transpose();
    const double scale = std::exp(p.t * (1.0 / p.m_dim + 1.0 / p.n_dim));
    r.alpha = -scale * p.o1 * p.alpha * p.o2.transpose();
    return r;
}

Similarity normalize_signs(const Similarity& s) {
    Similarity out = s;
    if (s.m_dim == 1 && s.o1(0, 0) < 0.0) {
        out.o1 = -s.o1;
        out.o2 = -s.o2;
    } else if (s.n_dim == 1 && s.m_dim > 1 && s.o2(0, 0) < 0.0) {
        out.o1 = -s.o1;
        out.o2 = -s.o2;
    }
    return out;
}

PElement similarity_to_group(const Similarity& raw) {
    if (!(raw.ratio > 0.0) || !std::isfinite(raw.ratio))
        throw Error(ErrorKind::Domain, "similarity_to_group: ratio must be positive");
    const Similarity s = normalize_signs(raw);
    PElement p;
    p.m_dim = s.m_dim;
    p.n_dim = s.n_dim;
    p.t = std::log(s.ratio) / (1.0 / s.m_dim + 1.0 / s.n_dim);
    p.o1 = s.o1;
    p.o2 = s.o2.transpose();
    p.alpha = -(1.0 / s.ratio) * s.o1.transpose() * s.translation * s.o2.transpose();
    return p;
}

Similarity group_to_similarity(const PElement& p) {
    const double r = std::exp(p.t * (1.0 / p.m_dim + 1.0 / p.n_dim));
    const Mat o2 = p.o2.transpose();
    return Similarity{p.m_dim, p.n_dim, r, p.o1, o2, -r * p.o1 * p.alpha * o2};
}

Mat make_block_element(double c, const Mat& o, const Vec& y) {
    if (!(c > 1.0)) throw Error(ErrorKind::Domain, "make_block_element: requires c > 1");
    const auto d = o.rows();
    if (o.cols() != d || y.size() != d) throw Error(ErrorKind::Dimension, "make_block_element: shape mismatch");
    if (orthogonality_residual(o) > kOrthoTol || o.determinant() < 0.0)
        throw Error(ErrorKind::Domain, "make_block_element: o must lie in SO_d");
    Mat g = Mat::Zero(d + 1, d + 1);
    g.topLeftCorner(d, d) = c * o;
    g.topRightCorner(d, 1) = y;
    g(d, d) = std::pow(c, -static_cast<double>(d));
    return g;
}

std::array<Mat, 3> sl3_paper_example() {
    Mat g1 = Mat::Zero(3, 3);
    g1(0, 0) = 3.0;
    g1(1, 1) = 2.0;
    g1(2, 2) = 1.0 / 6.0;
    Mat g2 = g1;
    g2(0, 2) = 1.0;
    Mat g3 = g1;
    g3(1, 2) = 1.0;
    return {g1, g2, g3};
}

}  // namespace latwalk
