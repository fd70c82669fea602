#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "latwalk/error.hpp"

namespace latwalk {

/// Column-major square basis over an arbitrary real scalar type.
template <class T>
struct BasisT {
    int dim = 0;
    std::vector<T> data;  // data[col * dim + row]

    BasisT() = default;
    explicit BasisT(int d) : dim(d), data(static_cast<std::size_t>(d * d), T(0)) {}

    T& operator()(int row, int col) { return data[static_cast<std::size_t>(col * dim + row)]; }
    const T& operator()(int row, int col) const { return data[static_cast<std::size_t>(col * dim + row)]; }
};

namespace detail {

template <class T>
T column_dot(const BasisT<T>& b, int i, const std::vector<T>& v) {
    T s(0);
    for (int r = 0; r < b.dim; ++r) s += b(r, i) * v[static_cast<std::size_t>(r)];
    return s;
}

template <class T>
T round_half_away(const T& x) {
    using std::floor;
    return x < T(0) ? -floor(-x + T(0.5)) : floor(x + T(0.5));
}

}  // namespace detail

/// Gram-Schmidt data of a basis: mu(i, j) for j < i and squared norms of the
/// orthogonalized vectors.
template <class T>
struct GramSchmidt {
    std::vector<T> mu;     // mu[i * dim + j]
    std::vector<T> norms;  // |b*_i|^2
    int dim = 0;

    T mu_at(int i, int j) const { return mu[static_cast<std::size_t>(i * dim + j)]; }
};

template <class T>
GramSchmidt<T> gram_schmidt(const BasisT<T>& b) {
    const int d = b.dim;
    GramSchmidt<T> gs;
    gs.dim = d;
    gs.mu.assign(static_cast<std::size_t>(d * d), T(0));
    gs.norms.assign(static_cast<std::size_t>(d), T(0));
    std::vector<std::vector<T>> star(static_cast<std::size_t>(d), std::vector<T>(static_cast<std::size_t>(d), T(0)));
    for (int i = 0; i < d; ++i) {
        auto& s = star[static_cast<std::size_t>(i)];
        for (int r = 0; r < d; ++r) s[static_cast<std::size_t>(r)] = b(r, i);
        for (int j = 0; j < i; ++j) {
            const auto& sj = star[static_cast<std::size_t>(j)];
            const T m = detail::column_dot(b, i, sj) / gs.norms[static_cast<std::size_t>(j)];
            gs.mu[static_cast<std::size_t>(i * d + j)] = m;
            for (int r = 0; r < d; ++r) s[static_cast<std::size_t>(r)] -= m * sj[static_cast<std::size_t>(r)];
        }
        T n(0);
        for (int r = 0; r < d; ++r) n += s[static_cast<std::size_t>(r)] * s[static_cast<std::size_t>(r)];
        if (!(n > T(0))) throw Error(ErrorKind::Inversion, "gram_schmidt: numerically singular basis");
        gs.norms[static_cast<std::size_t>(i)] = n;
    }
    return gs;
}

/// LLL-reduces the columns of `b` in place with Lovasz parameter `delta`.
/// If `transform` is non-null it receives the integer change of basis
/// (new = old * transform), stored column-major as doubles.
template <class T>
void lll_reduce(BasisT<T>& b, double delta = 0.99, std::vector<double>* transform = nullptr) {
    const int d = b.dim;
    if (transform) {
        transform->assign(static_cast<std::size_t>(d * d), 0.0);
        for (int i = 0; i < d; ++i) (*transform)[static_cast<std::size_t>(i * d + i)] = 1.0;
    }
    auto swap_cols = [&](int i, int j) {
        for (int r = 0; r < d; ++r) std::swap(b(r, i), b(r, j));
        if (transform)
            for (int r = 0; r < d; ++r)
                std::swap((*transform)[static_cast<std::size_t>(i * d + r)], (*transform)[static_cast<std::size_t>(j * d + r)]);
    };
    auto sub_col = [&](int k, int j, const T& q) {
        for (int r = 0; r < d; ++r) b(r, k) -= q * b(r, j);
        if (transform) {
            const double qd = static_cast<double>(q);
            for (int r = 0; r < d; ++r)
                (*transform)[static_cast<std::size_t>(k * d + r)] -= qd * (*transform)[static_cast<std::size_t>(j * d + r)];
        }
    };

    GramSchmidt<T> gs = gram_schmidt(b);
    int k = 1;
    long iterations = 0;
    while (k < d) {
        if (++iterations > 1'000'000) throw Error(ErrorKind::Decomposition, "lll_reduce: iteration cap exceeded");
        bool changed = false;
        for (int j = k - 1; j >= 0; --j) {
            const T m = gs.mu_at(k, j);
            using std::abs;
            if (abs(m) > T(0.5)) {
                const T q = detail::round_half_away(m);
                sub_col(k, j, q);
                // update mu(k, *) in place
                for (int i = 0; i < j; ++i)
                    gs.mu[static_cast<std::size_t>(k * d + i)] -= q * gs.mu_at(j, i);
                gs.mu[static_cast<std::size_t>(k * d + j)] -= q;
                changed = true;
            }
        }
        (void)changed;
        const T mk = gs.mu_at(k, k - 1);
        if (gs.norms[static_cast<std::size_t>(k)] >= (T(delta) - mk * mk) * gs.norms[static_cast<std::size_t>(k - 1)]) {
            ++k;
        } else {
            swap_cols(k, k - 1);
            gs = gram_schmidt(b);
            k = k > 1 ? k - 1 : 1;
        }
    }
}

}  // namespace latwalk
