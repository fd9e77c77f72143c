#pragma once

// Small dense linear algebra templated on the scalar type so the same code
// runs on doubles and on ad::Var. Sizes here are latent dimensions (a handful),
// so everything is straightforward loops over a row-major buffer.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "san/ad.hpp"
#include "san/errors.hpp"

namespace san {

template <class S>
using Vec = std::vector<S>;

template <class S>
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<S> a;

    Mat() = default;
    Mat(int r, int c, S fill = S(0.0)) : rows(r), cols(c), a(static_cast<std::size_t>(r * c), fill) {}

    S& operator()(int i, int j) { return a[static_cast<std::size_t>(i * cols + j)]; }
    const S& operator()(int i, int j) const { return a[static_cast<std::size_t>(i * cols + j)]; }

    static Mat identity(int d, double scale = 1.0) {
        Mat m(d, d);
        for (int i = 0; i < d; ++i) m(i, i) = S(scale);
        return m;
    }
};

template <class S>
Mat<double> values(const Mat<S>& m) {
    Mat<double> out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.a.size(); ++i) out.a[i] = value(m.a[i]);
    return out;
}

template <class S>
Vec<double> values(const Vec<S>& v) {
    Vec<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = value(v[i]);
    return out;
}

template <class S>
Mat<S> transpose(const Mat<S>& m) {
    Mat<S> t(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
    return t;
}

template <class S>
Mat<S> matmul(const Mat<S>& x, const Mat<S>& y) {
    require(x.cols == y.rows, "matmul: inner dimensions differ");
    Mat<S> out(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < y.cols; ++j) {
            S acc(0.0);
            for (int k = 0; k < x.cols; ++k) acc += x(i, k) * y(k, j);
            out(i, j) = acc;
        }
    return out;
}

template <class S>
Vec<S> matvec(const Mat<S>& x, const Vec<S>& v) {
    require(static_cast<std::size_t>(x.cols) == v.size(), "matvec: dimension mismatch");
    Vec<S> out(static_cast<std::size_t>(x.rows), S(0.0));
    for (int i = 0; i < x.rows; ++i) {
        S acc(0.0);
        for (int k = 0; k < x.cols; ++k) acc += x(i, k) * v[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

template <class S>
Mat<S> operator+(const Mat<S>& x, const Mat<S>& y) {
    Mat<S> out = x;
    for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] += y.a[i];
    return out;
}

template <class S>
Mat<S> operator-(const Mat<S>& x, const Mat<S>& y) {
    Mat<S> out = x;
    for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] -= y.a[i];
    return out;
}

template <class S>
Vec<S> operator+(const Vec<S>& x, const Vec<S>& y) {
    Vec<S> out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
    return out;
}

template <class S>
Vec<S> operator-(const Vec<S>& x, const Vec<S>& y) {
    Vec<S> out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
    return out;
}

// A·B·Aᵀ
template <class S>
Mat<S> sandwich(const Mat<S>& a, const Mat<S>& b) {
    return matmul(matmul(a, b), transpose(a));
}

template <class S>
Mat<S> symmetrize(const Mat<S>& m) {
    Mat<S> out = m;
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < i; ++j) {
            S s = (m(i, j) + m(j, i)) * 0.5;
            out(i, j) = s;
            out(j, i) = s;
        }
    return out;
}

template <class S>
Mat<S> diag_matrix(const Vec<S>& v) {
    const int d = static_cast<int>(v.size());
    Mat<S> m(d, d);
    for (int i = 0; i < d; ++i) m(i, i) = v[static_cast<std::size_t>(i)];
    return m;
}

namespace detail {
template <class S>
bool try_cholesky(const Mat<S>& m, Mat<S>& l) {
    const int d = m.rows;
    l = Mat<S>(d, d);
    for (int j = 0; j < d; ++j) {
        S diag = m(j, j);
        for (int k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        const double dv = value(diag);
        if (!(dv > 0.0) || !std::isfinite(dv)) return false;
        using std::sqrt;
        S ljj = sqrt(diag);
        l(j, j) = ljj;
        for (int i = j + 1; i < d; ++i) {
            S s = m(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return true;
}
}  // namespace detail

// Lower Cholesky factor. On failure the diagonal gets 1e-8·trace/d added,
// growing tenfold per retry, at most three retries.
template <class S>
Mat<S> cholesky(const Mat<S>& m, const std::string& what = "cholesky") {
    require(m.rows == m.cols, what + ": matrix not square");
    Mat<S> l;
    if (detail::try_cholesky(m, l)) return l;
    const int d = m.rows;
    double tr = 0.0;
    for (int i = 0; i < d; ++i) tr += value(m(i, i));
    double jitter = 1e-8 * std::abs(tr) / d;
    if (!(jitter > 0.0)) jitter = 1e-8;
    for (int attempt = 0; attempt < 3; ++attempt, jitter *= 10.0) {
        Mat<S> mj = m;
        for (int i = 0; i < d; ++i) mj(i, i) += jitter;
        if (detail::try_cholesky(mj, l)) return l;
    }
    throw InvalidParameter(what + ": matrix is not positive definite");
}

// Solves L x = b for lower-triangular L.
template <class S>
Vec<S> forward_solve(const Mat<S>& l, const Vec<S>& b) {
    const int d = l.rows;
    Vec<S> x(b);
    for (int i = 0; i < d; ++i) {
        S s = x[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) s -= l(i, k) * x[static_cast<std::size_t>(k)];
        x[static_cast<std::size_t>(i)] = s / l(i, i);
    }
    return x;
}

// Solves Lᵀ x = b for lower-triangular L.
template <class S>
Vec<S> back_solve_t(const Mat<S>& l, const Vec<S>& b) {
    const int d = l.rows;
    Vec<S> x(b);
    for (int i = d - 1; i >= 0; --i) {
        S s = x[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < d; ++k) s -= l(k, i) * x[static_cast<std::size_t>(k)];
        x[static_cast<std::size_t>(i)] = s / l(i, i);
    }
    return x;
}

template <class S>
Vec<S> chol_solve(const Mat<S>& l, const Vec<S>& b) {
    return back_solve_t(l, forward_solve(l, b));
}

// (LLᵀ)⁻¹ B column by column.
template <class S>
Mat<S> chol_solve(const Mat<S>& l, const Mat<S>& b) {
    Mat<S> out(b.rows, b.cols);
    Vec<S> col(static_cast<std::size_t>(b.rows));
    for (int j = 0; j < b.cols; ++j) {
        for (int i = 0; i < b.rows; ++i) col[static_cast<std::size_t>(i)] = b(i, j);
        Vec<S> x = chol_solve(l, col);
        for (int i = 0; i < b.rows; ++i) out(i, j) = x[static_cast<std::size_t>(i)];
    }
    return out;
}

template <class S>
Mat<S> chol_inverse(const Mat<S>& l) {
    return chol_solve(l, Mat<S>::identity(l.rows));
}

template <class S>
S chol_logdet(const Mat<S>& l) {
    using std::log;
    S acc(0.0);
    for (int i = 0; i < l.rows; ++i) acc += log(l(i, i));
    return acc * 2.0;
}

template <class S>
S dot(const Vec<S>& x, const Vec<S>& y) {
    S acc(0.0);
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// log N(x | mean, LLᵀ)
template <class S>
S gaussian_logpdf_chol(const Vec<S>& x, const Vec<S>& mean, const Mat<S>& l) {
    const Vec<S> z = forward_solve(l, x - mean);
    return dot(z, z) * -0.5 - chol_logdet(l) * 0.5 - 0.5 * static_cast<double>(x.size()) * kLog2Pi;
}

// log N(x | mean, diag(var))
template <class S>
S gaussian_logpdf_diag(const Vec<S>& x, const Vec<S>& mean, const Vec<S>& var) {
    using std::log;
    S acc(-0.5 * static_cast<double>(x.size()) * kLog2Pi);
    for (std::size_t i = 0; i < x.size(); ++i) {
        S r = x[i] - mean[i];
        acc -= (r * r / var[i] + log(var[i])) * 0.5;
    }
    return acc;
}

// Packs / unpacks a lower-triangular factor with log-diagonal, row by row
// (L00, L10, L11, L20, ...). Unpacking always yields a valid factor.
inline int tri_size(int d) { return d * (d + 1) / 2; }

template <class S>
Mat<S> unpack_chol(const S* p, int d) {
    using std::exp;
    Mat<S> l(d, d);
    int idx = 0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) {
            l(i, j) = (i == j) ? exp(p[idx]) : p[idx];
            ++idx;
        }
    return l;
}

inline void pack_chol(const Mat<double>& l, double* p) {
    int idx = 0;
    for (int i = 0; i < l.rows; ++i)
        for (int j = 0; j <= i; ++j) p[idx++] = (i == j) ? std::log(l(i, j)) : l(i, j);
}

template <class S>
Mat<S> outer_self(const Mat<S>& l) {
    return matmul(l, transpose(l));
}

template <class S>
S log_sum_exp(const Vec<S>& v) {
    using std::exp;
    using std::log;
    double mx = -INFINITY;
    for (const S& x : v) mx = std::max(mx, value(x));
    if (!std::isfinite(mx)) return S(mx);
    S acc(0.0);
    for (const S& x : v) acc += exp(x - mx);
    return log(acc) + mx;
}

}  // namespace san
