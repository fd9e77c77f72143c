#pragma once

// Minimal scalar reverse-mode automatic differentiation.
//
// A Var is a value plus an index into the thread's active Tape; index -1 marks
// a constant. Every arithmetic op on a non-constant operand appends one node
// holding at most two parents and their local partials. Tape::backward sweeps
// the nodes in reverse once, so a gradient costs O(#nodes).
//
// Templated numerical code is written against a scalar type S and
// instantiated for both double and Var; math functions are found by ADL.

#include <cmath>
#include <cstddef>
#include <vector>

namespace san::ad {

struct Var {
    double v = 0.0;
    int id = -1;

    Var() = default;
    Var(double value) : v(value) {}  // NOLINT: implicit constants are intended
    Var(double value, int index) : v(value), id(index) {}
};

class Tape {
public:
    Var variable(double v) { return push(v, -1, 0.0, -1, 0.0); }

    Var push(double v, int a, double da, int b, double db) {
        nodes_.push_back({a, b, da, db});
        return {v, static_cast<int>(nodes_.size()) - 1};
    }

    // Seeds d(out)/d(out) = 1 and propagates adjoints to every node.
    void backward(const Var& out) {
        adjoints_.assign(nodes_.size(), 0.0);
        if (out.id < 0) return;
        adjoints_[static_cast<std::size_t>(out.id)] = 1.0;
        for (int i = out.id; i >= 0; --i) {
            const double g = adjoints_[static_cast<std::size_t>(i)];
            if (g == 0.0) continue;
            const Node& n = nodes_[static_cast<std::size_t>(i)];
            if (n.a >= 0) adjoints_[static_cast<std::size_t>(n.a)] += g * n.da;
            if (n.b >= 0) adjoints_[static_cast<std::size_t>(n.b)] += g * n.db;
        }
    }

    double adjoint(const Var& x) const {
        if (x.id < 0 || static_cast<std::size_t>(x.id) >= adjoints_.size()) return 0.0;
        return adjoints_[static_cast<std::size_t>(x.id)];
    }

    std::size_t size() const { return nodes_.size(); }

    void clear() {
        nodes_.clear();
        adjoints_.clear();
    }

    void reserve(std::size_t n) { nodes_.reserve(n); }

private:
    struct Node {
        int a, b;
        double da, db;
    };
    std::vector<Node> nodes_;
    std::vector<double> adjoints_;
};

namespace detail {
inline thread_local Tape* active = nullptr;
}

inline Tape& tape() { return *detail::active; }

// Makes `t` the target of all Var arithmetic on this thread for its lifetime.
class ScopedTape {
public:
    explicit ScopedTape(Tape& t) : prev_(detail::active) { detail::active = &t; }
    ~ScopedTape() { detail::active = prev_; }
    ScopedTape(const ScopedTape&) = delete;
    ScopedTape& operator=(const ScopedTape&) = delete;

private:
    Tape* prev_;
};

namespace detail {
inline Var unary(const Var& x, double v, double dx) {
    if (x.id < 0) return Var(v);
    return active->push(v, x.id, dx, -1, 0.0);
}
inline Var binary(const Var& x, const Var& y, double v, double dx, double dy) {
    if (x.id < 0 && y.id < 0) return Var(v);
    if (x.id < 0) return active->push(v, y.id, dy, -1, 0.0);
    if (y.id < 0) return active->push(v, x.id, dx, -1, 0.0);
    return active->push(v, x.id, dx, y.id, dy);
}
}  // namespace detail

inline Var operator+(const Var& x, const Var& y) { return detail::binary(x, y, x.v + y.v, 1.0, 1.0); }
inline Var operator-(const Var& x, const Var& y) { return detail::binary(x, y, x.v - y.v, 1.0, -1.0); }
inline Var operator*(const Var& x, const Var& y) { return detail::binary(x, y, x.v * y.v, y.v, x.v); }
inline Var operator/(const Var& x, const Var& y) {
    const double inv = 1.0 / y.v;
    return detail::binary(x, y, x.v * inv, inv, -x.v * inv * inv);
}
inline Var operator-(const Var& x) { return detail::unary(x, -x.v, -1.0); }

inline Var operator+(const Var& x, double c) { return detail::unary(x, x.v + c, 1.0); }
inline Var operator+(double c, const Var& x) { return detail::unary(x, x.v + c, 1.0); }
inline Var operator-(const Var& x, double c) { return detail::unary(x, x.v - c, 1.0); }
inline Var operator-(double c, const Var& x) { return detail::unary(x, c - x.v, -1.0); }
inline Var operator*(const Var& x, double c) { return detail::unary(x, x.v * c, c); }
inline Var operator*(double c, const Var& x) { return detail::unary(x, x.v * c, c); }
inline Var operator/(const Var& x, double c) { return detail::unary(x, x.v / c, 1.0 / c); }
inline Var operator/(double c, const Var& x) { return detail::unary(x, c / x.v, -c / (x.v * x.v)); }

inline Var& operator+=(Var& x, const Var& y) { return x = x + y; }
inline Var& operator-=(Var& x, const Var& y) { return x = x - y; }
inline Var& operator*=(Var& x, const Var& y) { return x = x * y; }
inline Var& operator/=(Var& x, const Var& y) { return x = x / y; }

inline Var exp(const Var& x) {
    const double e = std::exp(x.v);
    return detail::unary(x, e, e);
}
inline Var log(const Var& x) { return detail::unary(x, std::log(x.v), 1.0 / x.v); }
inline Var sqrt(const Var& x) {
    const double s = std::sqrt(x.v);
    return detail::unary(x, s, 0.5 / s);
}
inline Var tanh(const Var& x) {
    const double t = std::tanh(x.v);
    return detail::unary(x, t, 1.0 - t * t);
}

inline double value(const Var& x) { return x.v; }

}  // namespace san::ad

namespace san {
inline double value(double x) { return x; }
using ad::value;
}  // namespace san
