#include "san/special.hpp"

#include <cmath>
#include <numbers>

#include "san/errors.hpp"

namespace san::special {

namespace {

// Bernoulli numbers B_{2k}/(2k(2k-1)) for the Stirling series.
constexpr double kStirling[] = {
    1.0 / 12.0,          -1.0 / 360.0,      1.0 / 1260.0,        -1.0 / 1680.0,
    1.0 / 1188.0,        -691.0 / 360360.0, 1.0 / 156.0,         -3617.0 / 122400.0,
};

// B_{2k}/(2k) for the digamma asymptotic series.
constexpr double kDigamma[] = {
    1.0 / 12.0,   -1.0 / 120.0,       1.0 / 252.0,  -1.0 / 240.0,
    1.0 / 132.0,  -691.0 / 32760.0,   1.0 / 12.0,   -3617.0 / 8160.0,
};

// B_{2k} for the trigamma asymptotic series.
constexpr double kTrigamma[] = {
    1.0 / 6.0,   -1.0 / 30.0,     1.0 / 42.0,   -1.0 / 30.0,
    5.0 / 66.0,  -691.0 / 2730.0, 7.0 / 6.0,    -3617.0 / 510.0,
};

constexpr double kShift = 10.0;

void check_domain(double x, const char* fn) {
    if (!(x > 0.0) || !std::isfinite(x)) throw InvalidParameter(std::string(fn) + ": argument must be positive and finite");
}

}  // namespace

double log_gamma(double x) {
    check_domain(x, "log_gamma");
    double shift = 0.0;
    while (x < kShift) {
        shift += std::log(x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double series = 0.0;
    double p = inv;
    for (double c : kStirling) {
        series += c * p;
        p *= inv2;
    }
    return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series - shift;
}

double digamma(double x) {
    check_domain(x, "digamma");
    double shift = 0.0;
    while (x < kShift) {
        shift += 1.0 / x;
        x += 1.0;
    }
    const double inv2 = 1.0 / (x * x);
    double series = 0.0;
    double p = inv2;
    for (double c : kDigamma) {
        series += c * p;
        p *= inv2;
    }
    return std::log(x) - 0.5 / x - series - shift;
}

double trigamma(double x) {
    check_domain(x, "trigamma");
    double shift = 0.0;
    while (x < kShift) {
        shift += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double series = 0.0;
    double p = inv2 * inv;
    for (double c : kTrigamma) {
        series += c * p;
        p *= inv2;
    }
    return inv + 0.5 * inv2 + series + shift;
}

double log_multigamma(double a, int d) {
    double acc = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
    for (int i = 1; i <= d; ++i) acc += log_gamma(a + 0.5 * (1 - i));
    return acc;
}

double multi_digamma(double a, int d) {
    double acc = 0.0;
    for (int i = 1; i <= d; ++i) acc += digamma(a + 0.5 * (1 - i));
    return acc;
}

double inverse_digamma(double x) {
    constexpr double kEulerGamma = 0.57721566490153286061;
    double y = x >= -2.22 ? std::exp(x) + 0.5 : -1.0 / (x + kEulerGamma);
    for (int it = 0; it < 100; ++it) {
        const double step = (digamma(y) - x) / trigamma(y);
        double next = y - step;
        if (next <= 0.0) next = 0.5 * y;
        if (std::abs(next - y) <= 1e-15 * y) {
            y = next;
            break;
        }
        y = next;
    }
    return y;
}

}  // namespace san::special
