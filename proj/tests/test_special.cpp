#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "san/special.hpp"

using namespace san::special;

namespace {
constexpr double kEuler = 0.57721566490153286061;
std::vector<double> grid() {
    std::vector<double> xs;
    for (double x = 1e-3; x < 1e6; x *= 1.37) xs.push_back(x);
    return xs;
}
}  // namespace

TEST(LogGamma, MatchesStdLgamma) {
    for (double x : grid()) {
        const double ref = std::lgamma(x);
        EXPECT_NEAR(log_gamma(x), ref, 1e-12 * std::max(1.0, std::abs(ref))) << x;
    }
}

TEST(LogGamma, RecurrenceIdentity) {
    for (double x : grid()) {
        if (x > 1e5) continue;
        EXPECT_NEAR(log_gamma(x + 1.0) - log_gamma(x), std::log(x), 1e-12 * std::max(1.0, std::abs(log_gamma(x))));
    }
}

TEST(Digamma, KnownValues) {
    EXPECT_NEAR(digamma(1.0), -kEuler, 1e-14);
    EXPECT_NEAR(digamma(0.5), -kEuler - 2.0 * std::log(2.0), 1e-14);
    EXPECT_NEAR(digamma(2.0), 1.0 - kEuler, 1e-14);
}

TEST(Digamma, RecurrenceAndReflection) {
    for (double x : grid()) {
        EXPECT_NEAR(digamma(x + 1.0) - digamma(x), 1.0 / x, 1e-12 * std::max(1.0, 1.0 / x));
    }
    for (double x = 0.05; x < 1.0; x += 0.05) {
        const double lhs = digamma(1.0 - x) - digamma(x);
        const double rhs = std::numbers::pi / std::tan(std::numbers::pi * x);
        EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(rhs)));
    }
}

TEST(Digamma, IsDerivativeOfLogGamma) {
    for (double x : {0.3, 1.0, 2.5, 7.0, 40.0, 1234.5}) {
        const double h = 1e-5 * x;
        const double fd = (std::lgamma(x + h) - std::lgamma(x - h)) / (2 * h);
        EXPECT_NEAR(digamma(x), fd, 1e-7 * std::max(1.0, std::abs(fd)));
    }
}

TEST(Trigamma, KnownValuesAndRecurrence) {
    EXPECT_NEAR(trigamma(1.0), std::numbers::pi * std::numbers::pi / 6.0, 1e-13);
    EXPECT_NEAR(trigamma(0.5), std::numbers::pi * std::numbers::pi / 2.0, 1e-12);
    for (double x : grid()) {
        const double r = 1.0 / (x * x);
        EXPECT_NEAR(trigamma(x) - trigamma(x + 1.0), r, 1e-12 * std::max(1.0, r));
    }
}

TEST(InverseDigamma, RoundTrip) {
    for (double y : {1e-3, 0.1, 0.5, 1.0, 3.0, 50.0, 1e4}) {
        EXPECT_NEAR(inverse_digamma(digamma(y)), y, 1e-10 * y);
    }
}

TEST(Multigamma, ReducesToLogGammaInOneDimension) {
    EXPECT_NEAR(log_multigamma(3.7, 1), std::lgamma(3.7), 1e-13);
    // Γ_2(a) = sqrt(pi) Γ(a) Γ(a - 1/2)
    EXPECT_NEAR(log_multigamma(3.7, 2), 0.5 * std::log(std::numbers::pi) + std::lgamma(3.7) + std::lgamma(3.2), 1e-12);
}

TEST(Special, RejectsNonPositive) {
    EXPECT_THROW(log_gamma(0.0), std::invalid_argument);
    EXPECT_THROW(digamma(-1.0), std::invalid_argument);
}
