#include <gtest/gtest.h>

#include <cmath>

#include "san/errors.hpp"
#include "san/nnet.hpp"

using namespace san;
using namespace san::nnet;

namespace {

std::vector<double> rand_vec(int n, Rng& rng, double scale = 1.0) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = scale * std_normal(rng);
    return v;
}

double act_ref(Act a, double x) {
    if (a == Act::Tanh) return std::tanh(x);
    if (a == Act::Softplus) return std::log(1.0 + std::exp(x));
    return x;
}

// Straight-line evaluation without the kernel tables.
std::vector<double> reference_forward(const Mlp& net, std::vector<double> a) {
    for (const LayerSpec& l : net.layers()) {
        std::vector<double> out(static_cast<std::size_t>(l.out));
        for (int r = 0; r < l.out; ++r) {
            double s = net.params[l.b_off + r];
            for (int c = 0; c < l.in; ++c) s += net.params[l.w_off + static_cast<std::size_t>(r) * l.in + c] * a[c];
            out[r] = act_ref(l.act, s);
        }
        a = out;
    }
    return a;
}

double weighted(const std::vector<double>& out, const std::vector<double>& w) {
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * w[i];
    return s;
}

struct Moments {
    double mean, var, se_mean, se_var;
};
Moments moments(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double m = 0;
    for (double x : xs) m += x / n;
    double m2 = 0, m4 = 0;
    for (double x : xs) {
        m2 += (x - m) * (x - m) / n;
        m4 += std::pow(x - m, 4) / n;
    }
    return {m, m2 * n / (n - 1), std::sqrt(m2 / n), std::sqrt((m4 - m2 * m2) / n)};
}

}  // namespace

TEST(Forward, ZeroNetGivesFloorHead) {
    Mlp net(3, {4}, 4);
    const auto f = forward_gaussian(net, {1.0, -2.0, 0.5});
    for (double m : f.mean) EXPECT_EQ(m, 0.0);
    for (double v : f.var) EXPECT_NEAR(v, std::log(2.0) + kVarFloor, 1e-15);
}

TEST(Forward, SingleIdentityLayer) {
    Mlp net(2, {}, 2);
    net.params = {1, 0, 0, 1, 0, 0};
    const auto out = forward(net, {1.0, 2.0});
    EXPECT_EQ(out[0], 1.0);
    EXPECT_EQ(out[1], 2.0);
}

TEST(Forward, MatchesStraightLineEvaluation) {
    Rng rng(3);
    for (Act act : {Act::Tanh, Act::Softplus, Act::Identity}) {
        Mlp net(4, {7, 5}, 3, act);
        net.init(rng);
        for (double& p : net.params) p += 0.1 * std_normal(rng);
        const auto x = rand_vec(4, rng);
        const auto out = forward(net, x);
        const auto ref = reference_forward(net, x);
        for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], ref[i], 1e-12);
    }
}

TEST(Forward, DimensionMismatchIsContractError) {
    Mlp net(3, {4}, 2);
    EXPECT_THROW(forward(net, {1.0}), ContractError);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
    Rng rng(4);
    Mlp net(3, {6}, 2);
    net.init(rng);
    GradTape tape;
    forward(net, rand_vec(3, rng), &tape);
    std::vector<double> g;
    const auto gin = backward(net, tape, {0.0, 0.0}, g);
    for (double x : g) EXPECT_EQ(x, 0.0);
    for (double x : gin) EXPECT_EQ(x, 0.0);
}

TEST(Backward, LinearLeastSquaresGradient) {
    Rng rng(5);
    Mlp net(3, {}, 2);
    net.init(rng);
    const auto x = rand_vec(3, rng), target = rand_vec(2, rng);
    GradTape tape;
    const auto out = forward(net, x, &tape);
    // loss = ½‖Wx + b − t‖²; dloss/dout = out − t.
    std::vector<double> resid{out[0] - target[0], out[1] - target[1]};
    std::vector<double> g;
    backward(net, tape, resid, g);
    const LayerSpec& l = net.layers()[0];
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(g[l.w_off + r * 3 + c], resid[r] * x[c], 1e-10);
        EXPECT_NEAR(g[l.b_off + r], resid[r], 1e-10);
    }
}

TEST(Backward, TapeMismatchIsContractError) {
    Mlp a(3, {4}, 2), b(3, {5}, 2);
    GradTape tape;
    forward(a, {1, 2, 3}, &tape);
    std::vector<double> g;
    EXPECT_THROW(backward(b, tape, {1, 1}, g), ContractError);
}

TEST(Backward, WideTanhNetFiniteDifferences) {
    Rng rng(6);
    Mlp net(2, {50, 50}, 4);
    net.init(rng);
    const auto x = rand_vec(2, rng), w = rand_vec(4, rng);
    GradTape tape;
    forward(net, x, &tape);
    std::vector<double> g;
    const auto gin = backward(net, tape, w, g);
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        Mlp hi = net, lo = net;
        hi.params[i] += 1e-5;
        lo.params[i] -= 1e-5;
        const double fd = (weighted(forward(hi, x), w) - weighted(forward(lo, x), w)) / 2e-5;
        EXPECT_LT(std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])), 1e-4) << i;
    }
    for (int i = 0; i < 2; ++i) {
        auto xh = x, xl = x;
        xh[i] += 1e-5;
        xl[i] -= 1e-5;
        const double fd = (weighted(forward(net, xh), w) - weighted(forward(net, xl), w)) / 2e-5;
        EXPECT_LT(std::abs(fd - gin[i]) / std::max(1.0, std::abs(gin[i])), 1e-4);
    }
}

TEST(Backward, RandomConfigurationsWithGaussianHead) {
    Rng rng(7);
    const Act acts[] = {Act::Tanh, Act::Softplus, Act::Identity};
    for (int trial = 0; trial < 50; ++trial) {
        const Act act = acts[trial % 3];
        const int in = 1 + trial % 4, d = 1 + trial % 3;
        Mlp net(in, {3 + trial % 5, 4}, 2 * d, act);
        net.init(rng);
        const auto x = rand_vec(in, rng);
        const auto wm = rand_vec(d, rng), wv = rand_vec(d, rng);
        auto objective = [&](const Mlp& n) {
            const auto f = forward_gaussian(n, x);
            return weighted(f.mean, wm) + weighted(f.var, wv);
        };
        const auto f = forward_gaussian(net, x);
        std::vector<double> g;
        backward_gaussian(net, f, wm, wv, g);
        for (std::size_t i = 0; i < net.params.size(); ++i) {
            Mlp hi = net, lo = net;
            hi.params[i] += 1e-5;
            lo.params[i] -= 1e-5;
            const double fd = (objective(hi) - objective(lo)) / 2e-5;
            EXPECT_LT(std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])), 1e-4) << trial << " " << i;
        }
    }
}

TEST(Backward, DeterministicGivenSeed) {
    auto run = [] {
        Rng rng(8);
        Mlp net(3, {10}, 4);
        net.init(rng);
        const auto f = forward_gaussian(net, rand_vec(3, rng));
        std::vector<double> g;
        backward_gaussian(net, f, {1, 2}, {0.5, -1}, g);
        return g;
    };
    EXPECT_EQ(run(), run());
}

TEST(Head, VarianceBounds) {
    const auto h = gaussian_head({0.0, 0.0, -1e4, 1e7});
    EXPECT_NEAR(h.var[0], kVarFloor, 1e-18);
    EXPECT_EQ(h.var[1], kVarCeil);
}

TEST(Reparam, ZeroNoiseAndFloorLimit) {
    EXPECT_EQ(reparam_apply({1.5, -2}, {3, 4}, {0, 0}), (std::vector<double>{1.5, -2}));
    const auto x = reparam_apply({1.0}, {kVarFloor}, {2.5});
    EXPECT_LT(std::abs(x[0] - 1.0), 1e-3 * 2.5);
}

TEST(Reparam, Moments) {
    Rng rng(9);
    std::vector<double> xs(100000);
    for (double& x : xs) x = reparam_sample({1.0}, {4.0}, rng).x[0];
    const Moments m = moments(xs);
    EXPECT_LE(std::abs(m.mean - 1.0), 3 * m.se_mean);
    EXPECT_LE(std::abs(m.var - 4.0), 3 * m.se_var);
}

TEST(Reparam, UnbiasedGradientOfQuadratic) {
    // g(x) = a x² + b x, E[g] = a(μ² + s) + bμ with s the variance.
    const double a = 0.7, b = -1.3, mu = 0.4, s = 2.0;
    auto expect = [&](double m, double v) { return a * (m * m + v) + b * m; };
    const double fd_mu = (expect(mu + 1e-5, s) - expect(mu - 1e-5, s)) / 2e-5;
    const double fd_s = (expect(mu, s + 1e-5) - expect(mu, s - 1e-5)) / 2e-5;
    Rng rng(10);
    std::vector<double> gm(100000), gs(100000);
    for (std::size_t i = 0; i < gm.size(); ++i) {
        const auto r = reparam_sample({mu}, {s}, rng);
        const double dg = 2 * a * r.x[0] + b;
        gm[i] = dg;
        gs[i] = dg * r.eps[0] / (2 * std::sqrt(s));
    }
    const Moments mm = moments(gm), ms = moments(gs);
    EXPECT_LE(std::abs(mm.mean - fd_mu), 3 * mm.se_mean);
    EXPECT_LE(std::abs(ms.mean - fd_s), 3 * ms.se_mean);
}
