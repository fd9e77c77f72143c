#include <gtest/gtest.h>

#include <cmath>

#include "san/kernels.hpp"
#include "san/nnet.hpp"

using namespace san;
using namespace san::kernels;

namespace {

std::vector<double> rand_vec(int n, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = std_normal(rng);
    return v;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12 * std::max(1.0, std::abs(a[i])));
}

}  // namespace

TEST(Kernels, ScalarAlwaysSupported) {
    const auto s = supported();
    ASSERT_FALSE(s.empty());
    EXPECT_EQ(s.front(), Isa::Scalar);
}

TEST(Kernels, EveryIsaMatchesScalarReference) {
    const KernelTable& ref = scalar_table();
    Rng rng(1);
    for (Isa isa : supported()) {
        const KernelTable& t = table(isa);
        for (int n = 1; n <= 67; ++n) {
            const auto a = rand_vec(n, rng), b = rand_vec(n, rng);
            EXPECT_NEAR(t.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), 1e-12 * n) << isa_name(isa);

            auto y1 = b, y2 = b;
            ref.axpy(0.7, a.data(), y1.data(), n);
            t.axpy(0.7, a.data(), y2.data(), n);
            expect_close(y1, y2);

            const int rows = 1 + n % 9;
            const auto w = rand_vec(rows * n, rng), bias = rand_vec(rows, rng), g = rand_vec(rows, rng);
            std::vector<double> o1(static_cast<std::size_t>(rows)), o2(static_cast<std::size_t>(rows));
            ref.gemv(w.data(), a.data(), bias.data(), o1.data(), rows, n);
            t.gemv(w.data(), a.data(), bias.data(), o2.data(), rows, n);
            expect_close(o1, o2);

            std::vector<double> t1(static_cast<std::size_t>(n), 0.5), t2 = t1;
            ref.gemv_t_acc(w.data(), g.data(), t1.data(), rows, n);
            t.gemv_t_acc(w.data(), g.data(), t2.data(), rows, n);
            expect_close(t1, t2);

            auto g1 = w, g2 = w;
            ref.ger_acc(g1.data(), g.data(), a.data(), rows, n);
            t.ger_acc(g2.data(), g.data(), a.data(), rows, n);
            expect_close(g1, g2);
        }
    }
}

TEST(Kernels, MlpAgreesAcrossIsas) {
    Rng rng(2);
    nnet::Mlp net(5, {50, 50}, 6);
    net.init(rng);
    const auto x = rand_vec(5, rng), up = rand_vec(6, rng);
    const Isa saved = active_isa();
    set_active(Isa::Scalar);
    nnet::GradTape tape;
    const auto out_ref = nnet::forward(net, x, &tape);
    std::vector<double> grad_ref;
    const auto gin_ref = nnet::backward(net, tape, up, grad_ref);
    for (Isa isa : supported()) {
        set_active(isa);
        nnet::GradTape t2;
        const auto out = nnet::forward(net, x, &t2);
        std::vector<double> grad;
        const auto gin = nnet::backward(net, t2, up, grad);
        expect_close(out_ref, out);
        expect_close(gin_ref, gin);
        expect_close(grad_ref, grad);
    }
    set_active(saved);
}
