#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "san/errors.hpp"
#include "san/expfam.hpp"

using namespace san;
using namespace san::expfam;

namespace {

MatrixXd random_spd(int d, Rng& rng, double floor = 0.3) {
    MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = std_normal(rng);
    return a * a.transpose() / d + floor * MatrixXd::Identity(d, d);
}

VectorXd random_vec(int d, Rng& rng, double scale = 1.0) {
    VectorXd v(d);
    for (int i = 0; i < d; ++i) v(i) = scale * std_normal(rng);
    return v;
}

NaturalParamVector random_param(Family f, int d, Rng& rng) {
    switch (f) {
        case Family::Dirichlet: {
            VectorXd a(d);
            for (int i = 0; i < d; ++i) a(i) = 0.3 + 5.0 * uniform01(rng);
            return to_natural(DirichletParam{a});
        }
        case Family::NormalWishart:
            return to_natural(NormalWishartParam{random_vec(d, rng), 0.2 + 3.0 * uniform01(rng), random_spd(d, rng),
                                                 d + 0.5 + 6.0 * uniform01(rng)});
        case Family::GaussianDiag: {
            VectorXd var(d);
            for (int i = 0; i < d; ++i) var(i) = 0.2 + 2.0 * uniform01(rng);
            return to_natural(GaussianParam::diag(random_vec(d, rng), var));
        }
        case Family::GaussianDense:
            return to_natural(GaussianParam::full(random_vec(d, rng), random_spd(d, rng)));
    }
    return {};
}

const Family kFamilies[] = {Family::Dirichlet, Family::NormalWishart, Family::GaussianDiag, Family::GaussianDense};

int dim_for(Family f, int trial) { return f == Family::Dirichlet ? 2 + trial % 4 : 1 + trial % 3; }

// Mean/standard error of a sample of scalars.
struct Moments {
    double mean = 0, se = 0;
};
Moments moments(const std::vector<double>& xs) {
    double s = 0, s2 = 0;
    for (double x : xs) s += x;
    const double m = s / xs.size();
    for (double x : xs) s2 += (x - m) * (x - m);
    return {m, std::sqrt(s2 / (xs.size() - 1) / xs.size())};
}

}  // namespace

TEST(ToMean, UniformDirichlet) {
    const auto m = to_mean(to_natural(DirichletParam{VectorXd::Ones(2)}));
    EXPECT_NEAR(m.v(0), -1.0, 1e-13);
    EXPECT_NEAR(m.v(1), -1.0, 1e-13);
}

TEST(ToMean, StandardNormalMoments) {
    const auto dense = to_mean(to_natural(GaussianParam::full(VectorXd::Zero(2), MatrixXd::Identity(2, 2))));
    EXPECT_NEAR(dense.v.head(2).norm(), 0.0, 1e-15);
    EXPECT_NEAR((unvech(dense.v.tail(3), 2) - MatrixXd::Identity(2, 2)).norm(), 0.0, 1e-14);
    const auto diag = to_mean(to_natural(GaussianParam::diag(VectorXd::Zero(2), VectorXd::Ones(2))));
    EXPECT_NEAR(diag.v(2), 1.0, 1e-15);
    EXPECT_NEAR(diag.v(3), 1.0, 1e-15);
}

TEST(ToMean, NormalWishartAgainstMonteCarlo) {
    const NormalWishartParam p{VectorXd::Zero(2), 2.0, MatrixXd::Identity(2, 2), 4.0};
    const auto n = to_natural(p);
    const auto mean = to_mean(n);
    EXPECT_NEAR((unvech(mean.v.segment(3, 3), 2) * -2.0 - 4.0 * MatrixXd::Identity(2, 2)).norm(), 0.0, 1e-12);

    Rng rng(7);
    const int draws = 1000000;
    std::vector<std::vector<double>> cols(mean.v.size(), std::vector<double>(draws));
    for (int s = 0; s < draws; ++s) {
        const VectorXd t = sufficient_stats(Family::NormalWishart, 2, sample(n, rng));
        for (int i = 0; i < t.size(); ++i) cols[i][s] = t(i);
    }
    for (int i = 0; i < mean.v.size(); ++i) {
        const Moments mc = moments(cols[i]);
        EXPECT_LE(std::abs(mc.mean - mean.v(i)), 3.0 * mc.se) << "coordinate " << i;
    }
}

TEST(LogPartition, UniformDirichletIsZero) {
    EXPECT_NEAR(log_partition(to_natural(DirichletParam{VectorXd::Ones(2)})), 0.0, 1e-14);
}

TEST(LogPartition, StandardNormalNormalizesByQuadrature) {
    const auto n = to_natural(GaussianParam::diag(VectorXd::Zero(1), VectorXd::Ones(1)));
    const double a = log_partition(n);
    EXPECT_NEAR(a, 0.5 * std::log(2 * std::numbers::pi), 1e-14);
    EXPECT_NEAR(a, 0.9189385, 1e-7);
    const int nodes = 200001;
    const double lo = -10, hi = 10, h = (hi - lo) / (nodes - 1);
    double integral = 0.0;
    for (int i = 0; i < nodes; ++i) {
        const double x = lo + i * h;
        const double w = (i == 0 || i == nodes - 1) ? 0.5 : 1.0;
        integral += w * std::exp(n.v(0) * x + n.v(1) * x * x - a);
    }
    EXPECT_NEAR(integral * h, 1.0, 1e-9);
}

TEST(LogPartition, NormalWishartReducesToNormalGamma) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const double m = std_normal(rng), kappa = 0.1 + 3 * uniform01(rng), w = 0.1 + 2 * uniform01(rng),
                     nu = 0.2 + 6 * uniform01(rng);
        const NormalWishartParam p{VectorXd::Constant(1, m), kappa, MatrixXd::Constant(1, 1, w), nu};
        // Normal-Gamma(m, kappa, a, b): precision ~ Gamma(shape a, rate b), mean | precision ~ N(m, 1/(kappa λ)).
        const double a = 0.5 * nu, b = 0.5 / w;
        const double ng = 0.5 * std::log(2 * std::numbers::pi) - 0.5 * std::log(kappa) + std::lgamma(a) - a * std::log(b);
        EXPECT_NEAR(log_partition(to_natural(p)), ng, 1e-11 * std::max(1.0, std::abs(ng)));
    }
}

TEST(KL, ClosedFormsAndIdentity) {
    const auto n0 = to_natural(GaussianParam::diag(VectorXd::Zero(1), VectorXd::Ones(1)));
    const auto n1 = to_natural(GaussianParam::diag(VectorXd::Ones(1), VectorXd::Ones(1)));
    EXPECT_NEAR(kl_divergence(n0, n1), 0.5, 1e-13);
    EXPECT_NEAR(kl_divergence(n0, n0), 0.0, 1e-15);
}

TEST(KL, DirichletAgainstMonteCarlo) {
    VectorXd aq(2), ap(2);
    aq << 2, 3;
    ap << 1, 1;
    const auto q = to_natural(DirichletParam{aq});
    const auto p = to_natural(DirichletParam{ap});
    Rng rng(11);
    std::vector<double> vals(1000000);
    for (auto& v : vals) {
        const VectorXd pi = sample(q, rng);
        v = log_density(q, pi) - log_density(p, pi);
    }
    const Moments mc = moments(vals);
    EXPECT_LE(std::abs(mc.mean - kl_divergence(q, p)), 3 * mc.se);
}

TEST(KL, FamilyMismatchIsContractError) {
    EXPECT_THROW(kl_divergence(to_natural(DirichletParam{VectorXd::Ones(2)}),
                               to_natural(GaussianParam::diag(VectorXd::Zero(1), VectorXd::Ones(1)))),
                 ContractError);
}

TEST(KL, NonnegativeOnRandomPairs) {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const Family f = kFamilies[trial % 4];
        const int d = dim_for(f, trial);
        const auto q = random_param(f, d, rng);
        const auto p = random_param(f, d, rng);
        EXPECT_GT(kl_divergence(q, p), 0.0);
        EXPECT_NEAR(kl_divergence(q, q), 0.0, 1e-10);
    }
}

TEST(Sample, DegenerateGaussian) {
    Rng rng(1);
    const auto n = to_natural(GaussianParam::diag(VectorXd::Constant(1, 5.0), VectorXd::Constant(1, 1e-12)));
    EXPECT_NEAR(sample(n, rng)(0), 5.0, 1e-5);
}

TEST(Sample, DirichletMean) {
    Rng rng(2);
    const auto n = to_natural(DirichletParam{VectorXd::Constant(2, 2.0)});
    std::vector<double> xs(100000);
    for (auto& x : xs) x = sample(n, rng)(0);
    const Moments m = moments(xs);
    EXPECT_LE(std::abs(m.mean - 0.5), 3 * m.se);
}

TEST(Sample, NormalWishartPrecisionMean) {
    Rng rng(4);
    MatrixXd w(2, 2);
    w << 1.0, 0.3, 0.3, 0.5;
    const NormalWishartParam p{VectorXd::Zero(2), 1.5, w, 5.0};
    const auto n = to_natural(p);
    std::vector<std::vector<double>> cols(4, std::vector<double>(100000));
    for (int s = 0; s < 100000; ++s) {
        const VectorXd draw = sample(n, rng);
        for (int i = 0; i < 4; ++i) cols[i][s] = draw(2 + i);
    }
    for (int i = 0; i < 4; ++i) {
        const Moments m = moments(cols[i]);
        EXPECT_LE(std::abs(m.mean - p.nu * w(i / 2, i % 2)), 3 * m.se);
    }
}

TEST(Sample, ReproducibleGivenSeed) {
    const auto n = to_natural(NormalWishartParam{VectorXd::Zero(2), 1.0, MatrixXd::Identity(2, 2), 3.0});
    Rng a(9), b(9);
    EXPECT_EQ(sample(n, a), sample(n, b));
}

TEST(Properties, NaturalMeanRoundTrip) {
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const Family f = kFamilies[trial % 4];
        const auto n = random_param(f, dim_for(f, trial), rng);
        const auto back = from_mean(to_mean(n));
        EXPECT_LT((back.v - n.v).norm() / n.v.norm(), 1e-8) << family_name(f);
    }
}

TEST(Properties, LogPartitionGradientIsMean) {
    Rng rng(17);
    for (int trial = 0; trial < 80; ++trial) {
        const Family f = kFamilies[trial % 4];
        const auto n = random_param(f, dim_for(f, trial), rng);
        const auto mean = to_mean(n);
        for (int i = 0; i < n.v.size(); ++i) {
            auto hi = n, lo = n;
            hi.v(i) += 1e-5;
            lo.v(i) -= 1e-5;
            const double fd = (log_partition(hi) - log_partition(lo)) / 2e-5;
            EXPECT_LT(std::abs(fd - mean.v(i)) / std::max(1.0, std::abs(mean.v(i))), 1e-4) << family_name(f) << " " << i;
        }
    }
}

TEST(Properties, ConjugacyClosure) {
    Rng rng(19);
    const int d = 2, n = 30;
    const NormalWishartParam prior{random_vec(d, rng), 0.5, random_spd(d, rng), 4.0};
    std::vector<VectorXd> xs;
    for (int i = 0; i < n; ++i) xs.push_back(random_vec(d, rng, 2.0));

    NaturalParamVector post = to_natural(prior);
    for (const auto& x : xs) {
        post.v.head(d) += x;
        post.v(d) += 1;
        post.v.segment(d + 1, 3) += vech2(x * x.transpose());
        post.v(d + 4) += 1;
    }
    const NormalWishartParam got = as_normal_wishart(post);

    VectorXd xbar = VectorXd::Zero(d);
    for (const auto& x : xs) xbar += x / n;
    MatrixXd s = MatrixXd::Zero(d, d);
    for (const auto& x : xs) s += (x - xbar) * (x - xbar).transpose();
    const double kappa = prior.kappa + n;
    const VectorXd m = (prior.kappa * prior.m + n * xbar) / kappa;
    const MatrixXd winv = prior.W.inverse() + s + prior.kappa * n / kappa * (xbar - prior.m) * (xbar - prior.m).transpose();
    EXPECT_NEAR(got.kappa, kappa, 1e-12);
    EXPECT_NEAR(got.nu, prior.nu + n, 1e-12);
    EXPECT_LT((got.m - m).norm(), 1e-12);
    EXPECT_LT((got.W - winv.inverse()).norm(), 1e-12);

    VectorXd alpha(3);
    alpha << 1.0, 2.0, 0.5;
    auto dir = to_natural(DirichletParam{alpha});
    VectorXd counts(3);
    counts << 4, 0, 7;
    dir.v += counts;
    EXPECT_LT((as_dirichlet(dir).alpha - (alpha + counts)).norm(), 1e-14);
}

TEST(Domain, InvalidParametersRejected) {
    EXPECT_THROW(to_natural(DirichletParam{VectorXd::Constant(2, -1.0)}), InvalidParameter);
    EXPECT_THROW(to_natural(NormalWishartParam{VectorXd::Zero(2), -1.0, MatrixXd::Identity(2, 2), 3.0}), InvalidParameter);
    EXPECT_THROW(to_natural(NormalWishartParam{VectorXd::Zero(2), 1.0, MatrixXd::Identity(2, 2), 0.5}), InvalidParameter);
    NaturalParamVector bad{Family::Dirichlet, 2, Coords::Natural, VectorXd::Constant(2, -2.0)};
    EXPECT_THROW(to_mean(bad), InvalidParameter);
    EXPECT_THROW(log_partition(bad), InvalidParameter);
}

TEST(Cholesky, JitterRescuesSemidefinite) {
    MatrixXd m(2, 2);
    m << 1.0, 1.0, 1.0, 1.0;
    const MatrixXd l = chol_jitter(m, "test");
    EXPECT_LT((l * l.transpose() - m).norm(), 1e-6);
    MatrixXd neg = -MatrixXd::Identity(2, 2);
    EXPECT_THROW(chol_jitter(neg, "test"), InvalidParameter);
}
