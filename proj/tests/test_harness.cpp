#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "san/errors.hpp"
#include "san/harness.hpp"

using namespace san;

namespace {

std::string temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("san_test_harness_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

TrainConfig small_pinwheel(int iterations) {
    TrainConfig cfg;
    cfg.data.n_per_arm = 100;
    cfg.iterations = iterations;
    cfg.eval_every = 10;
    cfg.beta2 = cfg.beta3 = 0.01;
    cfg.record_wallclock = false;
    return cfg;
}

TrainConfig small_dots(Method method, int iterations) {
    TrainConfig cfg;
    cfg.method = method;
    cfg.model = PriorKind::Lds;
    cfg.latent_dim = 2;
    cfg.hidden = {20};
    cfg.batch = 8;
    cfg.data.kind = "dots";
    cfg.data.n_seq = 30;
    cfg.data.t_len = 12;
    cfg.data.width = 8;
    cfg.iterations = iterations;
    cfg.eval_every = 1;
    cfg.taus = {1, 3};
    cfg.decoder_init_var = 1e-3;
    cfg.record_wallclock = false;
    return cfg;
}

std::string lines(const std::vector<MetricsRow>& rows, const std::vector<int>& taus) {
    std::string out;
    for (const auto& r : rows) out += metrics_line(r, taus) + "\n";
    return out;
}

}  // namespace

TEST(Config, MapRoundTripAndErrors) {
    TrainConfig cfg;
    cfg.method = Method::LdsEm;
    cfg.model = PriorKind::Tmm;
    cfg.hidden = {7, 3};
    cfg.beta1 = 0.123456789012345;
    cfg.taus = {1, 5};
    cfg.sequential = true;
    cfg.data.kind = "dots";
    cfg.data.outlier_fraction = 0.3;
    const auto m = config_to_map(cfg);
    EXPECT_EQ(config_to_map(config_from_map(m)), m);
    EXPECT_EQ(config_from_map(m).beta1, cfg.beta1);
    EXPECT_EQ(parse_model_kind("tmm"), PriorKind::Tmm);
    EXPECT_THROW(config_from_map({{"no-such-key", "1"}}), ContractError);
    EXPECT_THROW(config_from_map({{"beta1", "abc"}}), ContractError);
    TrainConfig bad;
    bad.components = 0;
    EXPECT_THROW(bad.validate(), ContractError);
}

TEST(Checkpoint, EncodeDecodeBitExact) {
    Checkpoint c;
    c.meta["a"] = "b";
    c.meta["empty"] = "";
    c.arrays["x"] = {1.0, -0.0, std::nextafter(1.0, 2.0), 1e-310, INFINITY};
    c.arrays["nan"] = {NAN};
    c.arrays["none"] = {};
    const std::string bytes = encode_checkpoint(c);
    EXPECT_EQ(bytes.substr(0, 7), "SANCKPT");
    const Checkpoint d = decode_checkpoint(bytes);
    EXPECT_EQ(d.meta, c.meta);
    EXPECT_EQ(encode_checkpoint(d), bytes);
    EXPECT_TRUE(std::signbit(d.arrays.at("x")[1]));
    EXPECT_TRUE(std::isnan(d.arrays.at("nan")[0]));

    EXPECT_THROW(decode_checkpoint("garbage!"), ParseError);
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), ParseError);
    std::string wrong_version = bytes;
    wrong_version[8] = 9;
    EXPECT_THROW(decode_checkpoint(wrong_version), ParseError);

    const std::string dir = temp_dir("ckpt");
    save_checkpoint(c, dir + "/c.bin");
    EXPECT_FALSE(std::filesystem::exists(dir + "/c.bin.tmp"));
    EXPECT_EQ(slurp(dir + "/c.bin"), bytes);
    EXPECT_THROW(load_checkpoint(dir + "/missing.bin"), ContractError);
}

TEST(TrainSan, SmokeFiniteAndFast) {
    const TrainConfig cfg = small_pinwheel(50);
    const Dataset ds = make_dataset(cfg.data);
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult r = train_san(cfg, ds);
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 60.0);
    ASSERT_TRUE(r.ok) << r.error;
    ASSERT_EQ(r.metrics.size(), 6u);
    for (const MetricsRow& m : r.metrics)
        for (double v : {m.train_bound, m.val_bound, m.test_bound, m.imputation_mse, m.recon_mse})
            EXPECT_TRUE(std::isfinite(v));
    for (std::size_t i = 1; i < r.metrics.size(); ++i) EXPECT_GT(r.metrics[i].iteration, r.metrics[i - 1].iteration);
    EXPECT_EQ(r.state.iteration, 50);
}

TEST(TrainSan, AllOptionCombinationsRun) {
    for (PriorKind model : {PriorKind::Gmm, PriorKind::Tmm})
        for (Optimizer opt : {Optimizer::Sgd, Optimizer::Adagrad, Optimizer::Van})
            for (ThetaNnMode nn : {ThetaNnMode::Point, ThetaNnMode::Bayes}) {
                TrainConfig cfg = small_pinwheel(5);
                cfg.model = model;
                cfg.optimizer = opt;
                cfg.theta_nn = nn;
                cfg.sequential = opt == Optimizer::Sgd;
                cfg.pgm_message = nn == ThetaNnMode::Bayes ? PgmMessage::Sin : PgmMessage::Vb;
                if (opt == Optimizer::Sgd) cfg.beta2 = cfg.beta3 = 1e-7;
                const TrainResult r = train_san(cfg, make_dataset(cfg.data));
                EXPECT_TRUE(r.ok) << r.error;
                EXPECT_TRUE(std::isfinite(r.metrics.back().test_bound));
            }
}

TEST(TrainSan, DeterministicMetricsAndFiles) {
    const TrainConfig cfg = small_pinwheel(30);
    const Dataset ds = make_dataset(cfg.data);
    const std::string a = temp_dir("det_a"), b = temp_dir("det_b");
    const TrainResult ra = train_san(cfg, ds, a);
    const TrainResult rb = train_san(cfg, ds, b);
    EXPECT_EQ(lines(ra.metrics, {}), lines(rb.metrics, {}));
    EXPECT_EQ(slurp(a + "/metrics.csv"), slurp(b + "/metrics.csv"));
    EXPECT_EQ(slurp(a + "/checkpoint.bin"), slurp(b + "/checkpoint.bin"));
    EXPECT_EQ(lines(read_metrics_csv(a + "/metrics.csv"), {}), lines(ra.metrics, {}));
    TrainConfig other = cfg;
    other.seed = 1;
    EXPECT_NE(lines(train_san(other, ds).metrics, {}), lines(ra.metrics, {}));
}

TEST(TrainSan, CheckpointRoundTripEvaluatesBitExactly) {
    const std::string dir = temp_dir("roundtrip");
    for (Method method : {Method::San, Method::Vae, Method::VbGmm}) {
        TrainConfig cfg = small_pinwheel(20);
        cfg.method = method;
        cfg.theta_nn = method == Method::San ? ThetaNnMode::Bayes : ThetaNnMode::Point;
        const Dataset ds = make_dataset(cfg.data);
        const TrainResult r = train(cfg, ds);
        ASSERT_TRUE(r.ok);
        save_checkpoint(to_checkpoint(r.state), dir + "/s.bin");
        const TrainState back = from_checkpoint(load_checkpoint(dir + "/s.bin"));
        EvalTasks tasks;
        tasks.train_bound = true;
        tasks.reconstruction = method != Method::VbGmm;
        EXPECT_EQ(metrics_line(evaluate(back, ds, tasks), {}), metrics_line(evaluate(r.state, ds, tasks), {}));
        EXPECT_EQ(encode_checkpoint(to_checkpoint(back)), encode_checkpoint(to_checkpoint(r.state)));
    }
    const TrainConfig cfg = small_dots(Method::LdsEm, 3);
    const Dataset ds = make_dataset(cfg.data);
    const TrainResult r = train(cfg, ds);
    const TrainState back = from_checkpoint(decode_checkpoint(encode_checkpoint(to_checkpoint(r.state))));
    EvalTasks tasks;
    tasks.taus = {1, 2};
    EXPECT_EQ(metrics_line(evaluate(back, ds, tasks), {1, 2}), metrics_line(evaluate(r.state, ds, tasks), {1, 2}));
}

TEST(TrainSan, ResumeContinuesToTarget) {
    TrainConfig cfg = small_pinwheel(10);
    const Dataset ds = make_dataset(cfg.data);
    const TrainResult first = train_san(cfg, ds);
    TrainState s = first.state;
    s.cfg.iterations = 20;
    const TrainResult second = resume(s, ds);
    ASSERT_TRUE(second.ok);
    EXPECT_EQ(second.state.iteration, 20);
    EXPECT_EQ(second.metrics.front().iteration, 20);
}

TEST(TrainSan, NumericalFailureKeepsLastGoodState) {
    TrainConfig cfg = small_pinwheel(10);
    Dataset ds = make_dataset(cfg.data);
    for (std::size_t i : ds.train) ds.rows[i][0] = NAN;
    const std::string dir = temp_dir("failure");
    const TrainResult r = train_san(cfg, ds, dir);
    EXPECT_FALSE(r.ok);
    EXPECT_NE(r.error.find("dnn_entropy"), std::string::npos);
    EXPECT_EQ(r.state.iteration, 0);
    ASSERT_TRUE(std::filesystem::exists(dir + "/checkpoint.bin"));
    const TrainState saved = from_checkpoint(load_checkpoint(dir + "/checkpoint.bin"));
    EXPECT_EQ(saved.model.decoder.params, r.state.model.decoder.params);
}

TEST(TrainSan, OnlyLambdaMovesWithZeroNetworkSteps) {
    std::vector<double> gains;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        TrainConfig cfg = small_pinwheel(40);
        cfg.seed = seed;
        cfg.beta2 = cfg.beta3 = 0.0;
        cfg.eval_every = 40;
        cfg.eval_samples = 4;
        const Dataset ds = make_dataset(cfg.data);
        const TrainState init = init_state(cfg, 2);
        const TrainResult r = train_san(cfg, ds);
        EXPECT_EQ(r.state.model.decoder.params, init.model.decoder.params);
        EXPECT_EQ(r.state.sin.encoder.params, init.sin.encoder.params);
        EXPECT_EQ(r.state.sin.phi_pgm, init.sin.phi_pgm);
        EXPECT_NE(r.state.q.flat(), init.q.flat());
        gains.push_back(r.metrics.back().train_bound - r.metrics.front().train_bound);
    }
    std::nth_element(gains.begin(), gains.begin() + 5, gains.end());
    EXPECT_GT(gains[5], 0.0);
}

TEST(TrainSan, FixedStandardNormalPriorMatchesVae) {
    TrainConfig cfg = small_pinwheel(1500);
    cfg.eval_every = 1500;
    cfg.fixed_prior = true;
    cfg.eval_samples = 5;
    const Dataset ds = make_dataset(cfg.data);
    const TrainResult san = train_san(cfg, ds);
    cfg.method = Method::Vae;
    cfg.fixed_prior = false;
    const TrainResult vae = train_vae(cfg, ds);
    const double a = san.metrics.back().train_bound, b = vae.metrics.back().train_bound;
    EXPECT_LT(std::abs(a - b), 0.02 * std::abs(b)) << a << " vs " << b;
    // Neither run stays at its starting point.
    EXPECT_GT(a, san.metrics.front().train_bound);
}

TEST(TrainVae, ImprovesOverInitialization) {
    std::vector<double> gains;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        TrainConfig cfg = small_pinwheel(100);
        cfg.method = Method::Vae;
        cfg.seed = seed;
        cfg.eval_every = 100;
        const TrainResult r = train_vae(cfg, make_dataset(cfg.data));
        gains.push_back(r.metrics.back().test_bound - r.metrics.front().test_bound);
    }
    std::nth_element(gains.begin(), gains.begin() + 5, gains.end());
    EXPECT_GT(gains[5], 0.0);
}

TEST(TrainVbGmm, BoundNondecreasingEveryIteration) {
    TrainConfig cfg = small_pinwheel(60);
    cfg.method = Method::VbGmm;
    cfg.eval_every = 1;
    cfg.eval_max_units = 100000;
    const Dataset ds = make_dataset(cfg.data);
    const TrainResult r = train_vb_gmm(cfg, ds);
    ASSERT_EQ(r.metrics.size(), 61u);
    for (std::size_t i = 1; i < r.metrics.size(); ++i)
        EXPECT_GE(r.metrics[i].train_bound, r.metrics[i - 1].train_bound - 1e-12) << "iteration " << i;
    const Rows y = ds.gather_rows(ds.train);
    EXPECT_NEAR(r.metrics.back().train_bound,
                vb_gmm_bound(r.state.q, default_hyperprior(10, 2), y) / static_cast<double>(y.size()), 1e-10);
}

TEST(TrainVbGmm, SingleComponentIsClosedFormPosterior) {
    TrainConfig cfg = small_pinwheel(1);
    cfg.method = Method::VbGmm;
    cfg.components = 1;
    const Dataset ds = make_dataset(cfg.data);
    const TrainResult r = train_vb_gmm(cfg, ds);
    const Rows y = ds.gather_rows(ds.train);
    const double n = static_cast<double>(y.size());
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const Row& v : y) mean += Eigen::Vector2d(v[0], v[1]) / n;
    Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
    for (const Row& v : y) {
        const Eigen::Vector2d c = Eigen::Vector2d(v[0], v[1]) - mean;
        scatter += c * c.transpose();
    }
    // Prior: m0 = 0, kappa0 = 0.1, W0 = 2 I, nu0 = 4.
    const double k0 = 0.1, nu0 = 4.0;
    const Eigen::Matrix2d w0 = 2.0 * Eigen::Matrix2d::Identity();
    const expfam::NormalWishartParam post = expfam::as_normal_wishart(r.state.q.nw[0]);
    EXPECT_NEAR(post.kappa, k0 + n, 1e-9);
    EXPECT_NEAR(post.nu, nu0 + n, 1e-9);
    EXPECT_LT((post.m - n * mean / (k0 + n)).norm(), 1e-10);
    const Eigen::Matrix2d w_inv = w0.inverse() + scatter + k0 * n / (k0 + n) * mean * mean.transpose();
    EXPECT_LT((post.W.inverse() - w_inv).norm() / w_inv.norm(), 1e-10);
    EXPECT_NEAR(expfam::as_dirichlet(r.state.q.dirichlet).alpha(0), 1.0 + n, 1e-9);
}

TEST(TrainVbGmm, SeparatedBlobsGiveHardResponsibilities) {
    Dataset ds;
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const double c = i % 2 ? 20.0 : -20.0;
        ds.rows.push_back({c + std_normal(rng), c + std_normal(rng)});
    }
    ds = split(ds, 0.7, 1);
    TrainConfig cfg;
    cfg.method = Method::VbGmm;
    cfg.components = 2;
    cfg.iterations = 50;
    cfg.eval_every = 50;
    const TrainResult r = train_vb_gmm(cfg, ds);
    std::vector<Vec<double>> x(ds.rows.begin(), ds.rows.end());
    for (const auto& resp : expected_log_marginal(r.state.q, x).resp)
        EXPECT_GT(std::max(resp[0], resp[1]), 1.0 - 1e-9);
}

TEST(TrainLdsEm, LikelihoodMonotone) {
    TrainConfig cfg = small_dots(Method::LdsEm, 25);
    cfg.eval_max_units = 100000;
    const Dataset ds = make_dataset(cfg.data);
    const TrainResult r = train_lds_em(cfg, ds);
    ASSERT_TRUE(r.ok) << r.error;
    for (std::size_t i = 1; i < r.metrics.size(); ++i)
        EXPECT_GE(r.metrics[i].train_bound, r.metrics[i - 1].train_bound - 1e-9 * std::abs(r.metrics[i].train_bound))
            << "iteration " << i;
    EXPECT_GT(r.metrics.back().train_bound, r.metrics.front().train_bound);
    EXPECT_EQ(lines(train_lds_em(cfg, ds).metrics, cfg.taus), lines(r.metrics, cfg.taus));
}

TEST(TrainSanLds, RunsAndReportsTauErrors) {
    TrainConfig cfg = small_dots(Method::San, 10);
    cfg.eval_every = 5;
    const TrainResult r = train_san(cfg, make_dataset(cfg.data));
    ASSERT_TRUE(r.ok) << r.error;
    for (int t : {1, 3}) EXPECT_TRUE(std::isfinite(r.metrics.back().mae.at(t)));
}

TEST(TauMae, HandComputedFixture) {
    const std::vector<Rows> seqs{{{1}, {2}, {3}, {4}}, {{0}, {0}, {1}, {1}}};
    const std::vector<Rows> fc{{{1.5}, {3.5}, {3}}, {{0}, {2}, {1}}};
    // |2-1.5| + |3-3.5| + |4-3| + |0-0| + |1-2| + |1-1| = 3 over 2·3·1 targets.
    EXPECT_NEAR(tau_mae(seqs, fc, 1), 0.5, 1e-12);
    const std::vector<Rows> fc2{{{3}, {3}}, {{1}, {0}}};
    // |3-3| + |4-3| + |1-1| + |1-0| = 2 over 4.
    EXPECT_NEAR(tau_mae(seqs, fc2, 2), 0.5, 1e-12);
    EXPECT_THROW(tau_mae(seqs, fc2, 1), ContractError);
}

TEST(TauMae, ZeroHorizonIsFilteredReconstructionError) {
    const TrainConfig cfg = small_dots(Method::LdsEm, 3);
    const Dataset ds = make_dataset(cfg.data);
    const TrainState s = train_lds_em(cfg, ds).state;
    const std::vector<Rows> test = ds.gather_units(ds.test);
    double abs_sum = 0, count = 0;
    for (const Rows& seq : test) {
        std::vector<Eigen::VectorXd> y;
        for (const Row& r : seq) y.push_back(Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size())));
        const SmootherResult f = kalman_smooth(s.lds, y);
        for (std::size_t t = 0; t < seq.size(); ++t) {
            const Eigen::VectorXd rec = s.lds.C * f.filt_mean[t] + s.lds.b;
            abs_sum += (rec - y[t]).cwiseAbs().sum();
            count += static_cast<double>(rec.size());
        }
    }
    EXPECT_NEAR(tau_mae(test, forecast(s, test, 0), 0), abs_sum / count, 1e-12);
}

TEST(TauMae, ConstantSequencesUnderConstantModel) {
    TrainConfig cfg = small_dots(Method::LdsEm, 0);
    TrainState s = init_state(cfg, 3);
    s.lds.C.setZero();
    s.lds.b = Eigen::Vector3d(0.25, -1.0, 2.0);
    s.lds.R = {Eigen::Matrix3d::Identity()};
    const std::vector<Rows> seqs(3, Rows(7, Row{0.25, -1.0, 2.0}));
    for (int tau : {0, 1, 4}) EXPECT_EQ(tau_mae(seqs, forecast(s, seqs, tau), tau), 0.0);
}

TEST(TauMae, SampledForecastMatchesMeanForLinearDecoder) {
    // With an affine decoder the predictive mean of y is the decoded
    // propagated mean, so the sample average must agree with it.
    TrainConfig cfg = small_dots(Method::San, 0);
    TrainState s = init_state(cfg, 8);
    Rng rng(9);
    s.model.decoder = nnet::Mlp(cfg.latent_dim, {6}, 16, nnet::Act::Identity);
    s.model.decoder.init(rng);
    const Dataset ds = make_dataset(cfg.data);
    const std::vector<Rows> seqs = ds.gather_units({ds.test[0], ds.test[1]});
    for (int tau : {1, 3}) {
        const std::vector<Rows> plug = forecast(s, seqs, tau, 0);
        const std::vector<Rows> mc = forecast(s, seqs, tau, 20000, 3);
        double diff = 0.0, size = 0.0;
        for (std::size_t n = 0; n < seqs.size(); ++n)
            for (std::size_t t = 0; t < plug[n].size(); ++t)
                for (std::size_t i = 0; i < plug[n][t].size(); ++i) {
                    diff += std::abs(plug[n][t][i] - mc[n][t][i]);
                    size += std::abs(plug[n][t][i]);
                }
        EXPECT_LT(diff, 0.06 * size) << "tau " << tau;
        EXPECT_GT(diff, 0.0);
    }
}

TEST(Evaluate, TaskModelMismatchIsContractError) {
    const TrainConfig cfg = small_pinwheel(1);
    const Dataset ds = make_dataset(cfg.data);
    const TrainState s = init_state(cfg, 2);
    EvalTasks tasks;
    tasks.taus = {1};
    EXPECT_THROW(evaluate(s, ds, tasks), ContractError);
    TrainConfig vb = cfg;
    vb.method = Method::VbGmm;
    EXPECT_THROW(evaluate(init_state(vb, 2), ds, EvalTasks{}), ContractError);
    EXPECT_THROW(evaluate(s, make_dataset(small_dots(Method::San, 1).data), EvalTasks{}), ContractError);
}

TEST(Evaluate, VbGmmImputationUsesObservedCoordinates) {
    // Two blobs at ±(20, 20): one observed coordinate pins the blob, so the
    // conditional fill is off by about the within-blob spread, while the
    // column mean is off by about 20.
    Dataset ds;
    Rng rng(4);
    for (int i = 0; i < 400; ++i) {
        const double c = i % 2 ? 20.0 : -20.0;
        ds.rows.push_back({c + std_normal(rng), c + std_normal(rng)});
    }
    ds = split(ds, 0.7, 1);
    TrainConfig cfg;
    cfg.method = Method::VbGmm;
    cfg.components = 2;
    cfg.iterations = 50;
    cfg.eval_every = 50;
    const TrainResult r = train_vb_gmm(cfg, ds);
    EvalTasks tasks;
    tasks.reconstruction = false;
    tasks.bound = false;
    const double mse = evaluate(r.state, ds, tasks).imputation_mse;
    // Rows with both coordinates masked fall back to the blob average, about
    // 400 each, and make up a fifth of the masked coordinates.
    EXPECT_LT(mse, 120.0);
    EXPECT_GT(mse, 0.5);
}

TEST(Pca, OrthonormalAndOrdered) {
    Rng rng(5);
    Rows rows;
    for (int i = 0; i < 400; ++i) {
        const double a = 3 * std_normal(rng), b = std_normal(rng);
        rows.push_back({a + 0.1 * std_normal(rng), b, a - b, 0.01 * std_normal(rng)});
    }
    const PcaBasis p = pca(rows, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            double dot = 0;
            for (std::size_t k = 0; k < 4; ++k) dot += p.components[i][k] * p.components[j][k];
            EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-10);
        }
    // Recomputed variances along the components are nonincreasing.
    std::vector<double> var(3, 0.0);
    for (const Row& r : rows)
        for (std::size_t j = 0; j < 3; ++j) {
            double s = 0;
            for (std::size_t k = 0; k < 4; ++k) s += p.components[j][k] * (r[k] - p.mean[k]);
            var[j] += s * s;
        }
    EXPECT_GE(var[0], var[1]);
    EXPECT_GE(var[1], var[2]);
}

TEST(DumpPlotData, CountsProjectionAndDeterminism) {
    const TrainConfig cfg = small_pinwheel(10);
    const Dataset ds = make_dataset(cfg.data);
    const TrainResult r = train_san(cfg, ds);
    const std::string a = temp_dir("plots_a"), b = temp_dir("plots_b");
    dump_plot_data(r.state, ds, r.metrics, a, 123, 7);
    dump_plot_data(r.state, ds, r.metrics, b, 123, 7);
    auto count_lines = [](const std::string& path) {
        std::ifstream f(path);
        return static_cast<std::size_t>(std::count(std::istreambuf_iterator<char>(f), {}, '\n'));
    };
    EXPECT_EQ(count_lines(a + "/samples.csv"), 124u);
    EXPECT_EQ(count_lines(a + "/data.csv"), ds.rows.size() + 1);
    EXPECT_EQ(count_lines(a + "/curves.csv"), r.metrics.size() + 1);
    EXPECT_FALSE(std::filesystem::exists(a + "/pca.csv"));
    for (const char* f : {"/samples.csv", "/data.csv", "/curves.csv"}) EXPECT_EQ(slurp(a + f), slurp(b + f));

    // D > 2: projected onto two principal components.
    const TrainConfig dcfg = small_dots(Method::LdsEm, 2);
    const Dataset dots = make_dataset(dcfg.data);
    const TrainResult lr = train_lds_em(dcfg, dots);
    const std::string c = temp_dir("plots_c");
    dump_plot_data(lr.state, dots, lr.metrics, c, 50, 1);
    EXPECT_TRUE(std::filesystem::exists(c + "/pca.csv"));
    std::ifstream f(c + "/samples.csv");
    std::string header;
    std::getline(f, header);
    EXPECT_EQ(header, "pc0,pc1,component,weight");
    EXPECT_THROW(dump_plot_data(lr.state, dots, lr.metrics, "/proc/no_such_dir/x", 5, 1), ContractError);
}
