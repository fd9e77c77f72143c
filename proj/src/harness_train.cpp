#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "san/errors.hpp"
#include "san/gradients.hpp"
#include "san/harness.hpp"
#include "san/log.hpp"

namespace san {

namespace {

std::vector<double> standard_normal_mixture(int d) {
    return pack_mixture({1.0}, {Vec<double>(static_cast<std::size_t>(d), 0.0)}, {Mat<double>::identity(d)});
}

std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

// q(θ_PGM) starting point: component means at the generative model's random
// means, E[Λ] = I, prior weights.
PgmPosterior initial_q(const GenerativeModel& model) {
    const int k = model.components, d = model.latent_dim;
    const Mixture<double> mix = unpack_mixture(model.theta_pgm.data(), k, d);
    PgmPosterior q = model.hyperprior;
    for (int c = 0; c < k; ++c) {
        expfam::NormalWishartParam nw;
        nw.m = Eigen::Map<const Eigen::VectorXd>(mix.mu[static_cast<std::size_t>(c)].data(), d);
        nw.kappa = 1.0;
        nw.nu = d + 2.0;
        nw.W = Eigen::MatrixXd::Identity(d, d) / nw.nu;
        q.nw[static_cast<std::size_t>(c)] = expfam::to_natural(nw);
    }
    return q;
}

// Variance-head biases set so the initial decoder variance is v.
void set_decoder_variance(nnet::Mlp& decoder, int data_dim, double v) {
    if (v <= 0) return;
    const double raw = std::log(std::expm1(std::max(v - nnet::kVarFloor, 1e-12)));
    const nnet::LayerSpec& last = decoder.layers().back();
    for (int i = data_dim; i < 2 * data_dim; ++i) decoder.params[last.b_off + static_cast<std::size_t>(i)] = raw;
}

}  // namespace

TrainState init_state(const TrainConfig& cfg, int data_dim) {
    cfg.validate();
    require(data_dim >= 1, "init_state: data dimension must be positive");
    TrainState s;
    s.cfg = cfg;
    s.data_dim = data_dim;
    Rng rng = substream(cfg.seed, 0);
    const int d = cfg.latent_dim;
    switch (cfg.method) {
        case Method::San: {
            const int k = cfg.fixed_prior ? 1 : cfg.components;
            s.model = make_model(cfg.model, data_dim, d, k, cfg.hidden, rng, cfg.activation);
            s.model.dof = cfg.dof;
            set_decoder_variance(s.model.decoder, data_dim, cfg.decoder_init_var);
            s.sin = cfg.model == PriorKind::Lds ? make_lds_sin(data_dim, d, cfg.hidden, rng, cfg.activation)
                                                : make_gmm_sin(data_dim, d, k, cfg.hidden, rng, cfg.activation);
            if (cfg.fixed_prior) {
                s.model.theta_pgm = standard_normal_mixture(d);
                s.sin.phi_pgm = standard_normal_mixture(d);
            } else if (cfg.model == PriorKind::Gmm) {
                s.q = initial_q(s.model);
            }
            if (cfg.optimizer == Optimizer::Van) {
                s.van_nn = {s.model.decoder.params,
                            std::vector<double>(s.model.decoder.num_params(), cfg.van_init_var)};
                const std::vector<double> phi = concat(s.sin.encoder.params, s.sin.phi_pgm);
                s.van_phi = {phi, std::vector<double>(phi.size(), cfg.van_init_var)};
            }
            if (cfg.theta_nn == ThetaNnMode::Bayes) {
                s.bayes.mu = s.model.decoder.params;
                s.bayes.sigma2.assign(s.bayes.mu.size(), cfg.bayes_init_var);
                s.bayes.mu0 = 0.0;
                s.bayes.sigma0_sq = cfg.bayes_prior_var;
            }
            break;
        }
        case Method::Vae:
            s.model = make_model(PriorKind::Gmm, data_dim, d, 1, cfg.hidden, rng, cfg.activation);
            s.model.theta_pgm = standard_normal_mixture(d);
            set_decoder_variance(s.model.decoder, data_dim, cfg.decoder_init_var);
            s.sin.structure = Structure::Gmm;
            s.sin.latent_dim = d;
            s.sin.encoder = nnet::Mlp(data_dim, cfg.hidden, 2 * d, cfg.activation);
            s.sin.encoder.init(rng);
            break;
        case Method::VbGmm:
            s.q = default_hyperprior(cfg.components, data_dim);
            break;
        case Method::LdsEm:
            s.lds.A = Eigen::MatrixXd::Identity(d, d) * 0.9;
            s.lds.Q = Eigen::MatrixXd::Identity(d, d) * 0.19;
            s.lds.C = Eigen::MatrixXd::Zero(data_dim, d);
            s.lds.b = Eigen::VectorXd::Zero(data_dim);
            s.lds.mu1 = Eigen::VectorXd::Zero(d);
            s.lds.sigma1 = Eigen::MatrixXd::Identity(d, d);
            s.lds.R = {Eigen::MatrixXd::Identity(data_dim, data_dim)};
            break;
    }
    return s;
}

namespace {

std::vector<std::size_t> sample_batch(const std::vector<std::size_t>& pool, int batch, Rng& rng) {
    std::vector<std::size_t> idx = pool;
    const std::size_t b = std::min(idx.size(), static_cast<std::size_t>(batch));
    for (std::size_t i = 0; i < b; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(b);
    return idx;
}

void check_dataset(const TrainConfig& cfg, const Dataset& ds) {
    require(!ds.train.empty(), "train: dataset has no training split");
    const bool seq_model = (cfg.method == Method::San && cfg.model == PriorKind::Lds) || cfg.method == Method::LdsEm;
    require(seq_model == ds.sequential(), seq_model ? "train: this model needs sequence data"
                                                    : "train: this model needs independent rows");
}

// Owns periodic evaluation, the metrics log and checkpoints.
class Recorder {
public:
    Recorder(const TrainConfig& cfg, const Dataset& ds, std::string out_dir)
        : cfg_(cfg), ds_(ds), out_dir_(std::move(out_dir)), start_(std::chrono::steady_clock::now()) {
        if (!out_dir_.empty()) std::filesystem::create_directories(out_dir_);
    }

    bool due(std::int64_t it) const {
        return it == 0 || it % cfg_.eval_every == 0 || it == static_cast<std::int64_t>(cfg_.iterations);
    }

    void record(const TrainState& s) {
        EvalTasks tasks;
        tasks.train_bound = true;
        tasks.samples = cfg_.eval_samples;
        tasks.max_units = static_cast<std::size_t>(cfg_.eval_max_units);
        tasks.seed = cfg_.seed ^ 0x5eedULL;
        tasks.taus = cfg_.taus;
        tasks.reconstruction = s.cfg.method != Method::VbGmm;
        MetricsRow row = evaluate(s, ds_, tasks);
        row.iteration = s.iteration;
        row.wall_seconds = cfg_.record_wallclock
                               ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count()
                               : 0.0;
        rows.push_back(row);
        if (!out_dir_.empty()) {
            std::string text = metrics_header(cfg_.taus) + "\n";
            for (const MetricsRow& r : rows) text += metrics_line(r, cfg_.taus) + "\n";
            write_file_atomic(out_dir_ + "/metrics.csv", text);
            save_checkpoint(to_checkpoint(s), out_dir_ + "/checkpoint.bin");
        }
    }

    void save(const TrainState& s) const {
        if (!out_dir_.empty()) save_checkpoint(to_checkpoint(s), out_dir_ + "/checkpoint.bin");
    }

    std::vector<MetricsRow> rows;

private:
    const TrainConfig& cfg_;
    const Dataset& ds_;
    std::string out_dir_;
    std::chrono::steady_clock::time_point start_;
};

// Runs step() for each iteration with evaluation and last-good rollback.
template <class Step>
TrainResult run_loop(TrainState s, const Dataset& ds, const std::string& out_dir, Step&& step) {
    Recorder rec(s.cfg, ds, out_dir);
    TrainResult res;
    try {
        if (s.iteration == 0) rec.record(s);
    } catch (const NumericalError& e) {
        res.ok = false;
        res.error = std::string("initial evaluation: ") + e.what();
    }
    if (!res.ok) {
        rec.save(s);
        res.state = std::move(s);
        res.metrics = std::move(rec.rows);
        return res;
    }
    for (std::int64_t it = s.iteration + 1; it <= s.cfg.iterations; ++it) {
        TrainState good = s;
        try {
            step(s);
            s.iteration = it;
            if (rec.due(it)) rec.record(s);
        } catch (const NumericalError& e) {
            res.ok = false;
            res.error = "iteration " + std::to_string(it) + ": " + e.what();
        } catch (const InvalidParameter& e) {
            res.ok = false;
            res.error = "iteration " + std::to_string(it) + ": " + e.what();
        }
        if (!res.ok) {
            rec.save(good);
            res.state = std::move(good);
            res.metrics = std::move(rec.rows);
            return res;
        }
    }
    res.state = std::move(s);
    res.metrics = std::move(rec.rows);
    return res;
}

bool ascend(Optimizer opt, std::vector<double>& params, const std::vector<double>& grad, AdagradState& ada,
            double beta) {
    if (beta == 0.0) return true;
    if (opt == Optimizer::Sgd) return sgd_step(params, grad, beta);
    return adagrad_step(params, grad, ada, beta);
}

// VAN minimizes −bound; the curvature surrogate is the squared gradient.
void van_ascend(VanState& van, const std::vector<double>& grad, double beta) {
    if (beta == 0.0) return;
    std::vector<double> g(grad.size()), h(grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        g[i] = -grad[i];
        h[i] = grad[i] * grad[i];
    }
    for (double x : g)
        if (!std::isfinite(x)) {
            warn("van: non-finite gradient, step skipped");
            return;
        }
    van_update(van, g, h, beta);
}

std::vector<double> draw_around(const std::vector<double>& mu, const std::vector<double>& var,
                                std::vector<double>& eps, Rng& rng) {
    eps.resize(mu.size());
    std::vector<double> w(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        eps[i] = std_normal(rng);
        w[i] = mu[i] + std::sqrt(var[i]) * eps[i];
    }
    return w;
}

}  // namespace

namespace {

TrainResult run_san(TrainState init, const Dataset& ds, const std::string& out_dir) {
    const TrainConfig cfg = init.cfg;
    const std::size_t n_total = ds.train.size();
    const bool seq = cfg.model == PriorKind::Lds;
    const bool has_q = cfg.model == PriorKind::Gmm && !cfg.fixed_prior;
    const bool point_pgm = !has_q && !cfg.fixed_prior;
    Rng rng = substream(cfg.seed, 1 + static_cast<std::uint64_t>(init.iteration));

    auto step = [&](TrainState& s) {
        const std::vector<std::size_t> idx = sample_batch(ds.train, cfg.batch, rng);
        GenerativeModel m = s.model;
        SinState sin = s.sin;
        std::vector<double> eps_nn;
        if (cfg.theta_nn == ThetaNnMode::Bayes) m.decoder.params = draw_around(s.bayes.mu, s.bayes.sigma2, eps_nn, rng);
        if (cfg.optimizer == Optimizer::Van) {
            std::vector<double> unused;
            if (cfg.theta_nn == ThetaNnMode::Point)
                m.decoder.params = draw_around(s.van_nn.mu, s.van_nn.sigma2, unused, rng);
            const std::vector<double> phi = draw_around(s.van_phi.mu, s.van_phi.sigma2, unused, rng);
            const std::size_t ne = sin.encoder.num_params();
            sin.encoder.params.assign(phi.begin(), phi.begin() + static_cast<std::ptrdiff_t>(ne));
            sin.phi_pgm.assign(phi.begin() + static_cast<std::ptrdiff_t>(ne), phi.end());
        }
        if (has_q) m.theta_pgm = sample_mixture_theta(s.q, rng);

        const std::vector<Rows> units = ds.gather_units(idx);
        Rows rows;
        if (!seq)
            for (const Rows& u : units) rows.push_back(u[0]);
        auto gradients = [&] {
            return seq ? san_gradients(m, sin, units, rng, n_total) : san_gradients(m, sin, rows, rng, n_total);
        };
        GradBundle g = gradients();

        if (has_q) {
            std::vector<Vec<double>> xs;
            std::vector<int> zs;
            for (const SinSample& smp : g.sample) {
                xs.push_back(smp.x_star[0]);
                zs.push_back(smp.z_star[0]);
            }
            const PgmPosterior msg = cfg.pgm_message == PgmMessage::Vb
                                         ? conjugate_gmm_message(s.model.hyperprior, xs,
                                                                 expected_log_marginal(s.q, xs).resp, n_total)
                                         : conjugate_gmm_message(s.model.hyperprior, xs, zs, n_total);
            s.q = natural_gradient_step(s.q, msg, cfg.beta1);
            if (cfg.sequential) {
                m.theta_pgm = sample_mixture_theta(s.q, rng);
                g = gradients();
            }
        }

        // θ_NN
        if (cfg.theta_nn == ThetaNnMode::Bayes) {
            // ∂E/∂σ² = E[∇²]/2 with the Gauss-Newton curvature −g².
            std::vector<double> g_var(eps_nn.size());
            for (std::size_t i = 0; i < eps_nn.size(); ++i) g_var[i] = -0.5 * g.grad_theta_nn[i] * g.grad_theta_nn[i];
            s.bayes = bayes_nn_step(s.bayes, g.grad_theta_nn, g_var, cfg.beta2);
            s.model.decoder.params = s.bayes.mu;
        } else if (cfg.optimizer == Optimizer::Van) {
            van_ascend(s.van_nn, g.grad_theta_nn, cfg.beta2);
            s.model.decoder.params = s.van_nn.mu;
        } else {
            ascend(cfg.optimizer, s.model.decoder.params, g.grad_theta_nn, s.ada_nn, cfg.beta2);
        }

        // Point-estimated θ_PGM (latent TMM and LDS).
        if (point_pgm)
            ascend(cfg.optimizer == Optimizer::Sgd ? Optimizer::Sgd : Optimizer::Adagrad, s.model.theta_pgm,
                   g.grad_theta_pgm, s.ada_pgm, cfg.beta2);

        // φ = encoder, then φ_PGM.
        const std::size_t ne = s.sin.encoder.num_params();
        if (cfg.fixed_prior) std::fill(g.grad_phi.begin() + static_cast<std::ptrdiff_t>(ne), g.grad_phi.end(), 0.0);
        std::vector<double> phi;
        if (cfg.optimizer == Optimizer::Van) {
            van_ascend(s.van_phi, g.grad_phi, cfg.beta3);
            phi = s.van_phi.mu;
        } else {
            phi = concat(s.sin.encoder.params, s.sin.phi_pgm);
            ascend(cfg.optimizer, phi, g.grad_phi, s.ada_phi, cfg.beta3);
        }
        s.sin.encoder.params.assign(phi.begin(), phi.begin() + static_cast<std::ptrdiff_t>(ne));
        s.sin.phi_pgm.assign(phi.begin() + static_cast<std::ptrdiff_t>(ne), phi.end());
    };
    return run_loop(std::move(init), ds, out_dir, step);
}

}  // namespace

TrainResult train_san(const TrainConfig& cfg, const Dataset& ds, const std::string& out_dir) {
    require(cfg.method == Method::San, "train_san: method must be san");
    check_dataset(cfg, ds);
    return run_san(init_state(cfg, static_cast<int>(ds.dim())), ds, out_dir);
}

VaeEval vae_elbo(const nnet::Mlp& decoder, const Row& y, const std::vector<double>& mean,
                 const std::vector<double>& var, const std::vector<double>& eps, std::vector<double>* grad_theta) {
    const std::size_t d = mean.size();
    require(var.size() == d && eps.size() == d, "vae_elbo: size mismatch");
    Vec<double> x(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = mean[i] + std::sqrt(var[i]) * eps[i];
    const DecodeEval de = decode_loglik(decoder, x, y, grad_theta);
    VaeEval out;
    out.value = de.value;
    out.d_mean.resize(d);
    out.d_var.resize(d);
    const double log2pi = std::log(2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < d; ++i) {
        // log N(x|0,1) − log N(x|m,v) with x − m = √v·ε.
        out.value += -0.5 * (log2pi + x[i] * x[i]) + 0.5 * (log2pi + std::log(var[i]) + eps[i] * eps[i]);
        const double dx = de.grad_x[i] - x[i];
        out.d_mean[i] = dx;
        out.d_var[i] = dx * eps[i] / (2.0 * std::sqrt(var[i])) + 0.5 / var[i];
    }
    return out;
}

namespace {

TrainResult run_vae(TrainState init, const Dataset& ds, const std::string& out_dir) {
    const TrainConfig cfg = init.cfg;
    const double n_total = static_cast<double>(ds.train.size());
    Rng rng = substream(cfg.seed, 1 + static_cast<std::uint64_t>(init.iteration));
    auto step = [&](TrainState& s) {
        const Rows rows = ds.gather_rows(sample_batch(ds.train, cfg.batch, rng));
        const double scale = n_total / static_cast<double>(rows.size());
        std::vector<double> g_dec(s.model.decoder.num_params(), 0.0), g_enc(s.sin.encoder.num_params(), 0.0);
        for (const Row& y : rows) {
            const nnet::GaussianForward fwd = nnet::forward_gaussian(s.sin.encoder, y);
            for (std::size_t i = 0; i < fwd.mean.size(); ++i)
                if (!std::isfinite(fwd.mean[i]) || !std::isfinite(fwd.var[i]))
                    throw NumericalError("dnn_entropy", "non-finite recognition network output");
            std::vector<double> eps(fwd.mean.size());
            for (double& e : eps) e = std_normal(rng);
            const VaeEval ev = vae_elbo(s.model.decoder, y, fwd.mean, fwd.var, eps, &g_dec);
            if (!std::isfinite(ev.value)) throw NumericalError("decoder", "non-finite bound term");
            nnet::backward_gaussian(s.sin.encoder, fwd, ev.d_mean, ev.d_var, g_enc);
        }
        for (double& g : g_dec) g *= scale;
        for (double& g : g_enc) g *= scale;
        ascend(cfg.optimizer, s.model.decoder.params, g_dec, s.ada_nn, cfg.beta2);
        ascend(cfg.optimizer, s.sin.encoder.params, g_enc, s.ada_phi, cfg.beta3);
    };
    return run_loop(std::move(init), ds, out_dir, step);
}

}  // namespace

TrainResult train_vae(const TrainConfig& cfg, const Dataset& ds, const std::string& out_dir) {
    require(cfg.method == Method::Vae, "train_vae: method must be vae");
    check_dataset(cfg, ds);
    return run_vae(init_state(cfg, static_cast<int>(ds.dim())), ds, out_dir);
}

double vb_gmm_bound(const PgmPosterior& q, const PgmPosterior& prior, const Rows& y) {
    std::vector<Vec<double>> x(y.begin(), y.end());
    return expected_log_marginal(q, x).value - kl_divergence(q, prior);
}

namespace {

TrainResult run_vb_gmm(TrainState init, const Dataset& ds, const std::string& out_dir) {
    const Rows y = ds.gather_rows(ds.train);
    const std::vector<Vec<double>> x(y.begin(), y.end());
    const PgmPosterior prior = default_hyperprior(init.cfg.components, static_cast<int>(ds.dim()));
    auto step = [&](TrainState& s) {
        s.q = conjugate_gmm_message(prior, x, expected_log_marginal(s.q, x).resp, x.size());
    };
    return run_loop(std::move(init), ds, out_dir, step);
}

}  // namespace

TrainResult train_vb_gmm(const TrainConfig& cfg, const Dataset& ds, const std::string& out_dir) {
    require(cfg.method == Method::VbGmm, "train_vb_gmm: method must be vb-gmm");
    check_dataset(cfg, ds);
    TrainState init = init_state(cfg, static_cast<int>(ds.dim()));
    const Rows y = ds.gather_rows(ds.train);
    const std::vector<Vec<double>> x(y.begin(), y.end());
    // Random soft assignments for the first M-step.
    Rng rng = substream(cfg.seed, 1);
    std::vector<Vec<double>> resp(x.size(), Vec<double>(static_cast<std::size_t>(cfg.components)));
    for (auto& r : resp) {
        double sum = 0.0;
        for (double& v : r) sum += v = -std::log(uniform01(rng) + 1e-300);
        for (double& v : r) v /= sum;
    }
    init.q = conjugate_gmm_message(init.q, x, resp, x.size());
    return run_vb_gmm(std::move(init), ds, out_dir);
}

namespace {

struct EmStats {
    Eigen::MatrixXd s11, s10, s00n;  // Σ E[x_t x_tᵀ], Σ E[x_{t+1} x_tᵀ], Σ E[x_{t+1} x_{t+1}ᵀ]
    Eigen::VectorXd x1;
    Eigen::MatrixXd x1x1;
    Eigen::MatrixXd szz, syz, syy;  // z = [x; 1]
    double pairs = 0, rows = 0, seqs = 0, log_lik = 0;
};

std::vector<Eigen::VectorXd> to_vectors(const Rows& rows) {
    std::vector<Eigen::VectorXd> out;
    for (const Row& r : rows) out.push_back(Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size())));
    return out;
}

}  // namespace

namespace {

TrainResult run_lds_em(TrainState init, const Dataset& ds, const std::string& out_dir) {
    const int big_d = static_cast<int>(ds.dim()), d = init.cfg.latent_dim;
    std::vector<std::vector<Eigen::VectorXd>> seqs;
    for (const Rows& u : ds.gather_units(ds.train)) seqs.push_back(to_vectors(u));

    auto step = [&](TrainState& s) {
        StateSpace& ss = s.lds;
        EmStats st;
        st.s11 = st.s10 = st.s00n = Eigen::MatrixXd::Zero(d, d);
        st.x1 = Eigen::VectorXd::Zero(d);
        st.x1x1 = Eigen::MatrixXd::Zero(d, d);
        st.szz = Eigen::MatrixXd::Zero(d + 1, d + 1);
        st.syz = Eigen::MatrixXd::Zero(big_d, d + 1);
        st.syy = Eigen::MatrixXd::Zero(big_d, big_d);
        for (const auto& y : seqs) {
            const SmootherResult r = kalman_smooth(ss, y);
            if (!std::isfinite(r.log_lik)) throw NumericalError("lds_em", "non-finite log-likelihood");
            st.log_lik += r.log_lik;
            const std::size_t t_len = y.size();
            auto second = [&](std::size_t t) -> Eigen::MatrixXd { return r.cov[t] + r.mean[t] * r.mean[t].transpose(); };
            st.x1 += r.mean[0];
            st.x1x1 += second(0);
            for (std::size_t t = 0; t < t_len; ++t) {
                Eigen::VectorXd z(d + 1);
                z << r.mean[t], 1.0;
                Eigen::MatrixXd zz = z * z.transpose();
                zz.topLeftCorner(d, d) += r.cov[t];
                st.szz += zz;
                st.syz += y[t] * z.transpose();
                st.syy += y[t] * y[t].transpose();
                if (t + 1 < t_len) {
                    st.s11 += second(t);
                    st.s00n += second(t + 1);
                    st.s10 += r.cross[t] + r.mean[t + 1] * r.mean[t].transpose();
                }
            }
            st.pairs += static_cast<double>(t_len - 1);
            st.rows += static_cast<double>(t_len);
            st.seqs += 1;
        }
        const Eigen::MatrixXd jitter = 1e-9 * Eigen::MatrixXd::Identity(d, d);
        ss.mu1 = st.x1 / st.seqs;
        ss.sigma1 = st.x1x1 / st.seqs - ss.mu1 * ss.mu1.transpose();
        ss.sigma1 = 0.5 * (ss.sigma1 + ss.sigma1.transpose()) + jitter;
        if (st.pairs > 0) {
            ss.A = st.s10 * st.s11.ldlt().solve(Eigen::MatrixXd::Identity(d, d));
            ss.Q = (st.s00n - ss.A * st.s10.transpose()) / st.pairs;
            ss.Q = 0.5 * (ss.Q + ss.Q.transpose()) + jitter;
        }
        const Eigen::MatrixXd cb = st.syz * st.szz.ldlt().solve(Eigen::MatrixXd::Identity(d + 1, d + 1));
        ss.C = cb.leftCols(d);
        ss.b = cb.col(d);
        const Eigen::VectorXd rd = ((st.syy - cb * st.syz.transpose()).diagonal() / st.rows).cwiseMax(1e-8);
        ss.R = {Eigen::MatrixXd(rd.asDiagonal())};
    };
    return run_loop(std::move(init), ds, out_dir, step);
}

}  // namespace

TrainResult train_lds_em(const TrainConfig& cfg, const Dataset& ds, const std::string& out_dir) {
    require(cfg.method == Method::LdsEm, "train_lds_em: method must be lds-em");
    check_dataset(cfg, ds);
    const int big_d = static_cast<int>(ds.dim()), d = cfg.latent_dim;
    require(d <= big_d, "train_lds_em: latent dimension exceeds data dimension");
    TrainState init = init_state(cfg, big_d);
    // Principal-subspace start: C = U·√λ, b = mean, R = leftover diagonal variance.
    const PcaBasis basis = pca(ds.gather_rows(ds.train), d);
    {
        Eigen::VectorXd mean = Eigen::Map<const Eigen::VectorXd>(basis.mean.data(), big_d);
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(big_d, big_d);
        double n = 0;
        for (const Row& r : ds.gather_rows(ds.train)) {
            const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(r.data(), big_d);
            cov += (y - mean) * (y - mean).transpose();
            ++n;
        }
        cov /= n;
        Eigen::MatrixXd c(big_d, d);
        for (int j = 0; j < d; ++j) {
            Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(basis.components[static_cast<std::size_t>(j)].data(), big_d);
            c.col(j) = u * std::sqrt(std::max(u.dot(cov * u), 1e-12));
        }
        init.lds.C = c;
        init.lds.b = mean;
        const Eigen::VectorXd rd = (cov - c * c.transpose()).diagonal().cwiseMax(1e-4 * cov.diagonal().maxCoeff() + 1e-12);
        init.lds.R = {Eigen::MatrixXd(rd.asDiagonal())};
    }

    return run_lds_em(std::move(init), ds, out_dir);
}

TrainResult resume(TrainState s, const Dataset& ds, const std::string& out_dir) {
    check_dataset(s.cfg, ds);
    require(static_cast<int>(ds.dim()) == s.data_dim, "resume: dataset dimension differs from the model's");
    switch (s.cfg.method) {
        case Method::San: return run_san(std::move(s), ds, out_dir);
        case Method::VbGmm: return run_vb_gmm(std::move(s), ds, out_dir);
        case Method::Vae: return run_vae(std::move(s), ds, out_dir);
        case Method::LdsEm: return run_lds_em(std::move(s), ds, out_dir);
    }
    throw ContractError("resume: unknown method");
}

TrainResult train(const TrainConfig& cfg, const Dataset& ds, const std::string& out_dir) {
    switch (cfg.method) {
        case Method::San: return train_san(cfg, ds, out_dir);
        case Method::VbGmm: return train_vb_gmm(cfg, ds, out_dir);
        case Method::Vae: return train_vae(cfg, ds, out_dir);
        case Method::LdsEm: return train_lds_em(cfg, ds, out_dir);
    }
    throw ContractError("train: unknown method");
}

}  // namespace san
