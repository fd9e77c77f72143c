#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <filesystem>
#include <fstream>

#include "san/errors.hpp"
#include "san/gradients.hpp"
#include "san/harness.hpp"

namespace san {

namespace {

constexpr std::size_t kChunk = 256;

bool is_sequence_method(const TrainState& s) {
    return s.cfg.method == Method::LdsEm || (s.cfg.method == Method::San && s.cfg.model == PriorKind::Lds);
}

bool has_q(const TrainState& s) {
    return s.cfg.method == Method::San && s.cfg.model == PriorKind::Gmm && !s.cfg.fixed_prior;
}

std::vector<std::size_t> capped(const std::vector<std::size_t>& units, std::size_t max_units) {
    if (max_units == 0 || units.size() <= max_units) return units;
    return std::vector<std::size_t>(units.begin(), units.begin() + static_cast<std::ptrdiff_t>(max_units));
}

std::vector<Eigen::VectorXd> to_vectors(const Rows& rows) {
    std::vector<Eigen::VectorXd> out;
    for (const Row& r : rows) out.push_back(Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size())));
    return out;
}

Row to_row(const Eigen::VectorXd& v) { return Row(v.data(), v.data() + v.size()); }

Eigen::MatrixXd to_eigen(const Mat<double>& m) {
    Eigen::MatrixXd e(m.rows, m.cols);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) e(i, j) = m(i, j);
    return e;
}

// Model used for bound evaluation: point parameters, plug-in θ for q.
GenerativeModel eval_model(const TrainState& s) {
    GenerativeModel m = s.model;
    if (has_q(s)) m.theta_pgm = mean_mixture_theta(s.q);
    return m;
}

// Σ over units of the per-unit bound (one draw).
double bound_sum(const TrainState& s, const std::vector<Rows>& units, Rng& rng) {
    double total = 0.0;
    switch (s.cfg.method) {
        case Method::San: {
            const GenerativeModel m = eval_model(s);
            const bool seq = s.cfg.model == PriorKind::Lds;
            for (std::size_t lo = 0; lo < units.size(); lo += kChunk) {
                const std::size_t hi = std::min(units.size(), lo + kChunk);
                const std::vector<Rows> chunk(units.begin() + static_cast<std::ptrdiff_t>(lo),
                                              units.begin() + static_cast<std::ptrdiff_t>(hi));
                GradientOptions opt;
                opt.compute_gradients = false;
                GradBundle g;
                if (seq) {
                    g = san_gradients(m, s.sin, chunk, rng, chunk.size(), opt);
                } else {
                    Rows rows;
                    for (const Rows& u : chunk) rows.push_back(u[0]);
                    g = san_gradients(m, s.sin, rows, rng, rows.size(), opt);
                }
                total += g.bound.total;
                if (has_q(s)) {
                    // Replace log p(x*|θ) by its expectation bound under q(θ).
                    std::vector<Vec<double>> xs;
                    for (const SinSample& smp : g.sample) xs.push_back(smp.x_star[0]);
                    total += expected_log_marginal(s.q, xs).value - g.bound.prior_term;
                }
            }
            return total;
        }
        case Method::Vae:
            for (const Rows& u : units)
                for (const Row& y : u) {
                    const nnet::GaussianForward f = nnet::forward_gaussian(s.sin.encoder, y);
                    std::vector<double> eps(f.mean.size());
                    for (double& e : eps) e = std_normal(rng);
                    total += vae_elbo(s.model.decoder, y, f.mean, f.var, eps, nullptr).value;
                }
            return total;
        case Method::VbGmm: {
            std::vector<Vec<double>> x;
            for (const Rows& u : units) x.push_back(u[0]);
            return expected_log_marginal(s.q, x).value;
        }
        case Method::LdsEm:
            for (const Rows& u : units) total += kalman_smooth(s.lds, to_vectors(u)).log_lik;
            return total;
    }
    return total;
}

double per_row_bound(const TrainState& s, const std::vector<Rows>& units, int samples, Rng& rng) {
    std::size_t rows = 0;
    for (const Rows& u : units) rows += u.size();
    if (rows == 0) return NAN;
    double acc = 0.0;
    for (int i = 0; i < samples; ++i) acc += bound_sum(s, units, rng);
    return acc / samples / static_cast<double>(rows);
}

// Posterior-mean reconstruction of every row of one unit.
Rows reconstruct(const TrainState& s, const Rows& unit) {
    const int d = s.cfg.latent_dim;
    Rows out;
    switch (s.cfg.method) {
        case Method::San: {
            const DnnFactors f = encode(s.sin.encoder, unit);
            if (s.cfg.model == PriorKind::Lds) {
                const SmootherResult r = lds_posterior_factors(s.sin.phi_pgm, d, f.m, f.v);
                for (const auto& x : r.mean) out.push_back(decode_mean(s.model.decoder, to_row(x)));
                return out;
            }
            const GmmLogZ z = gmm_log_z_factors(s.sin.phi_pgm, s.sin.components, d, f.m, f.v);
            const Mixture<double> mix = unpack_mixture(s.sin.phi_pgm.data(), s.sin.components, d);
            for (std::size_t n = 0; n < unit.size(); ++n) {
                Vec<double> x(static_cast<std::size_t>(d), 0.0);
                for (int k = 0; k < s.sin.components; ++k) {
                    const double r = z.resp[n][static_cast<std::size_t>(k)];
                    if (r == 0.0) continue;
                    const GaussCond<double> c =
                        diag_gauss_product(f.m[n], f.v[n], mix.mu[static_cast<std::size_t>(k)],
                                           outer_self(mix.chol[static_cast<std::size_t>(k)]));
                    for (int i = 0; i < d; ++i) x[static_cast<std::size_t>(i)] += r * c.mean[static_cast<std::size_t>(i)];
                }
                out.push_back(decode_mean(s.model.decoder, x));
            }
            return out;
        }
        case Method::Vae:
            for (const Row& y : unit) out.push_back(decode_mean(s.model.decoder, nnet::forward_gaussian(s.sin.encoder, y).mean));
            return out;
        case Method::LdsEm: {
            const SmootherResult r = kalman_smooth(s.lds, to_vectors(unit));
            for (const auto& x : r.mean) out.push_back(to_row(s.lds.C * x + s.lds.b));
            return out;
        }
        case Method::VbGmm:
            break;
    }
    throw ContractError("evaluate: reconstruction is undefined for vb-gmm");
}

// Conditional mean of the masked coordinates under the plug-in observation GMM.
Row vb_gmm_impute(const PgmPosterior& q, const Row& y, const std::vector<char>& mask) {
    const int k = q.components(), dd = q.dim();
    const std::vector<double> theta = mean_mixture_theta(q);
    const Mixture<double> mix = unpack_mixture(theta.data(), k, dd);
    std::vector<int> obs, mis;
    for (int i = 0; i < dd; ++i) (mask[static_cast<std::size_t>(i)] ? mis : obs).push_back(i);
    std::vector<double> logw(static_cast<std::size_t>(k));
    std::vector<Eigen::VectorXd> cond(static_cast<std::size_t>(k));
    const int no = static_cast<int>(obs.size()), nm = static_cast<int>(mis.size());
    for (int c = 0; c < k; ++c) {
        const Mat<double> cov_m = outer_self(mix.chol[static_cast<std::size_t>(c)]);
        Eigen::MatrixXd cov(dd, dd);
        for (int i = 0; i < dd; ++i)
            for (int j = 0; j < dd; ++j) cov(i, j) = cov_m(i, j);
        const Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(mix.mu[static_cast<std::size_t>(c)].data(), dd);
        Eigen::MatrixXd soo(no, no), smo(nm, no);
        Eigen::VectorXd ro(no), mm(nm);
        for (int a = 0; a < no; ++a) {
            ro(a) = y[static_cast<std::size_t>(obs[a])] - mu(obs[a]);
            for (int b = 0; b < no; ++b) soo(a, b) = cov(obs[a], obs[b]);
            for (int b = 0; b < nm; ++b) smo(b, a) = cov(mis[b], obs[a]);
        }
        for (int b = 0; b < nm; ++b) mm(b) = mu(mis[b]);
        double lw = mix.log_w[static_cast<std::size_t>(c)];
        if (no > 0) {
            const Eigen::LLT<Eigen::MatrixXd> llt(soo);
            const Eigen::VectorXd w = llt.solve(ro);
            const Eigen::MatrixXd l = llt.matrixL();
            lw += -0.5 * ro.dot(w) - l.diagonal().array().log().sum() - 0.5 * no * std::log(2.0 * std::numbers::pi);
            mm += smo * w;
        }
        logw[static_cast<std::size_t>(c)] = lw;
        cond[static_cast<std::size_t>(c)] = mm;
    }
    const double mx = *std::max_element(logw.begin(), logw.end());
    double z = 0.0;
    for (double& w : logw) z += w = std::exp(w - mx);
    Row out = y;
    for (int b = 0; b < nm; ++b) {
        double v = 0.0;
        for (int c = 0; c < k; ++c) v += logw[static_cast<std::size_t>(c)] / z * cond[static_cast<std::size_t>(c)](b);
        out[static_cast<std::size_t>(mis[b])] = v;
    }
    return out;
}

double imputation_mse(const TrainState& s, const Dataset& ds, const std::vector<Rows>& units, Rng& rng) {
    const Rows train = ds.gather_rows(ds.train);
    const std::size_t dd = ds.dim();
    Row col_mean(dd, 0.0);
    for (const Row& r : train)
        for (std::size_t i = 0; i < dd; ++i) col_mean[i] += r[i] / static_cast<double>(train.size());
    double sq = 0.0;
    std::size_t count = 0;
    for (const Rows& u : units) {
        Rows masked = u;
        std::vector<std::vector<char>> mask(u.size(), std::vector<char>(dd, 0));
        for (std::size_t t = 0; t < u.size(); ++t)
            for (std::size_t i = 0; i < dd; ++i)
                if (uniform01(rng) < 0.2) {
                    mask[t][i] = 1;
                    masked[t][i] = col_mean[i];
                }
        Rows rec;
        if (s.cfg.method == Method::VbGmm) {
            for (std::size_t t = 0; t < u.size(); ++t) rec.push_back(vb_gmm_impute(s.q, masked[t], mask[t]));
        } else {
            rec = reconstruct(s, masked);
        }
        for (std::size_t t = 0; t < u.size(); ++t)
            for (std::size_t i = 0; i < dd; ++i)
                if (mask[t][i]) {
                    const double e = rec[t][i] - u[t][i];
                    sq += e * e;
                    ++count;
                }
    }
    return count ? sq / static_cast<double>(count) : NAN;
}

double reconstruction_mse(const TrainState& s, const std::vector<Rows>& units) {
    double sq = 0.0;
    std::size_t count = 0;
    for (const Rows& u : units) {
        const Rows rec = reconstruct(s, u);
        for (std::size_t t = 0; t < u.size(); ++t)
            for (std::size_t i = 0; i < u[t].size(); ++i) {
                const double e = rec[t][i] - u[t][i];
                sq += e * e;
                ++count;
            }
    }
    return count ? sq / static_cast<double>(count) : NAN;
}

double kl_q(const TrainState& s) {
    if (has_q(s)) return kl_divergence(s.q, s.model.hyperprior);
    if (s.cfg.method == Method::VbGmm) return kl_divergence(s.q, default_hyperprior(s.q.components(), s.q.dim()));
    return 0.0;
}

}  // namespace

double tau_mae(const std::vector<Rows>& seqs, const std::vector<Rows>& forecasts, int tau) {
    require(tau >= 0, "tau_mae: tau must be nonnegative");
    require(seqs.size() == forecasts.size(), "tau_mae: one forecast list per sequence");
    double abs_sum = 0.0, count = 0.0;
    for (std::size_t n = 0; n < seqs.size(); ++n) {
        const std::size_t t_len = seqs[n].size();
        const std::size_t horizon = t_len > static_cast<std::size_t>(tau) ? t_len - static_cast<std::size_t>(tau) : 0;
        require(forecasts[n].size() == horizon, "tau_mae: forecast count must be T - tau");
        for (std::size_t t = 0; t < horizon; ++t) {
            const Row& y = seqs[n][t + static_cast<std::size_t>(tau)];
            require(forecasts[n][t].size() == y.size(), "tau_mae: forecast dimension mismatch");
            for (std::size_t i = 0; i < y.size(); ++i) abs_sum += std::abs(y[i] - forecasts[n][t][i]);
            count += static_cast<double>(y.size());
        }
    }
    require(count > 0, "tau_mae: no forecast targets");
    return abs_sum / count;
}

std::vector<Rows> forecast(const TrainState& s, const std::vector<Rows>& seqs, int tau, int samples,
                           std::uint64_t seed) {
    require(is_sequence_method(s), "evaluate: tau-ahead prediction needs a sequence model");
    require(tau >= 0, "forecast: tau must be nonnegative");
    require(samples >= 0, "forecast: samples must be nonnegative");
    const int d = s.cfg.latent_dim;
    const bool linear = s.cfg.method == Method::LdsEm;
    Eigen::MatrixXd a, q;
    if (linear) {
        a = s.lds.A;
        q = s.lds.Q;
    } else {
        const LdsParams<double> p = unpack_lds(s.model.theta_pgm.data(), d);
        a = to_eigen(p.A);
        q = to_eigen(p.Q);
    }
    // x_{t+τ} | y_{1:t} ~ N(A^τ m, A^τ P A^τᵀ + Σ_{k<τ} A^k Q A^kᵀ).
    Eigen::MatrixXd a_tau = Eigen::MatrixXd::Identity(d, d), noise = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < tau; ++i) {
        noise += a_tau * q * a_tau.transpose();
        a_tau = a * a_tau;
    }
    Rng rng = substream(seed, 40 + static_cast<std::uint64_t>(tau));
    std::vector<Rows> out;
    for (const Rows& seq : seqs) {
        SmootherResult filt;
        if (linear) {
            filt = kalman_smooth(s.lds, to_vectors(seq));
        } else {
            const DnnFactors f = encode(s.sin.encoder, seq);
            filt = lds_posterior_factors(s.sin.phi_pgm, d, f.m, f.v);
        }
        Rows f;
        const std::size_t horizon = seq.size() > static_cast<std::size_t>(tau) ? seq.size() - static_cast<std::size_t>(tau) : 0;
        for (std::size_t t = 0; t < horizon; ++t) {
            const Eigen::VectorXd mean = a_tau * filt.filt_mean[t];
            if (linear) {
                f.push_back(to_row(s.lds.C * mean + s.lds.b));
                continue;
            }
            if (samples == 0) {
                f.push_back(decode_mean(s.model.decoder, to_row(mean)));
                continue;
            }
            const Eigen::MatrixXd cov = a_tau * filt.filt_cov[t] * a_tau.transpose() + noise;
            const Eigen::MatrixXd l = expfam::chol_jitter(cov, "forecast");
            Row avg(s.data_dim, 0.0);
            Eigen::VectorXd z(d);
            for (int k = 0; k < samples; ++k) {
                for (int i = 0; i < d; ++i) z(i) = std_normal(rng);
                const Row y = decode_mean(s.model.decoder, to_row(mean + l * z));
                for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += y[i] / samples;
            }
            f.push_back(std::move(avg));
        }
        out.push_back(std::move(f));
    }
    return out;
}

MetricsRow evaluate(const TrainState& s, const Dataset& ds, const EvalTasks& tasks) {
    require(static_cast<int>(ds.dim()) == s.data_dim, "evaluate: dataset dimension differs from the model's");
    require(is_sequence_method(s) == ds.sequential(), "evaluate: dataset and model disagree on sequence structure");
    require(tasks.taus.empty() || is_sequence_method(s), "evaluate: tau-ahead prediction needs a sequence model");
    require(!tasks.reconstruction || s.cfg.method != Method::VbGmm, "evaluate: reconstruction is undefined for vb-gmm");
    require(tasks.samples >= 1, "evaluate: samples must be positive");
    MetricsRow row;
    row.iteration = s.iteration;
    row.train_bound = row.val_bound = row.test_bound = row.imputation_mse = row.recon_mse = NAN;
    const std::vector<Rows> test = ds.gather_units(capped(ds.test, tasks.max_units));
    if (tasks.bound) {
        Rng r_test = substream(tasks.seed, 10), r_val = substream(tasks.seed, 11);
        row.test_bound = per_row_bound(s, test, tasks.samples, r_test);
        row.val_bound = per_row_bound(s, ds.gather_units(capped(ds.val, tasks.max_units)), tasks.samples, r_val);
    }
    if (tasks.train_bound) {
        Rng r = substream(tasks.seed, 12);
        const std::size_t n_train_rows = ds.gather_rows(ds.train).size();
        row.train_bound = per_row_bound(s, ds.gather_units(capped(ds.train, tasks.max_units)), tasks.samples, r) -
                          kl_q(s) / static_cast<double>(n_train_rows);
    }
    if (tasks.imputation && !test.empty()) {
        Rng r = substream(tasks.seed, 20);
        row.imputation_mse = imputation_mse(s, ds, test, r);
    }
    if (tasks.reconstruction && !test.empty()) row.recon_mse = reconstruction_mse(s, test);
    for (int tau : tasks.taus) {
        std::vector<Rows> usable;
        for (const Rows& u : test)
            if (u.size() > static_cast<std::size_t>(tau)) usable.push_back(u);
        row.mae[tau] = usable.empty() ? NAN
                                      : tau_mae(usable, forecast(s, usable, tau, tasks.forecast_samples, tasks.seed), tau);
    }
    return row;
}

PcaBasis pca(const Rows& rows, int n_components) {
    require(!rows.empty(), "pca: no rows");
    const int dd = static_cast<int>(rows[0].size());
    require(n_components >= 1 && n_components <= dd, "pca: component count out of range");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dd);
    for (const Row& r : rows) mean += Eigen::Map<const Eigen::VectorXd>(r.data(), dd);
    mean /= static_cast<double>(rows.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dd, dd);
    for (const Row& r : rows) {
        const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(r.data(), dd) - mean;
        cov += c * c.transpose();
    }
    cov /= static_cast<double>(rows.size());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    PcaBasis out;
    out.mean = to_row(mean);
    for (int j = 0; j < n_components; ++j) {
        Eigen::VectorXd v = es.eigenvectors().col(dd - 1 - j);
        Eigen::Index arg;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        out.components.push_back(to_row(v));
    }
    return out;
}

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

class Projector {
public:
    explicit Projector(const Dataset& ds) {
        if (ds.dim() > 2) {
            basis_ = pca(ds.train.empty() ? ds.rows : ds.gather_rows(ds.train), 2);
            active_ = true;
        }
        cols_ = active_ ? 2 : ds.dim();
    }
    Row operator()(const Row& y) const {
        if (!active_) return y;
        Row p(2, 0.0);
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t i = 0; i < y.size(); ++i) p[j] += basis_.components[j][i] * (y[i] - basis_.mean[i]);
        return p;
    }
    std::string header() const {
        std::string h;
        for (std::size_t i = 0; i < cols_; ++i) h += (i ? "," : "") + std::string(active_ ? "pc" : "y") + std::to_string(i);
        return h;
    }
    bool active() const { return active_; }
    const PcaBasis& basis() const { return basis_; }

private:
    PcaBasis basis_;
    bool active_ = false;
    std::size_t cols_ = 0;
};

std::string join(const Row& r) {
    std::string s;
    for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + fmt(r[i]);
    return s;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ContractError("cannot write " + path);
    f << text;
    f.flush();
    if (!f) throw ContractError("write failed: " + path);
}

struct Drawn {
    Rows y;
    std::vector<int> comp;
    std::vector<double> weight;
};

Drawn draw_samples(const TrainState& s, int n, Rng& rng) {
    Drawn out;
    const int d = s.cfg.latent_dim;
    switch (s.cfg.method) {
        case Method::San:
        case Method::Vae: {
            const GenerativeModel m = eval_model(s);
            if (m.prior == PriorKind::Lds) {
                const Generated g = generate(m, rng, n);
                out.y = g.y;
                out.comp = g.labels;
                out.weight.assign(g.y.size(), 1.0);
                return out;
            }
            const Generated g = generate(m, rng, n);
            const Mixture<double> mix = unpack_mixture(m.theta_pgm.data(), m.components, d);
            out.y = g.y;
            out.comp = g.labels;
            for (int c : g.labels) out.weight.push_back(std::exp(mix.log_w[static_cast<std::size_t>(c)]));
            return out;
        }
        case Method::VbGmm: {
            const int k = s.q.components(), dd = s.q.dim();
            const std::vector<double> theta = mean_mixture_theta(s.q);
            const Mixture<double> mix = unpack_mixture(theta.data(), k, dd);
            for (int i = 0; i < n; ++i) {
                const double u = uniform01(rng);
                double acc = 0.0;
                int c = k - 1;
                for (int j = 0; j < k; ++j) {
                    acc += std::exp(mix.log_w[static_cast<std::size_t>(j)]);
                    if (u < acc) {
                        c = j;
                        break;
                    }
                }
                Vec<double> e(static_cast<std::size_t>(dd));
                for (double& v : e) v = std_normal(rng);
                Row y = mix.mu[static_cast<std::size_t>(c)];
                const Vec<double> le = matvec(mix.chol[static_cast<std::size_t>(c)], e);
                for (int j = 0; j < dd; ++j) y[static_cast<std::size_t>(j)] += le[static_cast<std::size_t>(j)];
                out.y.push_back(y);
                out.comp.push_back(c);
                out.weight.push_back(std::exp(mix.log_w[static_cast<std::size_t>(c)]));
            }
            return out;
        }
        case Method::LdsEm: {
            const StateSpace& ss = s.lds;
            auto gauss = [&](const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
                const Eigen::MatrixXd l = expfam::chol_jitter(cov, "lds sample");
                Eigen::VectorXd e(mean.size());
                for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = std_normal(rng);
                return Eigen::VectorXd(mean + l * e);
            };
            Eigen::VectorXd x = gauss(ss.mu1, ss.sigma1);
            for (int t = 0; t < n; ++t) {
                if (t > 0) x = gauss(ss.A * x, ss.Q);
                out.y.push_back(to_row(gauss(ss.C * x + ss.b, ss.R.at(0))));
                out.comp.push_back(t);
                out.weight.push_back(1.0);
            }
            return out;
        }
    }
    return out;
}

}  // namespace

void dump_plot_data(const TrainState& s, const Dataset& ds, const std::vector<MetricsRow>& curves,
                    const std::string& out_dir, int n_samples, std::uint64_t seed) {
    require(n_samples >= 1, "dump_plot_data: sample count must be positive");
    require(static_cast<int>(ds.dim()) == s.data_dim, "dump_plot_data: dataset dimension differs from the model's");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw ContractError("cannot create " + out_dir + ": " + ec.message());
    const Projector proj(ds);
    Rng rng = substream(seed, 30);
    const Drawn smp = draw_samples(s, n_samples, rng);
    std::string text = proj.header() + ",component,weight\n";
    for (std::size_t i = 0; i < smp.y.size(); ++i)
        text += join(proj(smp.y[i])) + "," + std::to_string(smp.comp[i]) + "," + fmt(smp.weight[i]) + "\n";
    write_text(out_dir + "/samples.csv", text);

    text = proj.header() + ",label\n";
    for (std::size_t i = 0; i < ds.rows.size(); ++i)
        text += join(proj(ds.rows[i])) + "," + std::to_string(ds.labels.empty() ? -1 : ds.labels[i]) + "\n";
    write_text(out_dir + "/data.csv", text);

    std::vector<int> taus;
    if (!curves.empty())
        for (const auto& [t, v] : curves[0].mae) taus.push_back(t);
    text = metrics_header(taus) + "\n";
    for (const MetricsRow& r : curves) text += metrics_line(r, taus) + "\n";
    write_text(out_dir + "/curves.csv", text);

    if (proj.active()) {
        text = "row";
        for (std::size_t i = 0; i < ds.dim(); ++i) text += ",y" + std::to_string(i);
        text += "\nmean," + join(proj.basis().mean) + "\n";
        for (std::size_t j = 0; j < proj.basis().components.size(); ++j)
            text += "pc" + std::to_string(j) + "," + join(proj.basis().components[j]) + "\n";
        write_text(out_dir + "/pca.csv", text);
    }
}

}  // namespace san
