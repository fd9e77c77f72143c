#include "san/sin.hpp"

#include <cmath>

#include "san/ad.hpp"
#include "san/errors.hpp"

namespace san {

namespace {

using ad::Var;

std::vector<Var> leaves(ad::Tape& tape, const std::vector<double>& xs) {
    std::vector<Var> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(tape.variable(x));
    return out;
}

int draw_index(const Vec<double>& probs, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        acc += probs[k];
        if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(probs.size()) - 1;
}

Vec<double> normal_vec(int d, Rng& rng) {
    Vec<double> e(static_cast<std::size_t>(d));
    for (double& x : e) x = std_normal(rng);
    return e;
}

void check_factors(const std::vector<Vec<double>>& m, const std::vector<Vec<double>>& v, int d) {
    require(m.size() == v.size(), "sin: factor count mismatch");
    for (std::size_t i = 0; i < m.size(); ++i)
        require(static_cast<int>(m[i].size()) == d && static_cast<int>(v[i].size()) == d,
                "sin: encoder output dimension must be 2 * latent_dim");
}

}  // namespace

std::vector<double> pack_mixture(const std::vector<double>& weights, const std::vector<Vec<double>>& means,
                                 const std::vector<Mat<double>>& covs) {
    const int k = static_cast<int>(weights.size());
    require(k >= 1 && means.size() == weights.size() && covs.size() == weights.size(), "pack_mixture: size mismatch");
    const int d = static_cast<int>(means[0].size());
    std::vector<double> p(static_cast<std::size_t>(mixture_size(k, d)));
    for (int c = 0; c < k; ++c) p[static_cast<std::size_t>(c)] = std::log(weights[static_cast<std::size_t>(c)]);
    for (int c = 0; c < k; ++c)
        for (int i = 0; i < d; ++i) p[static_cast<std::size_t>(k + c * d + i)] = means[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
    for (int c = 0; c < k; ++c)
        pack_chol(cholesky(covs[static_cast<std::size_t>(c)], "mixture covariance"), p.data() + k + k * d + c * tri_size(d));
    return p;
}

std::vector<double> pack_lds(const Mat<double>& a, const Mat<double>& q, const Vec<double>& mu0,
                             const Mat<double>& sigma0) {
    const int d = a.rows;
    std::vector<double> p(static_cast<std::size_t>(lds_size(d)));
    std::copy(a.a.begin(), a.a.end(), p.begin());
    pack_chol(cholesky(q, "Q"), p.data() + d * d);
    std::copy(mu0.begin(), mu0.end(), p.begin() + d * d + tri_size(d));
    pack_chol(cholesky(sigma0, "Sigma0"), p.data() + d * d + tri_size(d) + d);
    return p;
}

SinState make_gmm_sin(int data_dim, int latent_dim, int components, const std::vector<int>& hidden, Rng& rng,
                      nnet::Act act) {
    require(components >= 1 && latent_dim >= 1, "make_gmm_sin: K and d must be positive");
    SinState s;
    s.structure = Structure::Gmm;
    s.latent_dim = latent_dim;
    s.components = components;
    s.encoder = nnet::Mlp(data_dim, hidden, 2 * latent_dim, act);
    s.encoder.init(rng);
    std::vector<Vec<double>> means;
    std::vector<Mat<double>> covs;
    for (int c = 0; c < components; ++c) {
        Vec<double> mu(static_cast<std::size_t>(latent_dim));
        for (double& x : mu) x = 2.0 * std_normal(rng);
        means.push_back(mu);
        covs.push_back(Mat<double>::identity(latent_dim));
    }
    s.phi_pgm = pack_mixture(std::vector<double>(static_cast<std::size_t>(components), 1.0 / components), means, covs);
    return s;
}

SinState make_lds_sin(int data_dim, int latent_dim, const std::vector<int>& hidden, Rng& rng,
                      nnet::Act act) {
    SinState s;
    s.structure = Structure::Lds;
    s.latent_dim = latent_dim;
    s.encoder = nnet::Mlp(data_dim, hidden, 2 * latent_dim, act);
    s.encoder.init(rng);
    s.phi_pgm = pack_lds(Mat<double>::identity(latent_dim, 0.9), Mat<double>::identity(latent_dim, 0.1),
                         Vec<double>(static_cast<std::size_t>(latent_dim), 0.0), Mat<double>::identity(latent_dim));
    return s;
}

DnnFactors encode(const nnet::Mlp& encoder, const Rows& data) {
    DnnFactors f;
    f.m.reserve(data.size());
    f.v.reserve(data.size());
    f.fwd.reserve(data.size());
    for (const Row& y : data) {
        f.fwd.push_back(nnet::forward_gaussian(encoder, y));
        f.m.push_back(f.fwd.back().mean);
        f.v.push_back(f.fwd.back().var);
    }
    return f;
}

GmmLogZ gmm_log_z_factors(const std::vector<double>& phi_pgm, int k, int d, const std::vector<Vec<double>>& m,
                          const std::vector<Vec<double>>& v) {
    require(k >= 1, "gmm_log_z: K must be at least 1");
    require(static_cast<int>(phi_pgm.size()) == mixture_size(k, d), "gmm_log_z: parameter layout mismatch");
    check_factors(m, v, d);
    const Mixture<double> f = unpack_mixture(phi_pgm.data(), k, d);
    GmmLogZ out;
    out.per_datum.resize(m.size());
    out.resp.resize(m.size());
    for (std::size_t n = 0; n < m.size(); ++n) {
        out.per_datum[n] = gmm_log_z_datum(f, m[n], v[n], &out.resp[n]);
        out.log_z += out.per_datum[n];
    }
    return out;
}

GmmLogZ gmm_log_z(const SinState& sin, const Rows& data) {
    require(sin.structure == Structure::Gmm, "gmm_log_z: not a GMM inference network");
    const DnnFactors f = encode(sin.encoder, data);
    return gmm_log_z_factors(sin.phi_pgm, sin.components, sin.latent_dim, f.m, f.v);
}

SinSample gmm_sample_factors(const std::vector<double>& phi_pgm, int k, int d, const std::vector<Vec<double>>& m,
                             const std::vector<Vec<double>>& v, Rng& rng) {
    const GmmLogZ lz = gmm_log_z_factors(phi_pgm, k, d, m, v);
    const Mixture<double> f = unpack_mixture(phi_pgm.data(), k, d);
    SinSample s;
    s.log_z = lz.log_z;
    for (std::size_t n = 0; n < m.size(); ++n) {
        const int z = draw_index(lz.resp[n], rng);
        Vec<double> eps = normal_vec(d, rng);
        s.x_star.push_back(gmm_conditional_sample(f, z, m[n], v[n], eps));
        s.z_star.push_back(z);
        s.eps.push_back(std::move(eps));
    }
    return s;
}

SinSample gmm_sample(const SinState& sin, const Rows& data, Rng& rng) {
    require(sin.structure == Structure::Gmm, "gmm_sample: not a GMM inference network");
    const DnnFactors f = encode(sin.encoder, data);
    return gmm_sample_factors(sin.phi_pgm, sin.components, sin.latent_dim, f.m, f.v, rng);
}

LdsLogZ lds_log_z_factors(const std::vector<double>& phi_pgm, int d, const std::vector<Vec<double>>& m,
                          const std::vector<Vec<double>>& v) {
    require(!m.empty(), "lds_log_z: sequence must have at least one step");
    require(static_cast<int>(phi_pgm.size()) == lds_size(d), "lds_log_z: parameter layout mismatch");
    check_factors(m, v, d);
    LdsLogZ out;
    out.log_z = lds_filter(unpack_lds(phi_pgm.data(), d), m, v, &out.steps);
    return out;
}

LdsLogZ lds_log_z(const SinState& sin, const Rows& sequence) {
    require(sin.structure == Structure::Lds, "lds_log_z: not an LDS inference network");
    const DnnFactors f = encode(sin.encoder, sequence);
    return lds_log_z_factors(sin.phi_pgm, sin.latent_dim, f.m, f.v);
}

SinSample lds_sample_factors(const std::vector<double>& phi_pgm, int d, const std::vector<Vec<double>>& m,
                             const std::vector<Vec<double>>& v, Rng& rng) {
    const LdsLogZ lz = lds_log_z_factors(phi_pgm, d, m, v);
    SinSample s;
    s.log_z = lz.log_z;
    for (std::size_t t = 0; t < m.size(); ++t) s.eps.push_back(normal_vec(d, rng));
    s.x_star = lds_backward_sample(unpack_lds(phi_pgm.data(), d), lz.steps, s.eps);
    return s;
}

SinSample lds_sample(const SinState& sin, const Rows& sequence, Rng& rng) {
    require(sin.structure == Structure::Lds, "lds_sample: not an LDS inference network");
    const DnnFactors f = encode(sin.encoder, sequence);
    return lds_sample_factors(sin.phi_pgm, sin.latent_dim, f.m, f.v, rng);
}

SinGrad sin_grad_log_z(const SinState& sin, const Rows& data) {
    const int d = sin.latent_dim;
    const DnnFactors f = encode(sin.encoder, data);
    ad::Tape tape;
    ad::ScopedTape scope(tape);
    const std::vector<Var> phi = leaves(tape, sin.phi_pgm);
    std::vector<Vec<Var>> m, v;
    for (std::size_t n = 0; n < data.size(); ++n) {
        m.push_back(leaves(tape, f.m[n]));
        v.push_back(leaves(tape, f.v[n]));
    }
    Var log_z(0.0);
    if (sin.structure == Structure::Gmm) {
        const Mixture<Var> mix = unpack_mixture(phi.data(), sin.components, d);
        for (std::size_t n = 0; n < data.size(); ++n) log_z += gmm_log_z_datum(mix, m[n], v[n]);
    } else {
        log_z = lds_filter(unpack_lds(phi.data(), d), m, v);
    }
    tape.backward(log_z);

    SinGrad g;
    g.log_z = log_z.v;
    g.pgm.resize(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) g.pgm[i] = tape.adjoint(phi[i]);
    g.encoder.assign(sin.encoder.num_params(), 0.0);
    for (std::size_t n = 0; n < data.size(); ++n) {
        Vec<double> dm(static_cast<std::size_t>(d)), dv(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
            dm[static_cast<std::size_t>(i)] = tape.adjoint(m[n][static_cast<std::size_t>(i)]);
            dv[static_cast<std::size_t>(i)] = tape.adjoint(v[n][static_cast<std::size_t>(i)]);
        }
        nnet::backward_gaussian(sin.encoder, f.fwd[n], dm, dv, g.encoder);
    }
    return g;
}

SmootherResult kalman_smooth(const StateSpace& ss, const std::vector<Eigen::VectorXd>& y) {
    using Eigen::MatrixXd;
    using Eigen::VectorXd;
    const std::size_t t_len = y.size();
    require(t_len >= 1, "kalman_smooth: empty sequence");
    require(ss.R.size() == 1 || ss.R.size() == t_len, "kalman_smooth: need one R or one per step");
    SmootherResult r;
    VectorXd a = ss.mu1;
    MatrixXd p = ss.sigma1;
    for (std::size_t t = 0; t < t_len; ++t) {
        const MatrixXd& rt = ss.R.size() == 1 ? ss.R[0] : ss.R[t];
        const VectorXd innov = y[t] - ss.C * a - ss.b;
        MatrixXd s = ss.C * p * ss.C.transpose() + rt;
        s = 0.5 * (s + s.transpose());
        Eigen::LLT<MatrixXd> llt(s);
        if (llt.info() != Eigen::Success) throw InvalidParameter("kalman_smooth: innovation covariance not SPD");
        const MatrixXd l = llt.matrixL();
        const VectorXd z = l.triangularView<Eigen::Lower>().solve(innov);
        r.log_lik += -0.5 * z.squaredNorm() - l.diagonal().array().log().sum() - 0.5 * innov.size() * kLog2Pi;
        const MatrixXd gain = llt.solve(ss.C * p).transpose();  // P Cᵀ S⁻¹
        const VectorXd f = a + gain * innov;
        MatrixXd fc = p - gain * ss.C * p;
        fc = 0.5 * (fc + fc.transpose());
        r.pred_mean.push_back(a);
        r.pred_cov.push_back(p);
        r.filt_mean.push_back(f);
        r.filt_cov.push_back(fc);
        a = ss.A * f;
        p = ss.A * fc * ss.A.transpose() + ss.Q;
        p = 0.5 * (p + p.transpose());
    }
    r.mean.assign(t_len, VectorXd());
    r.cov.assign(t_len, MatrixXd());
    r.cross.assign(t_len - 1, MatrixXd());
    r.mean[t_len - 1] = r.filt_mean[t_len - 1];
    r.cov[t_len - 1] = r.filt_cov[t_len - 1];
    for (std::size_t t = t_len - 1; t-- > 0;) {
        const MatrixXd j = r.pred_cov[t + 1].llt().solve(ss.A * r.filt_cov[t]).transpose();
        r.mean[t] = r.filt_mean[t] + j * (r.mean[t + 1] - r.pred_mean[t + 1]);
        MatrixXd c = r.filt_cov[t] + j * (r.cov[t + 1] - r.pred_cov[t + 1]) * j.transpose();
        r.cov[t] = 0.5 * (c + c.transpose());
        r.cross[t] = r.cov[t + 1] * j.transpose();
    }
    return r;
}

SmootherResult lds_posterior_factors(const std::vector<double>& phi_pgm, int d, const std::vector<Vec<double>>& m,
                                     const std::vector<Vec<double>>& v) {
    require(static_cast<int>(phi_pgm.size()) == lds_size(d), "lds_posterior: parameter layout mismatch");
    check_factors(m, v, d);
    const LdsParams<double> p = unpack_lds(phi_pgm.data(), d);
    auto to_eigen = [d](const Mat<double>& x) {
        Eigen::MatrixXd e(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) e(i, j) = x(i, j);
        return e;
    };
    StateSpace ss;
    ss.A = to_eigen(p.A);
    ss.Q = to_eigen(p.Q);
    ss.C = Eigen::MatrixXd::Identity(d, d);
    ss.b = Eigen::VectorXd::Zero(d);
    const Eigen::VectorXd mu0 = Eigen::Map<const Eigen::VectorXd>(p.mu0.data(), d);
    ss.mu1 = ss.A * mu0;
    ss.sigma1 = ss.A * to_eigen(p.sigma0) * ss.A.transpose() + ss.Q;
    std::vector<Eigen::VectorXd> y;
    for (std::size_t t = 0; t < m.size(); ++t) {
        y.push_back(Eigen::Map<const Eigen::VectorXd>(m[t].data(), d));
        ss.R.push_back(Eigen::Map<const Eigen::VectorXd>(v[t].data(), d).asDiagonal());
    }
    return kalman_smooth(ss, y);
}

SmootherResult lds_posterior(const SinState& sin, const Rows& sequence) {
    require(sin.structure == Structure::Lds, "lds_posterior: not an LDS inference network");
    const DnnFactors f = encode(sin.encoder, sequence);
    return lds_posterior_factors(sin.phi_pgm, sin.latent_dim, f.m, f.v);
}

}  // namespace san
