#include "san/models.hpp"

#include <cmath>

#include "san/ad.hpp"
#include "san/errors.hpp"
#include "san/special.hpp"

namespace san {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Mat<double> from_eigen(const MatrixXd& m) {
    Mat<double> out(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
    for (int i = 0; i < out.rows; ++i)
        for (int j = 0; j < out.cols; ++j) out(i, j) = m(i, j);
    return out;
}

}  // namespace

std::string prior_name(PriorKind k) {
    switch (k) {
        case PriorKind::Gmm:
            return "latent-gmm";
        case PriorKind::Tmm:
            return "latent-tmm";
        case PriorKind::Lds:
            return "latent-lds";
    }
    return "unknown";
}

PriorKind parse_prior(const std::string& s) {
    for (PriorKind k : {PriorKind::Gmm, PriorKind::Tmm, PriorKind::Lds})
        if (s == prior_name(k)) return k;
    throw ContractError("unknown model kind: " + s);
}

Eigen::VectorXd PgmPosterior::flat() const {
    Eigen::Index n = dirichlet.v.size();
    for (const auto& b : nw) n += b.v.size();
    VectorXd out(n);
    out.head(dirichlet.v.size()) = dirichlet.v;
    Eigen::Index off = dirichlet.v.size();
    for (const auto& b : nw) {
        out.segment(off, b.v.size()) = b.v;
        off += b.v.size();
    }
    return out;
}

void PgmPosterior::set_flat(const Eigen::VectorXd& v) {
    require(v.size() == flat().size(), "PgmPosterior: flat size mismatch");
    dirichlet.v = v.head(dirichlet.v.size());
    Eigen::Index off = dirichlet.v.size();
    for (auto& b : nw) {
        b.v = v.segment(off, b.v.size());
        off += b.v.size();
    }
}

bool PgmPosterior::in_domain() const {
    if (!expfam::in_domain(dirichlet)) return false;
    for (const auto& b : nw)
        if (!expfam::in_domain(b)) return false;
    return true;
}

PgmPosterior default_hyperprior(int components, int dim) {
    require(components >= 1 && dim >= 1, "hyperprior: K and d must be positive");
    PgmPosterior p;
    p.dirichlet = expfam::to_natural(expfam::DirichletParam{VectorXd::Ones(components)});
    const expfam::NormalWishartParam nw{VectorXd::Zero(dim), 0.1, dim * MatrixXd::Identity(dim, dim), dim + 2.0};
    p.nw.assign(static_cast<std::size_t>(components), expfam::to_natural(nw));
    return p;
}

double kl_divergence(const PgmPosterior& q, const PgmPosterior& p) {
    require(q.components() == p.components(), "kl_divergence: component count mismatch");
    double kl = expfam::kl_divergence(q.dirichlet, p.dirichlet);
    for (std::size_t k = 0; k < q.nw.size(); ++k) kl += expfam::kl_divergence(q.nw[k], p.nw[k]);
    return kl;
}

std::vector<double> sample_mixture_theta(const PgmPosterior& q, Rng& rng) {
    const int k = q.components(), d = q.dim();
    const VectorXd pi = expfam::sample(q.dirichlet, rng);
    std::vector<double> w(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) w[static_cast<std::size_t>(c)] = std::max(pi(c), 1e-300);
    std::vector<Vec<double>> mu;
    std::vector<Mat<double>> cov;
    for (int c = 0; c < k; ++c) {
        const expfam::NwDraw draw = expfam::sample_normal_wishart(expfam::as_normal_wishart(q.nw[static_cast<std::size_t>(c)]), rng);
        mu.emplace_back(draw.mu.data(), draw.mu.data() + d);
        cov.push_back(from_eigen(draw.Lambda.inverse()));
    }
    return pack_mixture(w, mu, cov);
}

std::vector<double> mean_mixture_theta(const PgmPosterior& q) {
    const int k = q.components(), d = q.dim();
    const VectorXd alpha = expfam::as_dirichlet(q.dirichlet).alpha;
    std::vector<double> w(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) w[static_cast<std::size_t>(c)] = alpha(c) / alpha.sum();
    std::vector<Vec<double>> mu;
    std::vector<Mat<double>> cov;
    for (int c = 0; c < k; ++c) {
        const expfam::NormalWishartParam p = expfam::as_normal_wishart(q.nw[static_cast<std::size_t>(c)]);
        mu.emplace_back(p.m.data(), p.m.data() + d);
        cov.push_back(from_eigen((p.nu * p.W).inverse()));
    }
    return pack_mixture(w, mu, cov);
}

GenerativeModel make_model(PriorKind prior, int data_dim, int latent_dim, int components,
                           const std::vector<int>& hidden, Rng& rng, nnet::Act act) {
    require(data_dim >= 1 && latent_dim >= 1 && components >= 1, "make_model: dimensions must be positive");
    GenerativeModel m;
    m.prior = prior;
    m.data_dim = data_dim;
    m.latent_dim = latent_dim;
    m.components = prior == PriorKind::Lds ? 1 : components;
    m.decoder = nnet::Mlp(latent_dim, hidden, 2 * data_dim, act);
    m.decoder.init(rng);
    if (prior == PriorKind::Lds) {
        m.theta_pgm = pack_lds(Mat<double>::identity(latent_dim, 0.9), Mat<double>::identity(latent_dim, 0.1),
                               Vec<double>(static_cast<std::size_t>(latent_dim), 0.0), Mat<double>::identity(latent_dim));
    } else {
        m.hyperprior = default_hyperprior(components, latent_dim);
        std::vector<Vec<double>> mu;
        std::vector<Mat<double>> cov;
        for (int c = 0; c < components; ++c) {
            Vec<double> v(static_cast<std::size_t>(latent_dim));
            for (double& x : v) x = 2.0 * std_normal(rng);
            mu.push_back(v);
            cov.push_back(Mat<double>::identity(latent_dim));
        }
        m.theta_pgm = pack_mixture(std::vector<double>(static_cast<std::size_t>(components), 1.0 / components), mu, cov);
    }
    return m;
}

PriorEval log_prior(const GenerativeModel& model, const std::vector<Vec<double>>& x) {
    const int d = model.latent_dim;
    for (const auto& xi : x) require(static_cast<int>(xi.size()) == d, "log_prior: latent dimension mismatch");
    ad::Tape tape;
    ad::ScopedTape scope(tape);
    std::vector<ad::Var> theta;
    for (double t : model.theta_pgm) theta.push_back(tape.variable(t));
    std::vector<Vec<ad::Var>> xv;
    for (const auto& xi : x) {
        Vec<ad::Var> row;
        for (double v : xi) row.push_back(tape.variable(v));
        xv.push_back(row);
    }
    ad::Var total(0.0);
    if (model.prior == PriorKind::Lds) {
        require(static_cast<int>(model.theta_pgm.size()) == lds_size(d), "log_prior: parameter layout mismatch");
        if (!xv.empty()) total = lds_log_density(unpack_lds(theta.data(), d), xv);
    } else {
        require(static_cast<int>(model.theta_pgm.size()) == mixture_size(model.components, d),
                "log_prior: parameter layout mismatch");
        for (const auto& xi : xv)
            total += mixture_prior_log_density(model.prior, theta.data(), model.components, d, model.dof, xi);
    }
    tape.backward(total);
    PriorEval out;
    out.value = total.v;
    for (const auto& t : theta) out.grad_theta.push_back(tape.adjoint(t));
    for (const auto& row : xv) {
        Vec<double> g;
        for (const auto& v : row) g.push_back(tape.adjoint(v));
        out.grad_x.push_back(g);
    }
    return out;
}

namespace {

struct ComponentExpect {
    double e_log_pi;
    expfam::NwExpectations nw;
};

std::vector<ComponentExpect> component_expectations(const PgmPosterior& q) {
    const VectorXd e_log_pi = expfam::to_mean(q.dirichlet).v;
    std::vector<ComponentExpect> out;
    for (int k = 0; k < q.components(); ++k)
        out.push_back({e_log_pi(k), expfam::nw_expectations(expfam::as_normal_wishart(q.nw[static_cast<std::size_t>(k)]))});
    return out;
}

double expected_log_normal(const expfam::NwExpectations& e, const Vec<double>& x) {
    const VectorXd xv = Eigen::Map<const VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    return 0.5 * e.log_det - 0.5 * static_cast<double>(x.size()) * kLog2Pi -
           0.5 * (xv.dot(e.lambda * xv) - 2.0 * xv.dot(e.lambda_mu) + e.mu_lambda_mu);
}

}  // namespace

std::vector<Vec<double>> expected_log_joint(const PgmPosterior& q, const std::vector<Vec<double>>& x) {
    const auto comps = component_expectations(q);
    std::vector<Vec<double>> out;
    out.reserve(x.size());
    for (const auto& xi : x) {
        require(static_cast<int>(xi.size()) == q.dim(), "expected_log_joint: dimension mismatch");
        Vec<double> row;
        for (const auto& c : comps) row.push_back(c.e_log_pi + expected_log_normal(c.nw, xi));
        out.push_back(row);
    }
    return out;
}

ExpectedLogPrior expected_log_prior(const PgmPosterior& q, const std::vector<Vec<double>>& x,
                                    const std::vector<Vec<double>>& resp) {
    require(x.size() == resp.size(), "expected_log_prior: responsibilities must match data");
    const int k = q.components(), d = q.dim();
    const auto joint = expected_log_joint(q, x);
    ExpectedLogPrior out;
    out.mean_grad = q;
    out.mean_grad.dirichlet.v.setZero();
    for (auto& b : out.mean_grad.nw) b.v.setZero();
    const int tri = expfam::vech_size(d);
    for (std::size_t n = 0; n < x.size(); ++n) {
        require(static_cast<int>(resp[n].size()) == k, "expected_log_prior: responsibility width must be K");
        const VectorXd xv = Eigen::Map<const VectorXd>(x[n].data(), d);
        const VectorXd outer = expfam::vech2(xv * xv.transpose());
        for (int c = 0; c < k; ++c) {
            const double r = resp[n][static_cast<std::size_t>(c)];
            out.value += r * joint[n][static_cast<std::size_t>(c)];
            out.mean_grad.dirichlet.v(c) += r;
            VectorXd& g = out.mean_grad.nw[static_cast<std::size_t>(c)].v;
            g.head(d) += r * xv;
            g(d) += r;
            g.segment(d + 1, tri) += r * outer;
            g(d + 1 + tri) += r;
        }
    }
    return out;
}

ExpectedMarginal expected_log_marginal(const PgmPosterior& q, const std::vector<Vec<double>>& x) {
    const auto joint = expected_log_joint(q, x);
    ExpectedMarginal out;
    for (const auto& row : joint) {
        const double lse = log_sum_exp(row);
        out.per_datum.push_back(lse);
        out.value += lse;
        Vec<double> r(row.size());
        for (std::size_t c = 0; c < row.size(); ++c) r[c] = std::exp(row[c] - lse);
        out.resp.push_back(r);
    }
    return out;
}

DecodeEval decode_loglik(const nnet::Mlp& decoder, const Vec<double>& x, const Vec<double>& y,
                         std::vector<double>* grad_theta) {
    require(static_cast<int>(y.size()) * 2 == decoder.output_dim(), "decode_loglik: data dimension mismatch");
    const nnet::GaussianForward f = nnet::forward_gaussian(decoder, x);
    DecodeEval out;
    out.value = gaussian_logpdf_diag(y, f.mean, f.var);
    Vec<double> dm(y.size()), dv(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - f.mean[i];
        dm[i] = r / f.var[i];
        dv[i] = 0.5 * (r * r / (f.var[i] * f.var[i]) - 1.0 / f.var[i]);
    }
    std::vector<double> scratch;
    std::vector<double>& g = grad_theta ? *grad_theta : scratch;
    out.grad_x = nnet::backward_gaussian(decoder, f, dm, dv, g);
    return out;
}

Vec<double> decode_mean(const nnet::Mlp& decoder, const Vec<double>& x) {
    return nnet::gaussian_head(nnet::forward(decoder, x)).mean;
}

Generated generate(const GenerativeModel& model, Rng& rng, int n) {
    const int d = model.latent_dim;
    Generated g;
    auto emit = [&](const Vec<double>& x, int label) {
        const nnet::GaussianOut h = nnet::gaussian_head(nnet::forward(model.decoder, x));
        Row y(h.mean.size());
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = h.mean[i] + std::sqrt(h.var[i]) * std_normal(rng);
        g.x.push_back(x);
        g.y.push_back(y);
        g.labels.push_back(label);
    };
    if (model.prior == PriorKind::Lds) {
        const LdsParams<double> p = unpack_lds(model.theta_pgm.data(), d);
        Vec<double> x = p.mu0;
        const Mat<double> l0 = cholesky(p.sigma0);
        Vec<double> z(static_cast<std::size_t>(d));
        for (double& v : z) v = std_normal(rng);
        x = x + matvec(l0, z);
        for (int t = 0; t < n; ++t) {
            for (double& v : z) v = std_normal(rng);
            x = matvec(p.A, x) + matvec(p.q_chol, z);
            emit(x, t);
        }
        return g;
    }
    const Mixture<double> mix = unpack_mixture(model.theta_pgm.data(), model.components, d);
    std::vector<double> w;
    for (double lw : mix.log_w) w.push_back(std::exp(lw));
    std::discrete_distribution<int> pick(w.begin(), w.end());
    for (int i = 0; i < n; ++i) {
        const int c = pick(rng);
        Vec<double> z(static_cast<std::size_t>(d));
        for (double& v : z) v = std_normal(rng);
        double scale = 1.0;
        if (model.prior == PriorKind::Tmm) {
            std::chi_squared_distribution<double> chi(model.dof);
            scale = std::sqrt(model.dof / chi(rng));
        }
        Vec<double> x = matvec(mix.chol[static_cast<std::size_t>(c)], z);
        for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(j)] = mix.mu[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] + scale * x[static_cast<std::size_t>(j)];
        emit(x, c);
    }
    return g;
}

}  // namespace san
