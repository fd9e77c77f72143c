#include "san/updates.hpp"

#include <cmath>

#include "san/errors.hpp"
#include "san/log.hpp"

namespace san {

namespace {

bool all_finite(const std::vector<double>& g) {
    for (double x : g)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

PgmPosterior conjugate_gmm_message(const PgmPosterior& hyperprior, const std::vector<Vec<double>>& x_star,
                                   const std::vector<Vec<double>>& resp, std::size_t n_total) {
    require(x_star.size() == resp.size(), "conjugate message: responsibilities must match samples");
    require(!x_star.empty(), "conjugate message: batch must be nonempty");
    require(n_total >= x_star.size(), "conjugate message: n_total must be at least the batch size");
    const int k = hyperprior.components(), d = hyperprior.dim();
    const int tri = expfam::vech_size(d);
    const double scale = static_cast<double>(n_total) / static_cast<double>(x_star.size());
    PgmPosterior msg = hyperprior;
    for (std::size_t n = 0; n < x_star.size(); ++n) {
        require(static_cast<int>(x_star[n].size()) == d, "conjugate message: latent dimension mismatch");
        require(static_cast<int>(resp[n].size()) == k, "conjugate message: responsibility width must be K");
        double total = 0.0;
        for (double r : resp[n]) {
            require(r >= 0.0, "conjugate message: responsibilities must be nonnegative");
            total += r;
        }
        require(std::abs(total - 1.0) < 1e-8, "conjugate message: responsibilities must sum to one");
        const Eigen::Map<const Eigen::VectorXd> x(x_star[n].data(), d);
        const Eigen::VectorXd outer = expfam::vech2(x * x.transpose());
        for (int c = 0; c < k; ++c) {
            const double r = scale * resp[n][static_cast<std::size_t>(c)];
            if (r == 0.0) continue;
            msg.dirichlet.v(c) += r;
            Eigen::VectorXd& v = msg.nw[static_cast<std::size_t>(c)].v;
            v.head(d) += r * x;
            v(d) += r;
            v.segment(d + 1, tri) += r * outer;
            v(d + 1 + tri) += r;
        }
    }
    return msg;
}

PgmPosterior conjugate_gmm_message(const PgmPosterior& hyperprior, const std::vector<Vec<double>>& x_star,
                                   const std::vector<int>& z_star, std::size_t n_total) {
    const int k = hyperprior.components();
    std::vector<Vec<double>> resp;
    resp.reserve(z_star.size());
    for (int z : z_star) {
        require(z >= 0 && z < k, "conjugate message: indicator out of range");
        Vec<double> r(static_cast<std::size_t>(k), 0.0);
        r[static_cast<std::size_t>(z)] = 1.0;
        resp.push_back(std::move(r));
    }
    return conjugate_gmm_message(hyperprior, x_star, resp, n_total);
}

PgmPosterior natural_gradient_step(const PgmPosterior& q, const PgmPosterior& message, double beta) {
    require(beta >= 0.0 && beta <= 1.0, "natural_gradient_step: beta must lie in [0, 1]");
    const Eigen::VectorXd lam = q.flat();
    const Eigen::VectorXd msg = message.flat();
    require(lam.size() == msg.size(), "natural_gradient_step: message layout mismatch");
    PgmPosterior out = q;
    double b = beta;
    for (int attempt = 0; attempt <= 10; ++attempt, b *= 0.5) {
        out.set_flat((1.0 - b) * lam + b * msg);
        if (out.in_domain()) {
            if (attempt > 0) warn("natural_gradient_step: step halved " + std::to_string(attempt) + " times");
            return out;
        }
    }
    throw NumericalError("natural_step", "natural-gradient step leaves the natural domain after 10 halvings");
}

bool sgd_step(std::vector<double>& params, const std::vector<double>& grad, double beta) {
    require(beta > 0.0, "sgd_step: beta must be positive");
    require(params.size() == grad.size(), "sgd_step: gradient size mismatch");
    if (!all_finite(grad)) {
        warn("sgd_step: non-finite gradient, step skipped");
        return false;
    }
    for (std::size_t i = 0; i < params.size(); ++i) params[i] += beta * grad[i];
    return true;
}

bool adagrad_step(std::vector<double>& params, const std::vector<double>& grad, AdagradState& state, double beta) {
    require(beta > 0.0, "adagrad_step: beta must be positive");
    require(params.size() == grad.size(), "adagrad_step: gradient size mismatch");
    if (!all_finite(grad)) {
        warn("adagrad_step: non-finite gradient, step skipped");
        return false;
    }
    if (state.accum.empty()) state.accum.assign(params.size(), 0.0);
    require(state.accum.size() == params.size(), "adagrad_step: state size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.accum[i] += grad[i] * grad[i];
        params[i] += beta * grad[i] / (std::sqrt(state.accum[i]) + 1e-8);
    }
    return true;
}

VanState van_step(const VanState& state, const VecFn& grad_fn, const VecFn& hess_diag_fn, double beta, Rng& rng) {
    require(beta > 0.0, "van_step: beta must be positive");
    require(state.mu.size() == state.sigma2.size(), "van_step: state size mismatch");
    const std::size_t n = state.mu.size();
    std::vector<double> draw(n);
    for (std::size_t i = 0; i < n; ++i) {
        require(state.sigma2[i] > 0.0, "van_step: variances must be positive");
        draw[i] = state.mu[i] + std::sqrt(state.sigma2[i]) * std_normal(rng);
    }
    const std::vector<double> g = grad_fn(draw);
    const std::vector<double> h = hess_diag_fn(draw);
    require(g.size() == n && h.size() == n, "van_step: gradient or curvature size mismatch");
    if (!all_finite(g) || !all_finite(h)) {
        warn("van_step: non-finite gradient or curvature, step skipped");
        return state;
    }
    VanState out = state;
    van_update(out, g, h, beta);
    return out;
}

void van_update(VanState& state, const std::vector<double>& g, const std::vector<double>& h, double beta) {
    require(g.size() == state.mu.size() && h.size() == state.mu.size(), "van_update: size mismatch");
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double prec = 1.0 / state.sigma2[i] + 2.0 * beta * std::max(h[i], 0.0);
        state.sigma2[i] = 1.0 / prec;
        state.mu[i] -= beta * state.sigma2[i] * g[i];
    }
}

BayesNnPosterior bayes_nn_step(const BayesNnPosterior& post, const std::vector<double>& grad_mu,
                               const std::vector<double>& grad_sigma2, double beta) {
    require(beta >= 0.0 && beta < 1.0, "bayes_nn_step: beta must lie in [0, 1)");
    require(post.sigma0_sq > 0.0, "bayes_nn_step: prior variance must be positive");
    const std::size_t n = post.mu.size();
    require(post.sigma2.size() == n && grad_mu.size() == n && grad_sigma2.size() == n,
            "bayes_nn_step: size mismatch");
    BayesNnPosterior out = post;
    const double prior_prec = 1.0 / post.sigma0_sq;
    const double floor = prior_prec * 1e-3;
    bool floored = false;
    for (std::size_t i = 0; i < n; ++i) {
        double prec = (1.0 - beta) / post.sigma2[i] + beta * (prior_prec - 2.0 * grad_sigma2[i]);
        if (!(prec > floor)) {
            prec = floor;
            floored = true;
        }
        out.sigma2[i] = 1.0 / prec;
        out.mu[i] = post.mu[i] + beta * out.sigma2[i] * (grad_mu[i] - (post.mu[i] - post.mu0) * prior_prec);
    }
    if (floored) warn("bayes_nn_step: precision floored");
    return out;
}

}  // namespace san
