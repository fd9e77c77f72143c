#pragma once

// Parameter updates: conjugate natural-gradient steps for q(θ_PGM), Euclidean
// ascent for network weights, the variational adaptive-Newton optimizer, and
// mean-field Gaussian updates for Bayesian decoder weights.

#include <functional>
#include <vector>

#include "san/models.hpp"
#include "san/rng.hpp"

namespace san {

// Prior natural parameters plus sufficient statistics of (x*, responsibilities)
// scaled by n_total / N: counts, Σ r x, Σ r x xᵀ per component.
PgmPosterior conjugate_gmm_message(const PgmPosterior& hyperprior, const std::vector<Vec<double>>& x_star,
                                   const std::vector<Vec<double>>& resp, std::size_t n_total);
// Hard-assignment form.
PgmPosterior conjugate_gmm_message(const PgmPosterior& hyperprior, const std::vector<Vec<double>>& x_star,
                                   const std::vector<int>& z_star, std::size_t n_total);

// λ ← (1 − β)λ + β·message. A step leaving the natural domain is retried with
// β halved, at most 10 times, before NumericalError.
PgmPosterior natural_gradient_step(const PgmPosterior& q, const PgmPosterior& message, double beta);

// params += beta·grad. Non-finite gradients skip the step with a warning;
// the return value reports whether the step was taken.
bool sgd_step(std::vector<double>& params, const std::vector<double>& grad, double beta);

struct AdagradState {
    std::vector<double> accum;
};
// params += beta·grad / (sqrt(Σ grad²) + 1e-8), accumulated per coordinate.
bool adagrad_step(std::vector<double>& params, const std::vector<double>& grad, AdagradState& state, double beta);

struct VanState {
    std::vector<double> mu;
    std::vector<double> sigma2;
};
using VecFn = std::function<std::vector<double>(const std::vector<double>&)>;
// Minimizes E_q[f]: σ⁻² += 2β·max(h, 0); μ −= β·σ²·g, with g and h evaluated
// at one draw μ + σ·ε.
VanState van_step(const VanState& state, const VecFn& grad_fn, const VecFn& hess_diag_fn, double beta, Rng& rng);
// The same update with g and h supplied by the caller (evaluated at a draw
// the caller made).
void van_update(VanState& state, const std::vector<double>& g, const std::vector<double>& h, double beta);

struct BayesNnPosterior {
    std::vector<double> mu;
    std::vector<double> sigma2;
    double mu0 = 0.0;
    double sigma0_sq = 1.0;
};
// Natural-gradient step on E_q[log lik] − KL(q || N(μ0, σ0²)):
//   σ⁻² ← (1 − β)σ⁻² + β[1/σ0² − 2∇_{σ²}E]
//   μ   ← μ + β·σ²[∇_μE − (μ − μ0)/σ0²]   (σ² after the precision update)
// Precision is floored at 1e-3/σ0² with a warning.
BayesNnPosterior bayes_nn_step(const BayesNnPosterior& post, const std::vector<double>& grad_mu,
                               const std::vector<double>& grad_sigma2, double beta);

}  // namespace san
