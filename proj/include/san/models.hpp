#pragma once

// Generative models p(y, x, θ) = Π_n p(y_n | x_n, θ_NN) · p(x | θ_PGM) · p(θ_PGM):
// a diagonal-Gaussian decoder network over one of three latent priors.

#include <string>
#include <vector>

#include "san/expfam.hpp"
#include "san/nnet.hpp"
#include "san/sin.hpp"
#include "san/sin_math.hpp"

namespace san {

enum class PriorKind { Gmm, Tmm, Lds };
std::string prior_name(PriorKind k);
PriorKind parse_prior(const std::string& s);

// q(θ_PGM) or p(θ_PGM) for the latent GMM: Dirichlet ⊗ K Normal–Wisharts.
struct PgmPosterior {
    expfam::NaturalParamVector dirichlet;
    std::vector<expfam::NaturalParamVector> nw;

    int components() const { return static_cast<int>(nw.size()); }
    int dim() const { return nw.empty() ? 0 : nw[0].dim; }
    // All blocks concatenated: Dirichlet first, then component 1..K.
    Eigen::VectorXd flat() const;
    void set_flat(const Eigen::VectorXd& v);
    bool in_domain() const;
};

// α0 = 1, m0 = 0, κ0 = 0.1, W0 = d·I, ν0 = d + 2.
PgmPosterior default_hyperprior(int components, int dim);

double kl_divergence(const PgmPosterior& q, const PgmPosterior& p);

// θ draws in the mixture layout of sin_math.hpp.
std::vector<double> sample_mixture_theta(const PgmPosterior& q, Rng& rng);
// Plug-in estimate: E[π], m_k, E[Λ_k]⁻¹.
std::vector<double> mean_mixture_theta(const PgmPosterior& q);

struct GenerativeModel {
    PriorKind prior = PriorKind::Gmm;
    int data_dim = 0;
    int latent_dim = 0;
    int components = 1;
    double dof = 5.0;             // Student's t mixture only, fixed
    nnet::Mlp decoder;            // x -> [mean, raw variance], width 2D
    std::vector<double> theta_pgm;  // mixture or lds layout
    PgmPosterior hyperprior;      // latent GMM only
};

GenerativeModel make_model(PriorKind prior, int data_dim, int latent_dim, int components,
                           const std::vector<int>& hidden, Rng& rng, nnet::Act act = nnet::Act::Tanh);

// Log density of the latents under a mixture prior, generic in the scalar.
template <class S>
S mixture_prior_log_density(PriorKind kind, const S* theta, int k, int d, double dof, const Vec<S>& x,
                            Vec<double>* resp = nullptr) {
    const Mixture<S> mix = unpack_mixture(theta, k, d);
    if (kind == PriorKind::Tmm) return tmm_log_density(mix, dof, x, resp);
    return mixture_log_density(mix, x, resp);
}

struct PriorEval {
    double value = 0.0;
    std::vector<Vec<double>> grad_x;
    std::vector<double> grad_theta;
};

// Mixture priors treat x as N independent latents; the LDS prior treats x as
// one sequence.
PriorEval log_prior(const GenerativeModel& model, const std::vector<Vec<double>>& x);

// Σ_n Σ_k r_nk E_q[log π_k + log N(x_n | μ_k, Λ_k⁻¹)], with its gradient in
// the mean coordinates of q: these are the sufficient statistics that the
// conjugate update adds to the natural parameters.
struct ExpectedLogPrior {
    double value = 0.0;
    PgmPosterior mean_grad;
};
ExpectedLogPrior expected_log_prior(const PgmPosterior& q, const std::vector<Vec<double>>& x,
                                    const std::vector<Vec<double>>& resp);

// Per-datum E_q[log π_k + log N(x_n | μ_k, Λ_k⁻¹)], K columns.
std::vector<Vec<double>> expected_log_joint(const PgmPosterior& q, const std::vector<Vec<double>>& x);

// Σ_n log Σ_k exp(expected_log_joint): the variational bound with optimal
// responsibilities, which are returned too.
struct ExpectedMarginal {
    double value = 0.0;
    std::vector<double> per_datum;
    std::vector<Vec<double>> resp;
};
ExpectedMarginal expected_log_marginal(const PgmPosterior& q, const std::vector<Vec<double>>& x);

struct DecodeEval {
    double value = 0.0;
    Vec<double> grad_x;
};
// log N(y | mean(x), diag var(x)); adds θ_NN gradient into grad_theta when non-null.
DecodeEval decode_loglik(const nnet::Mlp& decoder, const Vec<double>& x, const Vec<double>& y,
                         std::vector<double>* grad_theta = nullptr);
Vec<double> decode_mean(const nnet::Mlp& decoder, const Vec<double>& x);

struct Generated {
    std::vector<Vec<double>> x;
    Rows y;
    std::vector<int> labels;  // component index, or time index for the LDS
};
Generated generate(const GenerativeModel& model, Rng& rng, int n);

}  // namespace san
