#pragma once

// Structured inference networks: q(x | y) ∝ Π_n N(x_n | m_n, V_n) · PGM factor,
// where (m_n, V_n) come from an encoder network and the PGM factor is either a
// Gaussian mixture or a linear dynamical system.

#include <Eigen/Dense>
#include <vector>

#include "san/nnet.hpp"
#include "san/rng.hpp"
#include "san/sin_math.hpp"

namespace san {

using Row = std::vector<double>;
using Rows = std::vector<Row>;

enum class Structure { Gmm, Lds };

struct SinState {
    Structure structure = Structure::Gmm;
    int latent_dim = 0;
    int components = 1;  // GMM only
    nnet::Mlp encoder;   // y -> [m, raw V], width 2d
    std::vector<double> phi_pgm;

    std::size_t phi_size() const { return encoder.num_params() + phi_pgm.size(); }
};

// μ̄_k ~ N(0, 4I), Σ̄_k = I, π̄ uniform.
SinState make_gmm_sin(int data_dim, int latent_dim, int components, const std::vector<int>& hidden, Rng& rng,
                      nnet::Act act = nnet::Act::Tanh);
// Ā = 0.9 I, Q̄ = 0.1 I, μ̄0 = 0, Σ̄0 = I.
SinState make_lds_sin(int data_dim, int latent_dim, const std::vector<int>& hidden, Rng& rng,
                      nnet::Act act = nnet::Act::Tanh);

// Flat packing helpers for the PGM-factor parameters.
std::vector<double> pack_mixture(const std::vector<double>& weights, const std::vector<Vec<double>>& means,
                                 const std::vector<Mat<double>>& covs);
std::vector<double> pack_lds(const Mat<double>& a, const Mat<double>& q, const Vec<double>& mu0,
                             const Mat<double>& sigma0);

struct DnnFactors {
    std::vector<Vec<double>> m;
    std::vector<Vec<double>> v;
    std::vector<nnet::GaussianForward> fwd;
};
DnnFactors encode(const nnet::Mlp& encoder, const Rows& data);

struct GmmLogZ {
    double log_z = 0.0;
    std::vector<double> per_datum;
    std::vector<Vec<double>> resp;  // q(z_n = k | y_n)
};
GmmLogZ gmm_log_z(const SinState& sin, const Rows& data);
GmmLogZ gmm_log_z_factors(const std::vector<double>& phi_pgm, int k, int d, const std::vector<Vec<double>>& m,
                          const std::vector<Vec<double>>& v);

struct SinSample {
    std::vector<Vec<double>> x_star;
    std::vector<int> z_star;             // GMM only
    std::vector<Vec<double>> eps;        // standard normal noise behind x_star
    double log_z = 0.0;
};

SinSample gmm_sample(const SinState& sin, const Rows& data, Rng& rng);
SinSample gmm_sample_factors(const std::vector<double>& phi_pgm, int k, int d, const std::vector<Vec<double>>& m,
                             const std::vector<Vec<double>>& v, Rng& rng);

struct LdsLogZ {
    double log_z = 0.0;
    std::vector<FilterStep<double>> steps;
};
LdsLogZ lds_log_z(const SinState& sin, const Rows& sequence);
LdsLogZ lds_log_z_factors(const std::vector<double>& phi_pgm, int d, const std::vector<Vec<double>>& m,
                          const std::vector<Vec<double>>& v);

SinSample lds_sample(const SinState& sin, const Rows& sequence, Rng& rng);
SinSample lds_sample_factors(const std::vector<double>& phi_pgm, int d, const std::vector<Vec<double>>& m,
                             const std::vector<Vec<double>>& v, Rng& rng);

// ∂ log Z / ∂φ: encoder block first, then the PGM-factor block.
struct SinGrad {
    double log_z = 0.0;
    std::vector<double> encoder;
    std::vector<double> pgm;
};
SinGrad sin_grad_log_z(const SinState& sin, const Rows& data);

// General linear-Gaussian state space model
//   x_1 ~ N(mu1, Sigma1), x_{t+1} = A x_t + N(0, Q), y_t = C x_t + b + N(0, R_t).
struct StateSpace {
    Eigen::MatrixXd A, Q, C;
    Eigen::VectorXd b;
    Eigen::VectorXd mu1;
    Eigen::MatrixXd sigma1;
    std::vector<Eigen::MatrixXd> R;  // one per step, or a single shared matrix
};

struct SmootherResult {
    double log_lik = 0.0;
    std::vector<Eigen::VectorXd> pred_mean, filt_mean, mean;
    std::vector<Eigen::MatrixXd> pred_cov, filt_cov, cov;
    std::vector<Eigen::MatrixXd> cross;  // Cov(x_{t+1}, x_t | y_{1:T}), T − 1 entries
};
SmootherResult kalman_smooth(const StateSpace& ss, const std::vector<Eigen::VectorXd>& y);

// Posterior marginals of the LDS inference network.
SmootherResult lds_posterior(const SinState& sin, const Rows& sequence);
SmootherResult lds_posterior_factors(const std::vector<double>& phi_pgm, int d, const std::vector<Vec<double>>& m,
                                     const std::vector<Vec<double>>& v);

}  // namespace san
