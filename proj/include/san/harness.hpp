#pragma once

// Training orchestration: the SAN loop, three baselines (batch VB-EM for a
// GMM on the observations, a plain VAE, and EM for a linear-Gaussian state
// space model), evaluation metrics, checkpoints and plot data.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "san/checkpoint.hpp"
#include "san/data.hpp"
#include "san/models.hpp"
#include "san/sin.hpp"
#include "san/updates.hpp"

namespace san {

enum class Method { San, VbGmm, Vae, LdsEm };
enum class Optimizer { Sgd, Adagrad, Van };
enum class ThetaNnMode { Point, Bayes };
// Statistics fed to the λ_PGM step: responsibilities under q(θ) at x*, or
// the component indicators z* drawn by the inference network.
enum class PgmMessage { Vb, Sin };

std::string method_name(Method m);
Method parse_method(const std::string& s);
std::string optimizer_name(Optimizer o);
Optimizer parse_optimizer(const std::string& s);
std::string theta_nn_name(ThetaNnMode t);
ThetaNnMode parse_theta_nn(const std::string& s);
std::string pgm_message_name(PgmMessage p);
PgmMessage parse_pgm_message(const std::string& s);
std::string activation_name(nnet::Act a);
nnet::Act parse_activation(const std::string& s);
// "latent-gmm", "latent-tmm", "latent-lds" (bare names accepted).
std::string model_kind_name(PriorKind k);
PriorKind parse_model_kind(const std::string& s);

struct DataConfig {
    std::string kind = "pinwheel";  // pinwheel | dots | file
    std::string path;               // file only, format of save_dataset or plain delimited
    int n_per_arm = 1000;
    int arms = 5;
    double radial_std = 0.3;
    double tangential_std = 0.05;
    double rate = 0.25;
    int n_seq = 100;
    int t_len = 30;
    int width = 16;
    double dot_std = 1.0;
    double speed = 0.5;
    double outlier_fraction = 0.0;
    double outlier_std = 5.0;
    double train_frac = 0.7;
    bool standardize = false;
    std::uint64_t seed = 0;
};

struct TrainConfig {
    Method method = Method::San;
    PriorKind model = PriorKind::Gmm;
    int components = 10;
    int latent_dim = 2;
    std::vector<int> hidden{50, 50};
    nnet::Act activation = nnet::Act::Tanh;  // hidden layers of both networks
    double beta1 = 0.05;  // λ_PGM
    double beta2 = 1e-3;  // θ_NN and point-estimated θ_PGM
    double beta3 = 1e-3;  // φ
    int batch = 64;
    int iterations = 1000;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::Adagrad;
    ThetaNnMode theta_nn = ThetaNnMode::Point;
    PgmMessage pgm_message = PgmMessage::Vb;
    // Recompute gradients with a fresh θ ~ q after the λ_PGM step.
    bool sequential = false;
    // K = 1 with θ_PGM and φ_PGM pinned to N(0, I).
    bool fixed_prior = false;
    double dof = 5.0;
    // Initial decoder output variance (variance-head biases); 0 keeps zero biases.
    double decoder_init_var = 0.05;
    double van_init_var = 1e-2;
    double bayes_prior_var = 1.0;
    double bayes_init_var = 1e-6;
    int eval_every = 100;
    int eval_samples = 1;
    int eval_max_units = 1000;  // per split, for periodic evaluation
    std::vector<int> taus;      // τ-ahead horizons reported for sequence models
    bool record_wallclock = true;
    DataConfig data;

    void validate() const;
};

// Flat key=value form; keys equal the CLI flag names.
std::map<std::string, std::string> config_to_map(const TrainConfig& cfg);
TrainConfig config_from_map(const std::map<std::string, std::string>& kv);

Dataset make_dataset(const DataConfig& cfg);

struct TrainState {
    TrainConfig cfg;
    int data_dim = 0;
    GenerativeModel model;  // San, Vae (decoder only, K = 1 standard normal)
    SinState sin;           // San; Vae keeps its encoder here
    PgmPosterior q;         // San with a latent GMM, VbGmm
    StateSpace lds;         // LdsEm
    AdagradState ada_nn, ada_pgm, ada_phi;
    VanState van_nn, van_phi;
    BayesNnPosterior bayes;
    std::int64_t iteration = 0;
};

TrainState init_state(const TrainConfig& cfg, int data_dim);
Checkpoint to_checkpoint(const TrainState& s);
TrainState from_checkpoint(const Checkpoint& c);

struct MetricsRow {
    std::int64_t iteration = 0;
    double train_bound = 0.0;
    double val_bound = 0.0;
    double test_bound = 0.0;
    double imputation_mse = 0.0;
    double recon_mse = 0.0;
    std::map<int, double> mae;  // τ -> error
    double wall_seconds = 0.0;
};

std::string metrics_header(const std::vector<int>& taus);
std::string metrics_line(const MetricsRow& r, const std::vector<int>& taus);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

struct EvalTasks {
    bool bound = true;
    bool train_bound = false;
    bool imputation = true;
    bool reconstruction = true;
    std::vector<int> taus;
    int forecast_samples = 64;  // latent draws per τ-ahead forecast; 0 decodes the mean
    int samples = 1;
    std::size_t max_units = 0;  // 0 = all units of each split
    std::uint64_t seed = 0x5eed;
};

// Bounds are per observation row and exclude KL(q(θ) || p(θ)); the train
// bound subtracts it divided by the training row count. Missing metrics are
// NaN. Throws ContractError for tasks the method cannot perform.
MetricsRow evaluate(const TrainState& s, const Dataset& ds, const EvalTasks& tasks);

struct TrainResult {
    TrainState state;      // final, or last good on failure
    std::vector<MetricsRow> metrics;
    bool ok = true;
    std::string error;
};

// When out_dir is nonempty, metrics.csv is rewritten after every evaluation
// and checkpoint.bin is written atomically at each evaluation and at the end
// (the last good state on failure).
TrainResult train(const TrainConfig& cfg, const Dataset& ds, const std::string& out_dir = "");
TrainResult train_san(const TrainConfig& cfg, const Dataset& ds, const std::string& out_dir = "");
TrainResult train_vb_gmm(const TrainConfig& cfg, const Dataset& ds, const std::string& out_dir = "");
TrainResult train_vae(const TrainConfig& cfg, const Dataset& ds, const std::string& out_dir = "");
TrainResult train_lds_em(const TrainConfig& cfg, const Dataset& ds, const std::string& out_dir = "");
// Continues from s.iteration to s.cfg.iterations. The random stream restarts
// from (seed, iteration), so a resumed run differs from an uninterrupted one.
TrainResult resume(TrainState s, const Dataset& ds, const std::string& out_dir = "");

// Plain-VAE evidence bound for one observation at fixed noise,
//   log p(y|x) + log N(x|0, I) − log N(x|m, V),  x = m + √V·ε,
// with gradients on (m, V); decoder gradients are added to grad_theta.
struct VaeEval {
    double value = 0.0;
    std::vector<double> d_mean, d_var;
};
VaeEval vae_elbo(const nnet::Mlp& decoder, const Row& y, const std::vector<double>& mean,
                 const std::vector<double>& var, const std::vector<double>& eps, std::vector<double>* grad_theta);

// τ-ahead mean absolute error: forecasts[n][t] predicts row t + τ
// of sequence n from rows 0..t, t = 0..T−τ−1.
double tau_mae(const std::vector<Rows>& seqs, const std::vector<Rows>& forecasts, int tau);

// Forecasts of every sequence under the trained state (sequence models only).
// The forecast is E[y_{t+τ} | y_{1:t}]: the filtered latent is propagated τ
// steps through the generative dynamics and decoder means are averaged over
// `samples` draws (exact for the linear LDS-EM decoder; samples = 0 decodes
// the propagated mean).
std::vector<Rows> forecast(const TrainState& s, const std::vector<Rows>& seqs, int tau, int samples = 0,
                           std::uint64_t seed = 0);

// VB-EM bound of the observation GMM: Σ_n log Σ_k exp E_q[log π_k N(y_n|μ_k, Λ_k⁻¹)] − KL.
double vb_gmm_bound(const PgmPosterior& q, const PgmPosterior& prior, const Rows& y);

struct PcaBasis {
    std::vector<double> mean;
    std::vector<std::vector<double>> components;  // leading first, unit norm
};
PcaBasis pca(const Rows& rows, int n_components);

// Writes samples.csv, data.csv, curves.csv (and pca.csv when D > 2) into
// out_dir. Throws ContractError when a file cannot be written.
void dump_plot_data(const TrainState& s, const Dataset& ds, const std::vector<MetricsRow>& curves,
                    const std::string& out_dir, int n_samples, std::uint64_t seed);

}  // namespace san
