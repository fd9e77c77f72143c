#pragma once

// Single-sample estimates of the structured-inference bound
//   L = E_q[log p(y|x) − log N(x|m,V) + log p(x|θ_PGM) − log q_PGM(x|φ_PGM) + log Z(φ)]
// and its gradients with respect to θ_NN, θ_PGM and φ = {encoder, φ_PGM}.
//
// Per-datum terms are scaled by n_total / batch_size. For mixture priors a
// unit is one observation; for the LDS prior a unit is one sequence.

#include <vector>

#include "san/models.hpp"
#include "san/sin.hpp"

namespace san {

struct BoundEstimate {
    double total = 0.0;
    double decoder_term = 0.0;
    double dnn_entropy_term = 0.0;
    double prior_term = 0.0;
    double pgm_factor_term = 0.0;
    double log_z_term = 0.0;
};

// Noise behind one draw: component indicators (mixtures) and standard normal
// variates, one entry per unit. Empty members are drawn on demand.
struct SinNoise {
    std::vector<int> z;
    std::vector<std::vector<Vec<double>>> eps;  // unit -> rows -> d
};

struct GradBundle {
    std::vector<double> grad_theta_nn;
    std::vector<double> grad_theta_pgm;
    std::vector<double> grad_phi;  // encoder parameters, then φ_PGM
    std::vector<SinSample> sample;  // one per unit
    BoundEstimate bound;
};

struct GradientOptions {
    int num_samples = 1;
    bool compute_gradients = true;
};

// Mixture priors: batch rows are independent observations.
BoundEstimate bound_estimate(const GenerativeModel& model, const SinState& sin, const Rows& batch, Rng& rng,
                             std::size_t n_total);
GradBundle san_gradients(const GenerativeModel& model, const SinState& sin, const Rows& batch, Rng& rng,
                         std::size_t n_total, const GradientOptions& opt = {});

// LDS prior: each batch entry is a sequence.
BoundEstimate bound_estimate(const GenerativeModel& model, const SinState& sin, const std::vector<Rows>& batch,
                             Rng& rng, std::size_t n_total);
GradBundle san_gradients(const GenerativeModel& model, const SinState& sin, const std::vector<Rows>& batch, Rng& rng,
                         std::size_t n_total, const GradientOptions& opt = {});

// Deterministic evaluation with caller-fixed noise (common random numbers).
// Mixture batches are passed as one-row units.
GradBundle san_gradients_fixed(const GenerativeModel& model, const SinState& sin, const std::vector<Rows>& units,
                               const SinNoise& noise, std::size_t n_total, bool compute_gradients = true);

// Draws the noise san_gradients would use for these units.
SinNoise draw_noise(const SinState& sin, const std::vector<Rows>& units, Rng& rng);

std::vector<Rows> as_units(const Rows& rows);

}  // namespace san
