#pragma once

#include <cstddef>
#include <vector>

#include "san/rng.hpp"

namespace san::nnet {

enum class Act { Tanh, Identity, Softplus };

struct LayerSpec {
    int in = 0;
    int out = 0;
    Act act = Act::Identity;
    std::size_t w_off = 0;  // row-major out x in
    std::size_t b_off = 0;
};

class Mlp {
public:
    Mlp() = default;
    Mlp(int input, const std::vector<int>& hidden, int output, Act hidden_act = Act::Tanh,
        Act output_act = Act::Identity);

    // He-style init: weights N(0, 2/fan_in), biases 0.
    void init(Rng& rng);

    int input_dim() const { return input_; }
    int output_dim() const { return output_; }
    std::size_t num_params() const { return params.size(); }
    const std::vector<LayerSpec>& layers() const { return layers_; }

    std::vector<double> params;

private:
    int input_ = 0;
    int output_ = 0;
    std::vector<LayerSpec> layers_;
};

// Primal values recorded by forward: acts[0] is the input, acts[l + 1] the
// output of layer l; pre[l] its pre-activation.
struct GradTape {
    std::vector<std::vector<double>> acts;
    std::vector<std::vector<double>> pre;
    std::size_t num_params = 0;
};

std::vector<double> forward(const Mlp& net, const std::vector<double>& input, GradTape* tape = nullptr);

// Accumulates parameter gradients into grad_params (resized if empty) and
// returns the gradient with respect to the input.
std::vector<double> backward(const Mlp& net, const GradTape& tape, const std::vector<double>& upstream,
                             std::vector<double>& grad_params);

inline constexpr double kVarFloor = 1e-6;
inline constexpr double kVarCeil = 1e6;

double softplus(double x);
double sigmoid(double x);

// Splits a 2d-wide output into mean and variance = softplus(raw) + floor,
// clamped to [floor, ceil].
struct GaussianOut {
    std::vector<double> mean;
    std::vector<double> var;
};
GaussianOut gaussian_head(const std::vector<double>& raw);
// Gradient on the raw 2d output given gradients on mean and variance.
std::vector<double> gaussian_head_backward(const std::vector<double>& raw, const std::vector<double>& d_mean,
                                           const std::vector<double>& d_var);

struct GaussianForward {
    std::vector<double> mean;
    std::vector<double> var;
    std::vector<double> raw;
    GradTape tape;
};
GaussianForward forward_gaussian(const Mlp& net, const std::vector<double>& input);
std::vector<double> backward_gaussian(const Mlp& net, const GaussianForward& fwd, const std::vector<double>& d_mean,
                                      const std::vector<double>& d_var, std::vector<double>& grad_params);

struct ReparamDraw {
    std::vector<double> x;
    std::vector<double> eps;
};
ReparamDraw reparam_sample(const std::vector<double>& mean, const std::vector<double>& var, Rng& rng);
std::vector<double> reparam_apply(const std::vector<double>& mean, const std::vector<double>& var,
                                  const std::vector<double>& eps);

}  // namespace san::nnet
