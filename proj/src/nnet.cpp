#include "san/nnet.hpp"

#include <algorithm>
#include <cmath>

#include "san/errors.hpp"
#include "san/kernels.hpp"

namespace san::nnet {

namespace {

double activate(Act a, double x) {
    switch (a) {
        case Act::Tanh:
            return std::tanh(x);
        case Act::Softplus:
            return softplus(x);
        case Act::Identity:
            break;
    }
    return x;
}

double activate_grad(Act a, double pre, double post) {
    switch (a) {
        case Act::Tanh:
            return 1.0 - post * post;
        case Act::Softplus:
            return sigmoid(pre);
        case Act::Identity:
            break;
    }
    return 1.0;
}

}  // namespace

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Mlp::Mlp(int input, const std::vector<int>& hidden, int output, Act hidden_act, Act output_act)
    : input_(input), output_(output) {
    require(input > 0 && output > 0, "mlp: dimensions must be positive");
    std::size_t off = 0;
    int prev = input;
    auto add = [&](int out, Act act) {
        require(out > 0, "mlp: layer width must be positive");
        LayerSpec l{prev, out, act, off, off + static_cast<std::size_t>(prev) * out};
        off = l.b_off + out;
        layers_.push_back(l);
        prev = out;
    };
    for (int h : hidden) add(h, hidden_act);
    add(output, output_act);
    params.assign(off, 0.0);
}

void Mlp::init(Rng& rng) {
    std::fill(params.begin(), params.end(), 0.0);
    for (const LayerSpec& l : layers_) {
        std::normal_distribution<double> n(0.0, std::sqrt(2.0 / l.in));
        for (std::size_t i = 0; i < static_cast<std::size_t>(l.in) * l.out; ++i) params[l.w_off + i] = n(rng);
    }
}

std::vector<double> forward(const Mlp& net, const std::vector<double>& input, GradTape* tape) {
    require(static_cast<int>(input.size()) == net.input_dim(), "mlp forward: input dimension mismatch");
    const auto& k = kernels::active();
    std::vector<double> a = input;
    if (tape) {
        tape->acts.assign(1, input);
        tape->pre.clear();
        tape->num_params = net.num_params();
    }
    for (const LayerSpec& l : net.layers()) {
        std::vector<double> pre(static_cast<std::size_t>(l.out));
        k.gemv(net.params.data() + l.w_off, a.data(), net.params.data() + l.b_off, pre.data(), l.out, l.in);
        std::vector<double> post(pre.size());
        for (std::size_t i = 0; i < pre.size(); ++i) post[i] = activate(l.act, pre[i]);
        if (tape) {
            tape->pre.push_back(pre);
            tape->acts.push_back(post);
        }
        a = std::move(post);
    }
    return a;
}

std::vector<double> backward(const Mlp& net, const GradTape& tape, const std::vector<double>& upstream,
                             std::vector<double>& grad_params) {
    const auto& layers = net.layers();
    if (tape.num_params != net.num_params() || tape.pre.size() != layers.size())
        throw ContractError("mlp backward: tape does not match network");
    require(static_cast<int>(upstream.size()) == net.output_dim(), "mlp backward: upstream dimension mismatch");
    if (grad_params.empty()) grad_params.assign(net.num_params(), 0.0);
    require(grad_params.size() == net.num_params(), "mlp backward: gradient buffer size mismatch");
    const auto& k = kernels::active();
    std::vector<double> g = upstream;
    for (std::size_t li = layers.size(); li-- > 0;) {
        const LayerSpec& l = layers[li];
        const auto& pre = tape.pre[li];
        const auto& post = tape.acts[li + 1];
        const auto& in = tape.acts[li];
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= activate_grad(l.act, pre[i], post[i]);
        k.ger_acc(grad_params.data() + l.w_off, g.data(), in.data(), l.out, l.in);
        k.axpy(1.0, g.data(), grad_params.data() + l.b_off, l.out);
        std::vector<double> gin(static_cast<std::size_t>(l.in), 0.0);
        k.gemv_t_acc(net.params.data() + l.w_off, g.data(), gin.data(), l.out, l.in);
        g = std::move(gin);
    }
    return g;
}

GaussianOut gaussian_head(const std::vector<double>& raw) {
    require(raw.size() % 2 == 0, "gaussian head: output width must be even");
    const std::size_t d = raw.size() / 2;
    GaussianOut out{std::vector<double>(raw.begin(), raw.begin() + d), std::vector<double>(d)};
    for (std::size_t i = 0; i < d; ++i) out.var[i] = std::clamp(softplus(raw[d + i]) + kVarFloor, kVarFloor, kVarCeil);
    return out;
}

std::vector<double> gaussian_head_backward(const std::vector<double>& raw, const std::vector<double>& d_mean,
                                           const std::vector<double>& d_var) {
    const std::size_t d = raw.size() / 2;
    std::vector<double> g(raw.size());
    for (std::size_t i = 0; i < d; ++i) {
        g[i] = d_mean[i];
        const bool clamped = softplus(raw[d + i]) + kVarFloor > kVarCeil;
        g[d + i] = clamped ? 0.0 : d_var[i] * sigmoid(raw[d + i]);
    }
    return g;
}

GaussianForward forward_gaussian(const Mlp& net, const std::vector<double>& input) {
    GaussianForward f;
    f.raw = forward(net, input, &f.tape);
    GaussianOut h = gaussian_head(f.raw);
    f.mean = std::move(h.mean);
    f.var = std::move(h.var);
    return f;
}

std::vector<double> backward_gaussian(const Mlp& net, const GaussianForward& fwd, const std::vector<double>& d_mean,
                                      const std::vector<double>& d_var, std::vector<double>& grad_params) {
    return backward(net, fwd.tape, gaussian_head_backward(fwd.raw, d_mean, d_var), grad_params);
}

ReparamDraw reparam_sample(const std::vector<double>& mean, const std::vector<double>& var, Rng& rng) {
    ReparamDraw r;
    r.eps.resize(mean.size());
    for (double& e : r.eps) e = std_normal(rng);
    r.x = reparam_apply(mean, var, r.eps);
    return r;
}

std::vector<double> reparam_apply(const std::vector<double>& mean, const std::vector<double>& var,
                                  const std::vector<double>& eps) {
    require(mean.size() == var.size() && mean.size() == eps.size(), "reparam: dimension mismatch");
    std::vector<double> x(mean.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = mean[i] + std::sqrt(var[i]) * eps[i];
    return x;
}

}  // namespace san::nnet
