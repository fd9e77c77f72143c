#include "san/gradients.hpp"

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

void check_finite(double v, const char* term) {
    if (!std::isfinite(v)) throw NumericalError(term, "non-finite bound term");
}

void check_compat(const GenerativeModel& model, const SinState& sin) {
    require(model.latent_dim == sin.latent_dim, "gradients: model and inference network latent dims differ");
    const bool seq_model = model.prior == PriorKind::Lds;
    require(seq_model == (sin.structure == Structure::Lds), "gradients: prior and inference structure disagree");
}

// One pass over all units on a single tape. noise entries missing on entry
// are drawn from rng.
GradBundle evaluate(const GenerativeModel& model, const SinState& sin, const std::vector<Rows>& units,
                    SinNoise& noise, Rng* rng, std::size_t n_total, bool want_grad) {
    check_compat(model, sin);
    require(!units.empty(), "gradients: batch must be nonempty");
    require(n_total >= units.size(), "gradients: n_total must be at least the batch size");
    const int d = sin.latent_dim;
    const bool seq = sin.structure == Structure::Lds;
    const double scale = static_cast<double>(n_total) / static_cast<double>(units.size());
    const bool draw_z = !seq && noise.z.size() != units.size();
    const bool draw_eps = noise.eps.size() != units.size();
    require(rng || (!draw_z && !draw_eps), "gradients: noise incomplete and no random stream given");
    if (draw_z) noise.z.assign(units.size(), 0);
    if (draw_eps) noise.eps.assign(units.size(), {});

    ad::Tape tape;
    ad::ScopedTape scope(tape);
    const std::vector<Var> phi = leaves(tape, sin.phi_pgm);
    const std::vector<Var> theta = leaves(tape, model.theta_pgm);

    Mixture<Var> mix_phi;
    LdsParams<Var> lds_phi, lds_theta;
    if (seq) {
        lds_phi = unpack_lds(phi.data(), d);
        lds_theta = unpack_lds(theta.data(), d);
    } else {
        mix_phi = unpack_mixture(phi.data(), sin.components, d);
    }

    GradBundle out;
    out.grad_theta_nn.assign(model.decoder.num_params(), 0.0);
    BoundEstimate& b = out.bound;
    Var objective(0.0);

    struct UnitRecord {
        std::vector<nnet::GaussianForward> fwd;
        std::vector<Vec<Var>> m, v;
    };
    std::vector<UnitRecord> records(units.size());

    for (std::size_t u = 0; u < units.size(); ++u) {
        const Rows& rows = units[u];
        require(!rows.empty(), "gradients: empty unit");
        require(seq || rows.size() == 1, "gradients: mixture units hold one observation");
        UnitRecord& rec = records[u];
        for (const Row& y : rows) {
            rec.fwd.push_back(nnet::forward_gaussian(sin.encoder, y));
            for (std::size_t i = 0; i < rec.fwd.back().mean.size(); ++i)
                if (!std::isfinite(rec.fwd.back().mean[i]) || !std::isfinite(rec.fwd.back().var[i]))
                    throw NumericalError("dnn_entropy", "non-finite recognition network output");
            rec.m.push_back(leaves(tape, rec.fwd.back().mean));
            rec.v.push_back(leaves(tape, rec.fwd.back().var));
        }
        auto ensure_eps = [&] {
            if (draw_eps)
                for (std::size_t t = 0; t < rows.size(); ++t) noise.eps[u].push_back(normal_vec(d, *rng));
            require(noise.eps[u].size() == rows.size(), "gradients: noise shape mismatch");
        };

        Var log_z, ent(0.0), prior, pgmf;
        std::vector<Vec<Var>> x;
        SinSample smp;
        if (seq) {
            ensure_eps();
            std::vector<FilterStep<Var>> steps;
            log_z = lds_filter(lds_phi, rec.m, rec.v, &steps);
            x = lds_backward_sample(lds_phi, steps, noise.eps[u]);
            prior = lds_log_density(lds_theta, x);
            pgmf = -lds_log_density(lds_phi, x);
        } else {
            Vec<double> resp;
            log_z = gmm_log_z_datum(mix_phi, rec.m[0], rec.v[0], &resp);
            if (draw_z) noise.z[u] = draw_index(resp, *rng);
            const int z = noise.z[u];
            require(z >= 0 && z < sin.components, "gradients: component indicator out of range");
            ensure_eps();
            x.push_back(gmm_conditional_sample(mix_phi, z, rec.m[0], rec.v[0], noise.eps[u][0]));
            prior = mixture_prior_log_density(model.prior, theta.data(), model.components, d, model.dof, x[0]);
            pgmf = -mixture_log_density(mix_phi, x[0]);
            smp.z_star.push_back(z);
        }
        for (std::size_t t = 0; t < rows.size(); ++t) ent -= gaussian_logpdf_diag(x[t], rec.m[t], rec.v[t]);

        double dec = 0.0;
        Var pathwise(0.0);
        for (std::size_t t = 0; t < rows.size(); ++t) {
            const Vec<double> xv = values(x[t]);
            const DecodeEval de = decode_loglik(model.decoder, xv, rows[t], want_grad ? &out.grad_theta_nn : nullptr);
            dec += de.value;
            // Decoder enters through x*: a linear term with its (constant) slope.
            if (want_grad)
                for (int i = 0; i < d; ++i) pathwise += x[t][static_cast<std::size_t>(i)] * de.grad_x[static_cast<std::size_t>(i)];
            smp.x_star.push_back(xv);
        }
        smp.eps = noise.eps[u];
        smp.log_z = log_z.v;
        out.sample.push_back(std::move(smp));

        b.decoder_term += scale * dec;
        b.dnn_entropy_term += scale * ent.v;
        b.prior_term += scale * prior.v;
        b.pgm_factor_term += scale * pgmf.v;
        b.log_z_term += scale * log_z.v;
        if (want_grad) objective += (log_z + ent + prior + pgmf + pathwise) * scale;
    }
    check_finite(b.decoder_term, "decoder");
    check_finite(b.dnn_entropy_term, "dnn_entropy");
    check_finite(b.prior_term, "prior");
    check_finite(b.pgm_factor_term, "pgm_factor");
    check_finite(b.log_z_term, "logZ");
    b.total = b.decoder_term + b.dnn_entropy_term + b.prior_term + b.pgm_factor_term + b.log_z_term;
    if (!want_grad) return out;

    tape.backward(objective);
    for (double& g : out.grad_theta_nn) g *= scale;
    out.grad_theta_pgm.resize(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) out.grad_theta_pgm[i] = tape.adjoint(theta[i]);
    std::vector<double> enc(sin.encoder.num_params(), 0.0);
    for (std::size_t u = 0; u < units.size(); ++u) {
        const UnitRecord& rec = records[u];
        for (std::size_t t = 0; t < rec.fwd.size(); ++t) {
            Vec<double> dm(static_cast<std::size_t>(d)), dv(static_cast<std::size_t>(d));
            for (int i = 0; i < d; ++i) {
                dm[static_cast<std::size_t>(i)] = tape.adjoint(rec.m[t][static_cast<std::size_t>(i)]);
                dv[static_cast<std::size_t>(i)] = tape.adjoint(rec.v[t][static_cast<std::size_t>(i)]);
            }
            nnet::backward_gaussian(sin.encoder, rec.fwd[t], dm, dv, enc);
        }
    }
    out.grad_phi = std::move(enc);
    for (const Var& p : phi) out.grad_phi.push_back(tape.adjoint(p));
    for (const auto* vec : {&out.grad_phi, &out.grad_theta_pgm, &out.grad_theta_nn})
        for (double g : *vec)
            if (!std::isfinite(g)) throw NumericalError("gradient", "non-finite gradient");
    return out;
}

void accumulate(GradBundle& acc, const GradBundle& g, double w) {
    auto add = [w](std::vector<double>& a, const std::vector<double>& x) {
        if (a.empty()) a.assign(x.size(), 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) a[i] += w * x[i];
    };
    add(acc.grad_theta_nn, g.grad_theta_nn);
    add(acc.grad_theta_pgm, g.grad_theta_pgm);
    add(acc.grad_phi, g.grad_phi);
    acc.bound.total += w * g.bound.total;
    acc.bound.decoder_term += w * g.bound.decoder_term;
    acc.bound.dnn_entropy_term += w * g.bound.dnn_entropy_term;
    acc.bound.prior_term += w * g.bound.prior_term;
    acc.bound.pgm_factor_term += w * g.bound.pgm_factor_term;
    acc.bound.log_z_term += w * g.bound.log_z_term;
    if (acc.sample.empty()) acc.sample = g.sample;
}

GradBundle run(const GenerativeModel& model, const SinState& sin, const std::vector<Rows>& units, Rng& rng,
               std::size_t n_total, const GradientOptions& opt) {
    require(opt.num_samples >= 1, "gradients: num_samples must be positive");
    if (opt.num_samples == 1) {
        SinNoise noise;
        return evaluate(model, sin, units, noise, &rng, n_total, opt.compute_gradients);
    }
    GradBundle acc;
    for (int s = 0; s < opt.num_samples; ++s) {
        SinNoise noise;
        accumulate(acc, evaluate(model, sin, units, noise, &rng, n_total, opt.compute_gradients),
                   1.0 / opt.num_samples);
    }
    return acc;
}

}  // namespace

std::vector<Rows> as_units(const Rows& rows) {
    std::vector<Rows> units;
    units.reserve(rows.size());
    for (const Row& r : rows) units.push_back({r});
    return units;
}

BoundEstimate bound_estimate(const GenerativeModel& model, const SinState& sin, const Rows& batch, Rng& rng,
                             std::size_t n_total) {
    return run(model, sin, as_units(batch), rng, n_total, {1, false}).bound;
}

GradBundle san_gradients(const GenerativeModel& model, const SinState& sin, const Rows& batch, Rng& rng,
                         std::size_t n_total, const GradientOptions& opt) {
    require(sin.structure == Structure::Gmm, "san_gradients: rows batch needs a mixture inference network");
    return run(model, sin, as_units(batch), rng, n_total, opt);
}

BoundEstimate bound_estimate(const GenerativeModel& model, const SinState& sin, const std::vector<Rows>& batch,
                             Rng& rng, std::size_t n_total) {
    return run(model, sin, batch, rng, n_total, {1, false}).bound;
}

GradBundle san_gradients(const GenerativeModel& model, const SinState& sin, const std::vector<Rows>& batch, Rng& rng,
                         std::size_t n_total, const GradientOptions& opt) {
    return run(model, sin, batch, rng, n_total, opt);
}

GradBundle san_gradients_fixed(const GenerativeModel& model, const SinState& sin, const std::vector<Rows>& units,
                               const SinNoise& noise, std::size_t n_total, bool compute_gradients) {
    SinNoise copy = noise;
    return evaluate(model, sin, units, copy, nullptr, n_total, compute_gradients);
}

SinNoise draw_noise(const SinState& sin, const std::vector<Rows>& units, Rng& rng) {
    SinNoise noise;
    const int d = sin.latent_dim;
    for (const Rows& rows : units) {
        if (sin.structure == Structure::Gmm) {
            const GmmLogZ lz = gmm_log_z(sin, rows);
            noise.z.push_back(draw_index(lz.resp[0], rng));
        }
        std::vector<Vec<double>> e;
        for (std::size_t t = 0; t < rows.size(); ++t) e.push_back(normal_vec(d, rng));
        noise.eps.push_back(std::move(e));
    }
    return noise;
}

}  // namespace san
