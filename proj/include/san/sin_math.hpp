#pragma once

// Scalar-generic kernels shared by the inference networks and the priors.
//
// Flat layouts (tri = d(d+1)/2, Cholesky factors packed row-wise with the
// diagonal stored as its log):
//   mixture: [logits K][means K*d][covariance factors K*tri]
//   lds:     [A d*d row-major][Q factor tri][mu0 d][Sigma0 factor tri]

#include <vector>

#include "san/linalg.hpp"

namespace san {

inline int mixture_size(int k, int d) { return k + k * d + k * tri_size(d); }
inline int lds_size(int d) { return d * d + 2 * tri_size(d) + d; }

template <class S>
struct Mixture {
    Vec<S> log_w;  // normalized log weights
    std::vector<Vec<S>> mu;
    std::vector<Mat<S>> chol;  // covariance factors
};

template <class S>
Vec<S> log_softmax(const Vec<S>& logits) {
    const S lse = log_sum_exp(logits);
    Vec<S> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

template <class S>
Mixture<S> unpack_mixture(const S* p, int k, int d) {
    Mixture<S> m;
    m.log_w = log_softmax(Vec<S>(p, p + k));
    const S* mp = p + k;
    for (int c = 0; c < k; ++c) m.mu.emplace_back(mp + c * d, mp + (c + 1) * d);
    const S* cp = p + k + k * d;
    for (int c = 0; c < k; ++c) m.chol.push_back(unpack_chol(cp + c * tri_size(d), d));
    return m;
}

// Mixture with covariances already factorized; used for both the inference
// network's PGM factor and the latent GMM prior.
template <class S>
S mixture_log_density(const Mixture<S>& m, const Vec<S>& x, Vec<double>* resp = nullptr) {
    const std::size_t k = m.mu.size();
    Vec<S> terms(k);
    for (std::size_t c = 0; c < k; ++c) terms[c] = m.log_w[c] + gaussian_logpdf_chol(x, m.mu[c], m.chol[c]);
    const S lse = log_sum_exp(terms);
    if (resp) {
        resp->resize(k);
        for (std::size_t c = 0; c < k; ++c) (*resp)[c] = std::exp(value(terms[c]) - value(lse));
    }
    return lse;
}

// log Σ_k π̄_k N(m | μ̄_k, diag(V) + Σ̄_k); optional responsibilities.
template <class S>
S gmm_log_z_datum(const Mixture<S>& f, const Vec<S>& m, const Vec<S>& v, Vec<double>* resp = nullptr) {
    const std::size_t k = f.mu.size();
    Vec<S> terms(k);
    for (std::size_t c = 0; c < k; ++c) {
        Mat<S> s = outer_self(f.chol[c]);
        for (std::size_t i = 0; i < v.size(); ++i) s(static_cast<int>(i), static_cast<int>(i)) += v[i];
        terms[c] = f.log_w[c] + gaussian_logpdf_chol(m, f.mu[c], cholesky(s, "V + Sigma_bar"));
    }
    const S lse = log_sum_exp(terms);
    if (resp) {
        resp->resize(k);
        for (std::size_t c = 0; c < k; ++c) (*resp)[c] = std::exp(value(terms[c]) - value(lse));
    }
    return lse;
}

// Gaussian conditional of x given component c: precision V⁻¹ + Σ̄⁻¹.
// Computed as mean = m + V S⁻¹ (μ̄ − m), cov = sym(V S⁻¹ Σ̄), S = V + Σ̄, which
// stays well conditioned when either factor is nearly flat or nearly a point.
template <class S>
struct GaussCond {
    Vec<S> mean;
    Mat<S> chol;
};

template <class S>
GaussCond<S> diag_gauss_product(const Vec<S>& m, const Vec<S>& v, const Vec<S>& mu, const Mat<S>& sigma) {
    const int d = static_cast<int>(m.size());
    Mat<S> s = sigma;
    for (int i = 0; i < d; ++i) s(i, i) += v[static_cast<std::size_t>(i)];
    const Mat<S> ls = cholesky(s, "V + Sigma_bar");
    const Vec<S> w = chol_solve(ls, mu - m);
    const Mat<S> y = chol_solve(ls, sigma);
    GaussCond<S> out;
    out.mean = m;
    Mat<S> cov(d, d);
    for (int i = 0; i < d; ++i) {
        out.mean[static_cast<std::size_t>(i)] += v[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(i)];
        for (int j = 0; j < d; ++j) cov(i, j) = v[static_cast<std::size_t>(i)] * y(i, j);
    }
    out.chol = cholesky(symmetrize(cov), "conditional covariance");
    return out;
}

template <class S>
Vec<S> gmm_conditional_sample(const Mixture<S>& f, int c, const Vec<S>& m, const Vec<S>& v, const Vec<double>& eps,
                              GaussCond<S>* cond_out = nullptr) {
    GaussCond<S> cond = diag_gauss_product(m, v, f.mu[static_cast<std::size_t>(c)], outer_self(f.chol[static_cast<std::size_t>(c)]));
    Vec<S> x = cond.mean;
    const int d = static_cast<int>(m.size());
    for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) x[static_cast<std::size_t>(i)] += cond.chol(i, j) * eps[static_cast<std::size_t>(j)];
    if (cond_out) *cond_out = std::move(cond);
    return x;
}

// Multivariate Student's t with scale LLᵀ and dof γ.
template <class S>
S student_t_logpdf_chol(const Vec<S>& x, const Vec<S>& mu, const Mat<S>& l, double dof) {
    using std::log;
    const double d = static_cast<double>(x.size());
    const Vec<S> z = forward_solve(l, x - mu);
    const S delta = dot(z, z);
    return std::lgamma(0.5 * (dof + d)) - std::lgamma(0.5 * dof) - 0.5 * d * std::log(dof * 3.14159265358979323846) -
           chol_logdet(l) * 0.5 - log(delta / dof + 1.0) * (0.5 * (dof + d));
}

template <class S>
S tmm_log_density(const Mixture<S>& m, double dof, const Vec<S>& x, Vec<double>* resp = nullptr) {
    const std::size_t k = m.mu.size();
    Vec<S> terms(k);
    for (std::size_t c = 0; c < k; ++c) terms[c] = m.log_w[c] + student_t_logpdf_chol(x, m.mu[c], m.chol[c], dof);
    const S lse = log_sum_exp(terms);
    if (resp) {
        resp->resize(k);
        for (std::size_t c = 0; c < k; ++c) (*resp)[c] = std::exp(value(terms[c]) - value(lse));
    }
    return lse;
}

template <class S>
struct LdsParams {
    Mat<S> A;
    Mat<S> Q;
    Mat<S> q_chol;
    Vec<S> mu0;
    Mat<S> sigma0;
};

template <class S>
LdsParams<S> unpack_lds(const S* p, int d) {
    LdsParams<S> out;
    out.A = Mat<S>(d, d);
    for (int i = 0; i < d * d; ++i) out.A.a[static_cast<std::size_t>(i)] = p[i];
    p += d * d;
    out.q_chol = unpack_chol(p, d);
    out.Q = outer_self(out.q_chol);
    p += tri_size(d);
    out.mu0 = Vec<S>(p, p + d);
    p += d;
    out.sigma0 = outer_self(unpack_chol(p, d));
    return out;
}

// log N(x_{1:T}) under x_0 ~ N(μ0, Σ0) (marginalized), x_t = A x_{t−1} + w_t.
template <class S>
S lds_log_density(const LdsParams<S>& p, const std::vector<Vec<S>>& x) {
    S acc(0.0);
    const Mat<S> p1 = sandwich(p.A, p.sigma0) + p.Q;
    acc += gaussian_logpdf_chol(x[0], matvec(p.A, p.mu0), cholesky(symmetrize(p1), "initial covariance"));
    for (std::size_t t = 1; t < x.size(); ++t) acc += gaussian_logpdf_chol(x[t], matvec(p.A, x[t - 1]), p.q_chol);
    return acc;
}

template <class S>
struct FilterStep {
    Vec<S> pred_mean;  // a_t
    Mat<S> pred_cov;   // P_t
    Vec<S> filt_mean;  // f_t
    Mat<S> filt_cov;   // F_t
};

// Kalman filter over pseudo-observations m_t with noise diag(V_t) on x_t.
// Returns log ∫ Π N(x_t | m_t, V_t) LDS(x_{0:T}) dx.
template <class S>
S lds_filter(const LdsParams<S>& p, const std::vector<Vec<S>>& m, const std::vector<Vec<S>>& v,
             std::vector<FilterStep<S>>* steps = nullptr) {
    S log_z(0.0);
    Vec<S> a = matvec(p.A, p.mu0);
    Mat<S> pc = symmetrize(sandwich(p.A, p.sigma0) + p.Q);
    if (steps) steps->clear();
    for (std::size_t t = 0; t < m.size(); ++t) {
        const GaussCond<S> post = diag_gauss_product(m[t], v[t], a, pc);
        Mat<S> s = pc;
        for (std::size_t i = 0; i < v[t].size(); ++i) s(static_cast<int>(i), static_cast<int>(i)) += v[t][i];
        log_z += gaussian_logpdf_chol(m[t], a, cholesky(s, "innovation covariance"));
        FilterStep<S> st{a, pc, post.mean, outer_self(post.chol)};
        a = matvec(p.A, st.filt_mean);
        pc = symmetrize(sandwich(p.A, st.filt_cov) + p.Q);
        if (steps) steps->push_back(std::move(st));
    }
    return log_z;
}

// Backward sampling from the filtered chain; eps is T x d standard normal.
template <class S>
std::vector<Vec<S>> lds_backward_sample(const LdsParams<S>& p, const std::vector<FilterStep<S>>& steps,
                                        const std::vector<Vec<double>>& eps) {
    const std::size_t n = steps.size();
    const int d = p.A.rows;
    std::vector<Vec<S>> x(n);
    auto draw = [&](const Vec<S>& mean, const Mat<S>& cov, const Vec<double>& e) {
        const Mat<S> l = cholesky(symmetrize(cov), "smoothing covariance");
        Vec<S> out = mean;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j <= i; ++j) out[static_cast<std::size_t>(i)] += l(i, j) * e[static_cast<std::size_t>(j)];
        return out;
    };
    x[n - 1] = draw(steps[n - 1].filt_mean, steps[n - 1].filt_cov, eps[n - 1]);
    for (std::size_t t = n - 1; t-- > 0;) {
        const FilterStep<S>& st = steps[t];
        const Mat<S>& pnext = steps[t + 1].pred_cov;
        // J = F Aᵀ P⁻¹, so Jᵀ = P⁻¹ A F.
        const Mat<S> jt = chol_solve(cholesky(pnext, "predicted covariance"), matmul(p.A, st.filt_cov));
        const Mat<S> j = transpose(jt);
        const Vec<S> mean = st.filt_mean + matvec(j, x[t + 1] - steps[t + 1].pred_mean);
        const Mat<S> cov = st.filt_cov - matmul(j, matmul(p.A, st.filt_cov));
        x[t] = draw(mean, cov, eps[t]);
    }
    return x;
}

}  // namespace san
