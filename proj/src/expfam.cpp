#include "san/expfam.hpp"

#include <cmath>
#include <numbers>

#include "san/errors.hpp"
#include "san/special.hpp"

namespace san::expfam {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_layout(const NaturalParamVector& n) {
    if (n.v.size() != natural_size(n.family, n.dim))
        throw ContractError(family_name(n.family) + ": coordinate vector has wrong length");
}

double log_det_spd(const MatrixXd& m) {
    Eigen::LLT<MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw InvalidParameter("log_det: matrix not positive definite");
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

MatrixXd spd_inverse(const MatrixXd& m, const std::string& what) {
    MatrixXd l = chol_jitter(m, what);
    MatrixXd linv = l.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(m.rows(), m.cols()));
    MatrixXd inv = linv.transpose() * linv;
    return 0.5 * (inv + inv.transpose());
}

// Solves Σ_i ψ((ν+1−i)/2) − d·log(ν/2) = c for ν > d − 1. The left side
// increases monotonically from −∞ to 0.
double solve_nu(double c, int d) {
    if (!(c < 0.0)) throw InvalidParameter("normal-wishart mean coordinates outside the domain");
    auto f = [d](double nu) { return special::multi_digamma(0.5 * nu, d) - d * std::log(0.5 * nu); };
    auto df = [d](double nu) {
        double acc = 0.0;
        for (int i = 1; i <= d; ++i) acc += 0.5 * special::trigamma(0.5 * (nu + 1 - i));
        return acc - d / nu;
    };
    double lo = d - 1.0;
    double hi = std::max(static_cast<double>(d), 1.0);
    while (f(hi) < c) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e15) throw NumericalError("nu", "normal-wishart degrees of freedom diverge");
    }
    double nu = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double r = f(nu) - c;
        if (r > 0.0) hi = nu; else lo = nu;
        double next = nu - r / df(nu);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - nu) <= 1e-15 * nu) return next;
        nu = next;
    }
    return nu;
}

}  // namespace

std::string family_name(Family f) {
    switch (f) {
        case Family::Dirichlet:
            return "dirichlet";
        case Family::NormalWishart:
            return "normal-wishart";
        case Family::GaussianDiag:
            return "gaussian-diag";
        case Family::GaussianDense:
            return "gaussian-dense";
    }
    return "unknown";
}

GaussianParam GaussianParam::diag(VectorXd mean, VectorXd var) {
    GaussianParam g;
    g.mean = std::move(mean);
    g.var = std::move(var);
    g.dense = false;
    return g;
}

GaussianParam GaussianParam::full(VectorXd mean, const MatrixXd& cov) {
    GaussianParam g;
    g.mean = std::move(mean);
    g.dense = true;
    g.chol = chol_jitter(cov, "gaussian covariance");
    return g;
}

MatrixXd GaussianParam::cov() const {
    if (dense) return chol * chol.transpose();
    return var.asDiagonal();
}

int vech_size(int d) { return d * (d + 1) / 2; }

VectorXd vech(const MatrixXd& m) {
    const int d = static_cast<int>(m.rows());
    VectorXd v(vech_size(d));
    int k = 0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) v(k++) = m(i, j);
    return v;
}

VectorXd vech2(const MatrixXd& m) {
    const int d = static_cast<int>(m.rows());
    VectorXd v(vech_size(d));
    int k = 0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) v(k++) = (i == j) ? m(i, j) : 2.0 * m(i, j);
    return v;
}

MatrixXd unvech(const VectorXd& v, int d) {
    MatrixXd m(d, d);
    int k = 0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) {
            m(i, j) = v(k);
            m(j, i) = v(k);
            ++k;
        }
    return m;
}

MatrixXd unvech2(const VectorXd& v, int d) {
    MatrixXd m(d, d);
    int k = 0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) {
            const double x = (i == j) ? v(k) : 0.5 * v(k);
            m(i, j) = x;
            m(j, i) = x;
            ++k;
        }
    return m;
}

int natural_size(Family f, int dim) {
    switch (f) {
        case Family::Dirichlet:
            return dim;
        case Family::GaussianDiag:
            return 2 * dim;
        case Family::GaussianDense:
            return dim + vech_size(dim);
        case Family::NormalWishart:
            return dim + 2 + vech_size(dim);
    }
    return 0;
}

bool is_spd(const MatrixXd& m) {
    if (m.rows() != m.cols() || !m.allFinite()) return false;
    Eigen::LLT<MatrixXd> llt(m);
    return llt.info() == Eigen::Success;
}

MatrixXd chol_jitter(const MatrixXd& m, const std::string& what) {
    if (m.rows() != m.cols()) throw ContractError(what + ": matrix not square");
    if (!m.allFinite()) throw InvalidParameter(what + ": non-finite matrix");
    Eigen::LLT<MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    const double d = static_cast<double>(m.rows());
    double jitter = 1e-8 * std::abs(m.trace()) / d;
    if (!(jitter > 0.0)) jitter = 1e-8;
    for (int attempt = 0; attempt < 3; ++attempt, jitter *= 10.0) {
        MatrixXd mj = m;
        mj.diagonal().array() += jitter;
        llt.compute(mj);
        if (llt.info() == Eigen::Success) return llt.matrixL();
    }
    throw InvalidParameter(what + ": matrix is not positive definite");
}

NaturalParamVector to_natural(const DirichletParam& p) {
    if ((p.alpha.array() <= 0.0).any()) throw InvalidParameter("dirichlet: concentrations must be positive");
    return {Family::Dirichlet, static_cast<int>(p.alpha.size()), Coords::Natural, p.alpha.array() - 1.0};
}

NaturalParamVector to_natural(const NormalWishartParam& p) {
    const int d = static_cast<int>(p.m.size());
    if (!(p.kappa > 0.0)) throw InvalidParameter("normal-wishart: kappa must be positive");
    if (!(p.nu > d - 1.0)) throw InvalidParameter("normal-wishart: nu must exceed d - 1");
    if (!is_spd(p.W)) throw InvalidParameter("normal-wishart: W must be SPD");
    NaturalParamVector n{Family::NormalWishart, d, Coords::Natural, VectorXd(natural_size(Family::NormalWishart, d))};
    n.v.head(d) = p.kappa * p.m;
    n.v(d) = p.kappa;
    n.v.segment(d + 1, vech_size(d)) = vech2(spd_inverse(p.W, "normal-wishart W") + p.kappa * p.m * p.m.transpose());
    n.v(d + 1 + vech_size(d)) = p.nu - d;
    return n;
}

NaturalParamVector to_natural(const GaussianParam& p) {
    const int d = static_cast<int>(p.mean.size());
    if (!p.dense) {
        if ((p.var.array() <= 0.0).any()) throw InvalidParameter("gaussian: variances must be positive");
        NaturalParamVector n{Family::GaussianDiag, d, Coords::Natural, VectorXd(2 * d)};
        n.v.head(d) = p.mean.array() / p.var.array();
        n.v.tail(d) = -0.5 / p.var.array();
        return n;
    }
    const MatrixXd prec = spd_inverse(p.cov(), "gaussian covariance");
    NaturalParamVector n{Family::GaussianDense, d, Coords::Natural, VectorXd(natural_size(Family::GaussianDense, d))};
    n.v.head(d) = prec * p.mean;
    n.v.tail(vech_size(d)) = vech2(-0.5 * prec);
    return n;
}

DirichletParam as_dirichlet(const NaturalParamVector& n) {
    if (n.family != Family::Dirichlet || n.coords != Coords::Natural) throw ContractError("as_dirichlet: wrong family");
    check_layout(n);
    DirichletParam p{n.v.array() + 1.0};
    if ((p.alpha.array() <= 0.0).any() || !p.alpha.allFinite())
        throw InvalidParameter("dirichlet: concentrations must be positive");
    return p;
}

NormalWishartParam as_normal_wishart(const NaturalParamVector& n) {
    if (n.family != Family::NormalWishart || n.coords != Coords::Natural)
        throw ContractError("as_normal_wishart: wrong family");
    check_layout(n);
    const int d = n.dim;
    NormalWishartParam p;
    p.kappa = n.v(d);
    if (!(p.kappa > 0.0)) throw InvalidParameter("normal-wishart: kappa must be positive");
    p.m = n.v.head(d) / p.kappa;
    p.nu = n.v(d + 1 + vech_size(d)) + d;
    if (!(p.nu > d - 1.0)) throw InvalidParameter("normal-wishart: nu must exceed d - 1");
    const MatrixXd winv = unvech2(n.v.segment(d + 1, vech_size(d)), d) - p.kappa * p.m * p.m.transpose();
    if (!is_spd(winv)) throw InvalidParameter("normal-wishart: W must be SPD");
    p.W = spd_inverse(winv, "normal-wishart W");
    return p;
}

GaussianParam as_gaussian(const NaturalParamVector& n) {
    if (n.coords != Coords::Natural) throw ContractError("as_gaussian: expects natural coordinates");
    check_layout(n);
    const int d = n.dim;
    if (n.family == Family::GaussianDiag) {
        const VectorXd e2 = n.v.tail(d);
        if ((e2.array() >= 0.0).any()) throw InvalidParameter("gaussian: precision must be positive");
        VectorXd var = -0.5 / e2.array();
        VectorXd mean = n.v.head(d).array() * var.array();
        return GaussianParam::diag(mean, var);
    }
    if (n.family != Family::GaussianDense) throw ContractError("as_gaussian: wrong family");
    const MatrixXd prec = -2.0 * unvech2(n.v.tail(vech_size(d)), d);
    if (!is_spd(prec)) throw InvalidParameter("gaussian: precision must be SPD");
    const MatrixXd cov = spd_inverse(prec, "gaussian precision");
    return GaussianParam::full(cov * n.v.head(d), cov);
}

void validate(const NaturalParamVector& n) {
    if (!n.v.allFinite()) throw InvalidParameter(family_name(n.family) + ": non-finite coordinates");
    switch (n.family) {
        case Family::Dirichlet:
            as_dirichlet(n);
            return;
        case Family::NormalWishart:
            as_normal_wishart(n);
            return;
        default:
            as_gaussian(n);
            return;
    }
}

bool in_domain(const NaturalParamVector& n) {
    try {
        validate(n);
        return true;
    } catch (const InvalidParameter&) {
        return false;
    }
}

NwExpectations nw_expectations(const NormalWishartParam& p) {
    const int d = static_cast<int>(p.m.size());
    NwExpectations e;
    e.lambda = p.nu * p.W;
    e.lambda_mu = e.lambda * p.m;
    e.mu_lambda_mu = d / p.kappa + p.m.dot(e.lambda_mu);
    e.log_det = special::multi_digamma(0.5 * p.nu, d) + d * std::log(2.0) + log_det_spd(p.W);
    return e;
}

NaturalParamVector to_mean(const NaturalParamVector& n) {
    if (n.coords != Coords::Natural) throw ContractError("to_mean: expects natural coordinates");
    check_layout(n);
    validate(n);
    const int d = n.dim;
    NaturalParamVector out{n.family, d, Coords::Mean, VectorXd(n.v.size())};
    switch (n.family) {
        case Family::Dirichlet: {
            const VectorXd alpha = n.v.array() + 1.0;
            const double psi0 = special::digamma(alpha.sum());
            for (int k = 0; k < d; ++k) out.v(k) = special::digamma(alpha(k)) - psi0;
            break;
        }
        case Family::NormalWishart: {
            const NormalWishartParam p = as_normal_wishart(n);
            const NwExpectations e = nw_expectations(p);
            out.v.head(d) = e.lambda_mu;
            out.v(d) = -0.5 * e.mu_lambda_mu;
            out.v.segment(d + 1, vech_size(d)) = vech(-0.5 * e.lambda);
            out.v(d + 1 + vech_size(d)) = 0.5 * e.log_det;
            break;
        }
        case Family::GaussianDiag: {
            const GaussianParam g = as_gaussian(n);
            out.v.head(d) = g.mean;
            out.v.tail(d) = g.var.array() + g.mean.array().square();
            break;
        }
        case Family::GaussianDense: {
            const GaussianParam g = as_gaussian(n);
            out.v.head(d) = g.mean;
            out.v.tail(vech_size(d)) = vech(g.cov() + g.mean * g.mean.transpose());
            break;
        }
    }
    return out;
}

NaturalParamVector from_mean(const NaturalParamVector& mean) {
    if (mean.coords != Coords::Mean) throw ContractError("from_mean: expects mean coordinates");
    check_layout(mean);
    const int d = mean.dim;
    switch (mean.family) {
        case Family::Dirichlet: {
            // Fixed point ψ(α_k) = μ_k + ψ(Σα).
            if ((mean.v.array() >= 0.0).any()) throw InvalidParameter("dirichlet: mean coordinates must be negative");
            VectorXd alpha = VectorXd::Ones(d);
            for (int it = 0; it < 10000; ++it) {
                const double psi0 = special::digamma(alpha.sum());
                VectorXd next(d);
                for (int k = 0; k < d; ++k) next(k) = special::inverse_digamma(mean.v(k) + psi0);
                const double change = (next - alpha).cwiseAbs().maxCoeff() / next.maxCoeff();
                alpha = next;
                if (change < 1e-15) break;
            }
            return to_natural(DirichletParam{alpha});
        }
        case Family::NormalWishart: {
            const MatrixXd p_mat = -2.0 * unvech(mean.v.segment(d + 1, vech_size(d)), d);  // νW
            if (!is_spd(p_mat)) throw InvalidParameter("normal-wishart: mean coordinates outside the domain");
            const VectorXd m = p_mat.llt().solve(mean.v.head(d));
            const double d_over_kappa = -2.0 * mean.v(d) - m.dot(p_mat * m);
            if (!(d_over_kappa > 0.0)) throw InvalidParameter("normal-wishart: mean coordinates outside the domain");
            const double c = 2.0 * mean.v(d + 1 + vech_size(d)) - log_det_spd(p_mat);
            NormalWishartParam p;
            p.m = m;
            p.kappa = d / d_over_kappa;
            p.nu = solve_nu(c, d);
            p.W = p_mat / p.nu;
            return to_natural(p);
        }
        case Family::GaussianDiag: {
            const VectorXd mu = mean.v.head(d);
            const VectorXd var = mean.v.tail(d).array() - mu.array().square();
            return to_natural(GaussianParam::diag(mu, var));
        }
        case Family::GaussianDense: {
            const VectorXd mu = mean.v.head(d);
            const MatrixXd cov = unvech(mean.v.tail(vech_size(d)), d) - mu * mu.transpose();
            if (!is_spd(cov)) throw InvalidParameter("gaussian: mean coordinates outside the domain");
            return to_natural(GaussianParam::full(mu, cov));
        }
    }
    throw ContractError("from_mean: unknown family");
}

double log_partition(const NaturalParamVector& n) {
    if (n.coords != Coords::Natural) throw ContractError("log_partition: expects natural coordinates");
    check_layout(n);
    const int d = n.dim;
    switch (n.family) {
        case Family::Dirichlet: {
            const DirichletParam p = as_dirichlet(n);
            double acc = -special::log_gamma(p.alpha.sum());
            for (int k = 0; k < d; ++k) acc += special::log_gamma(p.alpha(k));
            return acc;
        }
        case Family::NormalWishart: {
            const NormalWishartParam p = as_normal_wishart(n);
            return 0.5 * d * kLog2Pi - 0.5 * d * std::log(p.kappa) + 0.5 * p.nu * log_det_spd(p.W) +
                   0.5 * p.nu * d * std::log(2.0) + special::log_multigamma(0.5 * p.nu, d);
        }
        case Family::GaussianDiag: {
            const GaussianParam g = as_gaussian(n);
            double acc = 0.0;
            for (int i = 0; i < d; ++i)
                acc += 0.5 * g.mean(i) * g.mean(i) / g.var(i) + 0.5 * std::log(g.var(i)) + 0.5 * kLog2Pi;
            return acc;
        }
        case Family::GaussianDense: {
            const GaussianParam g = as_gaussian(n);
            const MatrixXd cov = g.cov();
            return 0.5 * g.mean.dot(cov.llt().solve(g.mean)) + 0.5 * log_det_spd(cov) + 0.5 * d * kLog2Pi;
        }
    }
    throw ContractError("log_partition: unknown family");
}

double kl_divergence(const NaturalParamVector& q, const NaturalParamVector& p) {
    if (q.family != p.family || q.dim != p.dim) throw ContractError("kl_divergence: family or dimension mismatch");
    const NaturalParamVector mq = to_mean(q);
    const double kl = log_partition(p) - log_partition(q) - (p.v - q.v).dot(mq.v);
    return std::max(kl, 0.0);
}

VectorXd sample_dirichlet(const VectorXd& alpha, Rng& rng) {
    VectorXd g(alpha.size());
    for (int k = 0; k < alpha.size(); ++k) {
        std::gamma_distribution<double> gamma(alpha(k), 1.0);
        g(k) = gamma(rng);
    }
    const double total = g.sum();
    if (!(total > 0.0)) {
        // Tiny concentrations can underflow every gamma draw; fall back to a vertex.
        VectorXd e = VectorXd::Zero(alpha.size());
        Eigen::Index arg;
        alpha.maxCoeff(&arg);
        e(arg) = 1.0;
        return e;
    }
    return g / total;
}

NwDraw sample_normal_wishart(const NormalWishartParam& p, Rng& rng) {
    const int d = static_cast<int>(p.m.size());
    // Bartlett: Λ = L A Aᵀ Lᵀ with A lower, A_ii² ~ χ²(ν − i), A_ij ~ N(0,1).
    const MatrixXd l = chol_jitter(p.W, "normal-wishart W");
    MatrixXd a = MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        std::chi_squared_distribution<double> chi(p.nu - i);
        a(i, i) = std::sqrt(chi(rng));
        for (int j = 0; j < i; ++j) a(i, j) = std_normal(rng);
    }
    const MatrixXd la = l * a;
    NwDraw out;
    out.Lambda = la * la.transpose();
    // μ = m + (κΛ)^{-1/2} z using Λ = (LA)(LA)ᵀ: solve (LA)ᵀ u = z / sqrt(κ).
    VectorXd z(d);
    for (int i = 0; i < d; ++i) z(i) = std_normal(rng);
    out.mu = p.m + la.transpose().triangularView<Eigen::Upper>().solve(z / std::sqrt(p.kappa));
    return out;
}

VectorXd sample(const NaturalParamVector& n, Rng& rng) {
    if (n.coords != Coords::Natural) throw ContractError("sample: expects natural coordinates");
    const int d = n.dim;
    switch (n.family) {
        case Family::Dirichlet:
            return sample_dirichlet(as_dirichlet(n).alpha, rng);
        case Family::NormalWishart: {
            const NwDraw draw = sample_normal_wishart(as_normal_wishart(n), rng);
            VectorXd out(d + d * d);
            out.head(d) = draw.mu;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) out(d + i * d + j) = draw.Lambda(i, j);
            return out;
        }
        case Family::GaussianDiag: {
            const GaussianParam g = as_gaussian(n);
            VectorXd x(d);
            for (int i = 0; i < d; ++i) x(i) = g.mean(i) + std::sqrt(g.var(i)) * std_normal(rng);
            return x;
        }
        case Family::GaussianDense: {
            const GaussianParam g = as_gaussian(n);
            VectorXd z(d);
            for (int i = 0; i < d; ++i) z(i) = std_normal(rng);
            return g.mean + g.chol * z;
        }
    }
    throw ContractError("sample: unknown family");
}

VectorXd sufficient_stats(Family f, int d, const VectorXd& draw) {
    switch (f) {
        case Family::Dirichlet:
            return draw.array().log();
        case Family::GaussianDiag: {
            VectorXd t(2 * d);
            t.head(d) = draw;
            t.tail(d) = draw.array().square();
            return t;
        }
        case Family::GaussianDense: {
            VectorXd t(natural_size(f, d));
            t.head(d) = draw;
            t.tail(vech_size(d)) = vech(draw * draw.transpose());
            return t;
        }
        case Family::NormalWishart: {
            const VectorXd mu = draw.head(d);
            MatrixXd lam(d, d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) lam(i, j) = draw(d + i * d + j);
            VectorXd t(natural_size(f, d));
            t.head(d) = lam * mu;
            t(d) = -0.5 * mu.dot(lam * mu);
            t.segment(d + 1, vech_size(d)) = vech(-0.5 * lam);
            t(d + 1 + vech_size(d)) = 0.5 * log_det_spd(lam);
            return t;
        }
    }
    throw ContractError("sufficient_stats: unknown family");
}

double log_density(const NaturalParamVector& n, const VectorXd& draw) {
    return n.v.dot(sufficient_stats(n.family, n.dim, draw)) - log_partition(n);
}

}  // namespace san::expfam
