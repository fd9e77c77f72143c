#pragma once

// Exponential families in minimal natural coordinates, base measure 1.
//
// Coordinate layouts (vech = lower triangle, row by row: 00, 10, 11, 20, ...):
//   Dirichlet(K)       T = log π                 η = α − 1
//   GaussianDiag(d)    T = [x, x²]               η = [μ/σ², −1/(2σ²)]
//   GaussianDense(d)   T = [x, vech(xxᵀ)]        η = [Λμ, vech2(−Λ/2)]
//   NormalWishart(d)   T = [Λμ, −μᵀΛμ/2, vech(−Λ/2), log|Λ|/2]
//                      η = [κm, κ, vech2(W⁻¹ + κmmᵀ), ν − d]
// vech2 doubles the off-diagonal entries so that ⟨vech2(M), vech(N)⟩ = tr(MN)
// for symmetric M, N. Mean coordinates use plain vech.

#include <Eigen/Dense>
#include <string>

#include "san/rng.hpp"

namespace san::expfam {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Family { Dirichlet, NormalWishart, GaussianDiag, GaussianDense };
enum class Coords { Natural, Mean };

std::string family_name(Family f);

struct NaturalParamVector {
    Family family = Family::GaussianDiag;
    int dim = 0;
    Coords coords = Coords::Natural;
    VectorXd v;
};

struct DirichletParam {
    VectorXd alpha;
};

struct NormalWishartParam {
    VectorXd m;
    double kappa = 1.0;
    MatrixXd W;
    double nu = 1.0;
};

struct GaussianParam {
    VectorXd mean;
    bool dense = false;
    VectorXd var;   // diag
    MatrixXd chol;  // dense, lower factor of the covariance

    static GaussianParam diag(VectorXd mean, VectorXd var);
    static GaussianParam full(VectorXd mean, const MatrixXd& cov);
    MatrixXd cov() const;
};

int natural_size(Family f, int dim);

int vech_size(int d);
VectorXd vech(const MatrixXd& m);
VectorXd vech2(const MatrixXd& m);
MatrixXd unvech(const VectorXd& v, int d);
MatrixXd unvech2(const VectorXd& v, int d);

// Lower Cholesky factor with diagonal jitter 1e-8·trace/d (tenfold per retry,
// three retries); throws InvalidParameter when it still fails.
MatrixXd chol_jitter(const MatrixXd& m, const std::string& what);
bool is_spd(const MatrixXd& m);

NaturalParamVector to_natural(const DirichletParam& p);
NaturalParamVector to_natural(const NormalWishartParam& p);
NaturalParamVector to_natural(const GaussianParam& p);

DirichletParam as_dirichlet(const NaturalParamVector& n);
NormalWishartParam as_normal_wishart(const NaturalParamVector& n);
GaussianParam as_gaussian(const NaturalParamVector& n);

// Throws InvalidParameter when n is outside the natural domain.
void validate(const NaturalParamVector& n);
bool in_domain(const NaturalParamVector& n);

NaturalParamVector to_mean(const NaturalParamVector& n);
// Inverse of to_mean.
NaturalParamVector from_mean(const NaturalParamVector& mean);

double log_partition(const NaturalParamVector& n);

// KL(q || p); both in natural coordinates, same family and dimension.
double kl_divergence(const NaturalParamVector& q, const NaturalParamVector& p);

// Flat draw: Dirichlet π; Gaussian x; NormalWishart [μ, Λ row-major].
VectorXd sample(const NaturalParamVector& n, Rng& rng);

struct NwDraw {
    VectorXd mu;
    MatrixXd Lambda;
};
NwDraw sample_normal_wishart(const NormalWishartParam& p, Rng& rng);
VectorXd sample_dirichlet(const VectorXd& alpha, Rng& rng);

VectorXd sufficient_stats(Family f, int dim, const VectorXd& draw);
double log_density(const NaturalParamVector& n, const VectorXd& draw);

struct NwExpectations {
    VectorXd lambda_mu;    // E[Λμ]
    double mu_lambda_mu;   // E[μᵀΛμ]
    MatrixXd lambda;       // E[Λ]
    double log_det;        // E[log|Λ|]
};
NwExpectations nw_expectations(const NormalWishartParam& p);

}  // namespace san::expfam
