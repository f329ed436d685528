#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ricefield/rng.hpp"

namespace ricefield {

// latent Poisson counts, one per acquisition
using AugmentedCounts = Eigen::VectorXd;

// Gaussian proposal centered at the full-conditional mode with the Fisher
// information as precision. When fixed_s0 is set the intercept coordinate is
// frozen at mode(0) and the precision acts on the remaining coordinates only.
struct LaplaceProposal {
    Eigen::VectorXd mode;
    Eigen::MatrixXd precision; // (1+d)x(1+d); row/col 0 are zero when fixed_s0
    bool fixed_s0 = false;
    bool converged = true;
    int iterations = 0;
};

// log p(theta | sigma2, N) up to its additive constant:
// (2 sum_i N_i Z_i) theta - (1/(2 sigma2)) sum_i exp(2 Z_i theta)
double poisson_log_conditional(const Eigen::VectorXd& theta, const AugmentedCounts& counts,
                               double sigma2, const Eigen::MatrixXd& z);

// I(theta) = (2/sigma2) sum_i exp(2 Z_i theta) Z_i^T Z_i; equals the negative
// Hessian of the log conditional identically
Eigen::MatrixXd fisher_information(const Eigen::VectorXd& theta, double sigma2,
                                   const Eigen::MatrixXd& z);

struct ScoringOptions {
    double tol = 1e-10;      // gradient norm target
    double step_tol = 1e-9;  // relative Newton-step target (scale-free)
    int max_iter = 100;
    bool fixed_s0 = false;
};

// Fisher scoring ascent of the log conditional with step halving; the
// objective is concave so the iterates increase monotonically. A proposal
// with converged = false carries the last iterate.
LaplaceProposal fisher_scoring(const Eigen::VectorXd& theta0, const AugmentedCounts& counts,
                               double sigma2, const Eigen::MatrixXd& z,
                               const ScoringOptions& opts = {});

// log density of the proposal at theta (Gaussian in the free coordinates)
double laplace_log_density(const LaplaceProposal& prop, const Eigen::VectorXd& theta);

// draw from the proposal
Eigen::VectorXd laplace_sample(const LaplaceProposal& prop, Rng& rng);

// log Hastings ratio for a move theta -> theta_tilde where theta_tilde was
// proposed from prop_fwd and the reverse move would be proposed from
// prop_bwd. Passing the same proposal twice gives the single-scoring ratio;
// distinct proposals add the sqrt(det) correction through the Gaussian
// normalizations.
double hastings_log_ratio(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_tilde,
                          const LaplaceProposal& prop_fwd, const LaplaceProposal& prop_bwd,
                          const AugmentedCounts& counts, double sigma2,
                          const Eigen::MatrixXd& z);

} // namespace ricefield
