#include "ricefield/glm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ricefield {

namespace {

constexpr double kLinpredCap = 350.0; // exp(2*cap) stays finite

Eigen::VectorXd clamp_linpred(const Eigen::MatrixXd& z, const Eigen::VectorXd& theta) {
    return (z * theta).cwiseMin(kLinpredCap);
}

} // namespace

double poisson_log_conditional(const Eigen::VectorXd& theta, const AugmentedCounts& counts,
                               double sigma2, const Eigen::MatrixXd& z) {
    if (z.rows() != counts.size() || z.cols() != theta.size())
        throw std::invalid_argument("poisson_log_conditional: dimension mismatch");
    if (!(sigma2 > 0.0)) throw std::domain_error("poisson_log_conditional: sigma2 must be positive");
    const Eigen::VectorXd lin = z * theta;
    double s = 0.0;
    for (Eigen::Index i = 0; i < lin.size(); ++i) {
        const double l2 = 2.0 * lin(i);
        s += 2.0 * counts(i) * lin(i) - std::exp(std::min(l2, 2.0 * kLinpredCap)) / (2.0 * sigma2);
    }
    return s;
}

Eigen::MatrixXd fisher_information(const Eigen::VectorXd& theta, double sigma2,
                                   const Eigen::MatrixXd& z) {
    if (!(sigma2 > 0.0)) throw std::domain_error("fisher_information: sigma2 must be positive");
    const Eigen::VectorXd lin = clamp_linpred(z, theta);
    const Eigen::VectorXd w = (2.0 * lin.array()).exp() * (2.0 / sigma2);
    return z.transpose() * w.asDiagonal() * z;
}

LaplaceProposal fisher_scoring(const Eigen::VectorXd& theta0, const AugmentedCounts& counts,
                               double sigma2, const Eigen::MatrixXd& z,
                               const ScoringOptions& opts) {
    const Eigen::Index p = z.cols();
    if (theta0.size() != p || counts.size() != z.rows())
        throw std::invalid_argument("fisher_scoring: dimension mismatch");
    if (!(opts.tol > 0.0)) throw std::invalid_argument("fisher_scoring: tol must be positive");

    const Eigen::Index lo = opts.fixed_s0 ? 1 : 0;
    const Eigen::Index nfree = p - lo;

    LaplaceProposal out;
    out.mode = theta0;
    out.fixed_s0 = opts.fixed_s0;
    out.converged = false;

    Eigen::VectorXd theta = theta0;
    double obj = poisson_log_conditional(theta, counts, sigma2, z);

    for (int it = 1; it <= opts.max_iter; ++it) {
        out.iterations = it;
        const Eigen::VectorXd lin = clamp_linpred(z, theta);
        const Eigen::VectorXd mu = (2.0 * lin.array()).exp() / sigma2; // Poisson means * 2
        const Eigen::VectorXd grad_full = z.transpose() * (2.0 * counts - mu);
        const Eigen::VectorXd grad = grad_full.segment(lo, nfree);
        if (!grad.allFinite()) break;
        const Eigen::MatrixXd info = fisher_information(theta, sigma2, z).block(lo, lo, nfree, nfree);
        Eigen::LLT<Eigen::MatrixXd> llt(info);
        if (llt.info() != Eigen::Success) break;
        const Eigen::VectorXd dir = llt.solve(grad);
        if (!dir.allFinite()) break;
        // a vanishing gradient only certifies an interior mode if the Newton
        // step has also collapsed; all-zero counts push the mode to -infinity
        // with a tiny gradient but a constant step. The step criterion also
        // covers designs whose b-value scaling puts the gradient's rounding
        // floor above tol.
        const bool step_small = dir.norm() < opts.step_tol * (1.0 + theta.norm());
        if (grad.norm() < opts.tol || step_small) {
            out.converged = dir.norm() < 1e-2 * (1.0 + theta.norm());
            if (out.converged && step_small) theta.segment(lo, nfree) += dir; // final polish
            break;
        }

        // step halving keeps the ascent monotone
        double step = 1.0;
        bool moved = false;
        for (int h = 0; h < 20; ++h) {
            Eigen::VectorXd cand = theta;
            cand.segment(lo, nfree) += step * dir;
            const double cobj = poisson_log_conditional(cand, counts, sigma2, z);
            if (std::isfinite(cobj) && cobj >= obj - 1e-12) {
                theta = cand;
                obj = cobj;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
        // divergence guard: all-zero counts push the mode to -infinity
        if (theta.segment(lo, nfree).cwiseAbs().maxCoeff() > 1e4) break;
    }

    out.mode = theta;
    Eigen::MatrixXd prec = Eigen::MatrixXd::Zero(p, p);
    prec.block(lo, lo, nfree, nfree) =
        fisher_information(theta, sigma2, z).block(lo, lo, nfree, nfree);
    out.precision = prec;
    return out;
}

namespace {

// Cholesky of the free block; throws on singular precision
Eigen::LLT<Eigen::MatrixXd> free_llt(const LaplaceProposal& prop) {
    const Eigen::Index lo = prop.fixed_s0 ? 1 : 0;
    const Eigen::Index n = prop.precision.rows() - lo;
    Eigen::LLT<Eigen::MatrixXd> llt(prop.precision.block(lo, lo, n, n));
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("LaplaceProposal: precision is not positive definite");
    return llt;
}

} // namespace

double laplace_log_density(const LaplaceProposal& prop, const Eigen::VectorXd& theta) {
    const Eigen::Index lo = prop.fixed_s0 ? 1 : 0;
    const Eigen::Index n = prop.precision.rows() - lo;
    if (prop.fixed_s0 && std::fabs(theta(0) - prop.mode(0)) > 0.0)
        return -std::numeric_limits<double>::infinity();
    const auto llt = free_llt(prop);
    const Eigen::VectorXd d = theta.segment(lo, n) - prop.mode.segment(lo, n);
    double logdet = 0.0;
    const Eigen::MatrixXd l = llt.matrixL();
    for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(l(i, i));
    const Eigen::VectorXd ld = llt.matrixL().transpose() * d;
    return 0.5 * logdet - 0.5 * n * std::log(2.0 * M_PI) - 0.5 * ld.squaredNorm();
}

Eigen::VectorXd laplace_sample(const LaplaceProposal& prop, Rng& rng) {
    const Eigen::Index lo = prop.fixed_s0 ? 1 : 0;
    const Eigen::Index n = prop.precision.rows() - lo;
    const auto llt = free_llt(prop);
    Eigen::VectorXd zvec(n);
    for (Eigen::Index i = 0; i < n; ++i) zvec(i) = rng.normal();
    // x = mode + L^{-T} z gives covariance (L L^T)^{-1}
    Eigen::VectorXd out = prop.mode;
    out.segment(lo, n) += llt.matrixL().transpose().solve(zvec);
    return out;
}

double hastings_log_ratio(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_tilde,
                          const LaplaceProposal& prop_fwd, const LaplaceProposal& prop_bwd,
                          const AugmentedCounts& counts, double sigma2,
                          const Eigen::MatrixXd& z) {
    const double target = poisson_log_conditional(theta_tilde, counts, sigma2, z) -
                          poisson_log_conditional(theta, counts, sigma2, z);
    const double proposal =
        laplace_log_density(prop_bwd, theta) - laplace_log_density(prop_fwd, theta_tilde);
    return target + proposal;
}

} // namespace ricefield
