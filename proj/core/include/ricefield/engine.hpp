#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ricefield/glm.hpp"
#include "ricefield/priors.hpp"
#include "ricefield/rice.hpp"
#include "ricefield/rng.hpp"

namespace ricefield {

// Non-adjacent blocks (balls of radius r in the graph distance) for one
// schedule step. Centers sit on the sublattice of spacing 2r+2 selected by the
// cycle offset, plus a greedy maximality pass in lexicographic order; distinct
// blocks are separated by at least one voxel, so they are conditionally
// independent given the block boundaries and safe to update in parallel.
// Cycling through all (2r+2)^3 offsets covers every voxel.
struct BlockPartition {
    std::vector<std::vector<int>> blocks; // sorted voxel ids
    std::vector<int> centers;
    int cycle_offset = 0;
    int period = 1;
};

BlockPartition partition_blocks(const VoxelGraph& graph, int radius, std::uint64_t cycle);

// latent counts for one voxel given measurements and linear predictors
AugmentedCounts sample_counts(const Eigen::VectorXd& y, const Eigen::VectorXd& linpred,
                              double sigma2, Rng& rng);

// Gibbs draw of the noise variance: inverse gamma with shape sum(2 N_i + 1)
// and rate (1/2) sum(y_i^2 + exp(2 lin_i))
double sample_sigma2(const Eigen::VectorXd& y, const Eigen::VectorXd& linpred,
                     const AugmentedCounts& counts, Rng& rng);

// Gibbs draw of the log intensity: S0^2 is Gamma(sum N_i, b) with
// b = (1/(2 sigma2)) sum exp(2 lin_i) evaluated at theta0 = 0; returns
// nothing when all counts vanish (improper conditional)
std::optional<double> sample_theta0(const AugmentedCounts& counts,
                                    const Eigen::VectorXd& linpred_no_intercept, double sigma2,
                                    Rng& rng);

// Per-voxel likelihood surface used by the block update: a Laplace
// approximation scored from a given start, and the exact log likelihood.
// The production model is the Poisson GLM; tests substitute exact Gaussians.
class BlockLocalModel {
public:
    virtual ~BlockLocalModel() = default;
    virtual LaplaceProposal laplace(int v, const Eigen::VectorXd& start, bool fixed_s0) const = 0;
    virtual double log_likelihood(int v, const Eigen::VectorXd& theta) const = 0;
};

class PoissonBlockModel : public BlockLocalModel {
public:
    PoissonBlockModel(const Eigen::MatrixXd& z, std::vector<AugmentedCounts> counts,
                      const Eigen::VectorXd& sigma2_of_block, std::vector<int> block,
                      ScoringOptions opts);

    LaplaceProposal laplace(int v, const Eigen::VectorXd& start, bool fixed_s0) const override;
    double log_likelihood(int v, const Eigen::VectorXd& theta) const override;

private:
    int block_index(int v) const;

    const Eigen::MatrixXd& z_;
    std::vector<AugmentedCounts> counts_;
    Eigen::VectorXd sigma2_;
    std::vector<int> block_;
    ScoringOptions opts_;
};

struct BlockUpdateOptions {
    double proposal_inflation = 1.0;
    double degeneracy_condition = 1e12; // information condition number triggering fixed-S0
    // optional hard constraint; proposals violating it are rejected
    std::function<bool(int v, const Eigen::VectorXd& theta)> constraint;
};

struct BlockUpdateResult {
    bool attempted = false; // false when Fisher scoring failed and the block was skipped
    bool accepted = false;
    double log_hastings = 0.0;
};

// Joint Metropolis-Hastings update of theta over one block, conditionally on
// the block boundary. Builds the band precision Psi_{v,w} =
// (#neighbors(v) 1(v=w) - 1(v~w)) Omega + 1(v=w) I(v) and mean mu from the
// per-voxel Laplace data, draws the joint Gaussian proposal by sparse
// factorization, and accepts with the Hastings ratio that combines the local
// likelihoods, the pairwise prior over edges touching the block, and the
// forward/backward proposal densities (forward scored from the current state,
// backward rescored from the proposal).
BlockUpdateResult update_theta_block(const std::vector<int>& block, Eigen::MatrixXd& theta,
                                     const VoxelGraph& graph, const Eigen::MatrixXd& omega,
                                     const BlockLocalModel& model, Rng& rng,
                                     const BlockUpdateOptions& opts = {});

} // namespace ricefield
