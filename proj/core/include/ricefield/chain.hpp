#pragma once

#include <cstdint>
#include <string>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ricefield/data_io.hpp"
#include "ricefield/design.hpp"
#include "ricefield/engine.hpp"
#include "ricefield/priors.hpp"

namespace ricefield {

using HyperParams = std::variant<IsoPrecision2, IsoPrecision4, PowerSpectrum>;

enum class PositivityMode { Counting, Constrained };

struct ChainConfig {
    ModelSpec model;
    int block_radius = 2;
    long cycles = 1000;
    long burnin = -1; // -1 selects the log-posterior slope heuristic
    int thin = 10;
    std::uint64_t seed = 1;
    int workers = 1;
    PositivityMode positivity = PositivityMode::Counting;
    double rho = 0.0; // pairwise-difference weight for theta0; 0 = flat prior
    bool estimate_hyper = true;
    std::optional<HyperParams> hyper_init; // start (or fixed) values; family default otherwise
    bool update_noise = true;        // Gibbs step for sigma2
    bool separate_theta0 = false;    // extra Gamma update for theta0
    double proposal_inflation = 1.0;
    double wls_b_max = 5000.0;       // initializer cutoff when no init is given
    ScoringOptions scoring{};
};

struct TraceRow {
    long cycle = 0;
    double loglik = 0.0;  // exact Rice log likelihood over positive measurements
    double logprior = 0.0; // negative pairwise field energy
    std::vector<double> hyper;
    double mean_acceptance = 0.0;
};

// current state of the Gibbs-Metropolis chain
struct ChainState {
    Eigen::MatrixXd theta;  // (1+d) x |V|
    Eigen::VectorXd sigma2; // |V|
    HyperParams hyper;
    long cycle = 0;
    std::uint64_t seed = 0;
};

struct ChainResult {
    long burnin = 0;
    Eigen::MatrixXd theta_mean, theta_sd; // over post-burn-in thinned samples
    Eigen::VectorXd sigma2_mean, sigma2_sd;
    Eigen::VectorXd acceptance;        // per-voxel block acceptance rate
    Eigen::VectorXd positive_fraction; // per-voxel over post-burn-in thinned samples
    std::vector<double> hyper_mean, hyper_sd;
    std::vector<std::string> hyper_names;
    long skipped_blocks = 0;
    std::vector<TraceRow> trace;
    // thinned samples (whole run; entries before burnin are excluded from the
    // summaries but kept so diagnostics can re-slice)
    std::vector<Eigen::MatrixXd> theta_samples;
    std::vector<Eigen::VectorXd> sigma2_samples;
    std::vector<long> sample_cycles;
};

// prior coupling matrix blockdiag(rho, Omega_D) for the given family
Eigen::MatrixXd hyper_omega(const ModelSpec& spec, const HyperParams& hyper, double rho);

// names of the hyperparameters in trace order
std::vector<std::string> hyper_names(const ModelSpec& spec, const HyperParams& hyper);
std::vector<double> hyper_values(const HyperParams& hyper);

// Gibbs updates of the regularization parameters; fields include the
// intercept row, which the updates ignore
IsoPrecision2 update_hyper_2nd(const Eigen::MatrixXd& theta, const VoxelGraph& graph,
                               const IsoPrecision2& current, Rng& rng);
IsoPrecision4 update_hyper_4th(const Eigen::MatrixXd& theta, const VoxelGraph& graph,
                               const IsoPrecision4& current, Rng& rng);
PowerSpectrum update_hyper_sh(const Eigen::MatrixXd& theta, const VoxelGraph& graph,
                              const PowerSpectrum& current, int order, Rng& rng);

// default hyperparameters per family
HyperParams default_hyper(const ModelSpec& spec);

// clips/shifts the initial field into the positive set (used by the
// constrained mode, whose chain must start inside the constraint)
void repair_positivity(const ModelSpec& spec, Eigen::MatrixXd& theta);

// log-posterior slope heuristic: first window start whose 500-cycle slope has
// |t| < 2; falls back to cycles/2
long select_burnin(const std::vector<TraceRow>& trace, long cycles);

// runs the Gibbs-Metropolis chain; init fields may be empty to request the
// WLS initializer. Output is reproducible bit for bit for any worker count.
ChainResult run_chain(const Dataset& data, const ChainConfig& config,
                      const Eigen::MatrixXd& theta_init = {},
                      const Eigen::VectorXd& sigma2_init = {});

// simple worker pool used by the chain; fn(i) must only touch slot i state
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

} // namespace ricefield
