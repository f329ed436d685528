#pragma once

#include <iosfwd>
#include <string>

#include "ricefield/chain.hpp"

namespace ricefield {

// Everything one run needs, serializable to a key-value text file. Command
// line flags override file values; see RunConfig::set.
struct RunConfig {
    std::string model = "tensor2";
    int block_radius = 2;
    long cycles = 1000;
    long burnin = -1; // -1 = auto
    std::uint64_t seed = 1;
    std::string positivity = "counting"; // counting | constrained
    std::string theta0_prior = "flat";   // flat | intrinsic
    double rho = 1.0;                    // intrinsic weight, used when theta0_prior=intrinsic
    std::string hyper = "estimated";     // estimated | fixed
    double eta = 1.0, lambda = 0.0, gamma = 0.0; // fixed/initial hyper values
    double a_sq = 1.0;                           // fixed/initial SH spectrum value
    int workers = 1;
    int thin = 10;
    double proposal_inflation = 1.0;
    double wls_b_max = 5000.0;
    bool separate_theta0 = false;

    // phantom generation
    double sigma = -1.0; // override both slice noise levels when >= 0
    bool quantize = false;

    // paths
    std::string dataset = "dataset.dtset";
    std::string summary = "summary.tsv";
    std::string trace = "trace.tsv";
    std::string output_prefix = "out";

    void set(const std::string& key, const std::string& value);
    std::string serialize() const;
    static RunConfig load(const std::string& path);
    static RunConfig parse(std::istream& in, const std::string& origin);
    void save(const std::string& path) const;

    ModelSpec model_spec() const { return ModelSpec::parse(model); }
    ChainConfig chain_config() const;
};

// posterior summary table I/O (documented schema, exact round trip)
void save_summary(const ChainResult& result, const Dataset& data, const ModelSpec& spec,
                  const std::string& path);

struct SummaryFile {
    ModelSpec spec;
    long burnin = 0;
    std::vector<std::string> hyper_names;
    std::vector<double> hyper_mean, hyper_sd;
    Eigen::MatrixXd theta_mean, theta_sd;
    Eigen::VectorXd sigma2_mean, sigma2_sd, acceptance, positive_fraction;
};

SummaryFile load_summary(const std::string& path);

void save_trace(const ChainResult& result, const std::string& path);

} // namespace ricefield
