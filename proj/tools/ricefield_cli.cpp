// Command-line front end: simulate / init / fit / diagnose / export.
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "ricefield/chain.hpp"
#include "ricefield/config.hpp"
#include "ricefield/data_io.hpp"
#include "ricefield/diagnostics.hpp"

using namespace ricefield;

namespace {

// exit codes: 0 ok, 1 usage/config error, 2 numeric abort
constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> overrides; // key=value pairs, win over the file
    std::vector<std::pair<std::string, std::string>> typed; // direct flags, win last
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("-c,--config", flags.config_path, "config file (key = value lines)");
    cmd->add_option("-s,--set", flags.overrides, "override a config key, e.g. --set cycles=500")
        ->expected(-1);
    // direct spellings of the common keys; equivalent to --set key=value
    for (const char* key : {"model", "cycles", "burnin", "seed", "workers", "thin",
                            "block_radius", "sigma", "dataset", "summary", "trace",
                            "output_prefix", "positivity"}) {
        std::string name = key;
        for (auto& c : name)
            if (c == '_') c = '-';
        cmd->add_option_function<std::string>(
               "--" + name,
               [&flags, key = std::string(key)](const std::string& v) {
                   flags.typed.emplace_back(key, v);
               },
               std::string("same as --set ") + key + "=...")
            ->type_name("VALUE");
    }
    cmd->add_flag_callback(
        "--quantize", [&flags] { flags.typed.emplace_back("quantize", "1"); },
        "floor-quantize simulated magnitudes to integers");
}

RunConfig resolve_config(const CommonFlags& flags) {
    RunConfig cfg;
    if (!flags.config_path.empty()) cfg = RunConfig::load(flags.config_path);
    for (const auto& kv : flags.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("override must be key=value: '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& [key, value] : flags.typed) cfg.set(key, value);
    return cfg;
}

int cmd_simulate(const RunConfig& cfg) {
    PhantomSpec spec = standard_crossing_phantom(cfg.quantize);
    if (cfg.sigma >= 0.0)
        for (auto& s2 : spec.sigma2) s2 = cfg.sigma * cfg.sigma;
    const GradientScheme scheme = standard_scheme({500.0, 1500.0, 3500.0});
    const Dataset data = simulate_phantom(spec, scheme, cfg.seed);
    save_dataset(data, cfg.dataset);

    // ground truth table for later evaluation
    const std::string truth_path = cfg.dataset + ".truth";
    std::FILE* truth = std::fopen(truth_path.c_str(), "w");
    if (!truth) throw std::runtime_error("cannot write '" + truth_path + "'");
    std::fprintf(truth, "# voxel region s0 sigma2\n");
    for (std::size_t v = 0; v < spec.region_of_voxel.size(); ++v)
        std::fprintf(truth, "%zu %d %.17g %.17g\n", v, spec.region_of_voxel[v], spec.s0[v],
                     spec.sigma2[v]);
    std::fclose(truth);

    std::printf("wrote %s (%d voxels, %d acquisitions%s)\n", cfg.dataset.c_str(),
                data.voxel_count(), data.scheme.total_acquisitions(),
                data.quantized ? ", quantized" : "");
    std::printf("scheme: %zu entries, b in [0, %g] s/mm^2\n", data.scheme.entries.size(), 3500.0);
    return 0;
}

int cmd_init(const RunConfig& cfg) {
    const Dataset data = load_dataset(cfg.dataset);
    const ModelSpec spec = cfg.model_spec();
    const WlsResult wls = wls_initialize(data, spec, cfg.wls_b_max);
    long flagged = 0;
    for (auto f : wls.flagged) flagged += f;

    ChainResult as_result;
    as_result.burnin = 0;
    as_result.theta_mean = wls.theta;
    as_result.theta_sd = Eigen::MatrixXd::Zero(wls.theta.rows(), wls.theta.cols());
    as_result.sigma2_mean = wls.sigma2;
    as_result.sigma2_sd = Eigen::VectorXd::Zero(wls.sigma2.size());
    as_result.acceptance = Eigen::VectorXd::Zero(wls.sigma2.size());
    as_result.positive_fraction = Eigen::VectorXd::Zero(wls.sigma2.size());
    save_summary(as_result, data, spec, cfg.summary);
    std::printf("WLS init written to %s (%ld voxels filled from neighbors)\n", cfg.summary.c_str(),
                flagged);
    return 0;
}

int cmd_fit(const RunConfig& cfg) {
    const Dataset data = load_dataset(cfg.dataset);
    ChainConfig cc = cfg.chain_config();
    ChainResult result;
    try {
        result = run_chain(data, cc);
    } catch (const std::runtime_error& e) {
        // numeric abort: leave a diagnostic dump and report its path
        const std::string dump_path = cfg.output_prefix + "_abort.txt";
        std::FILE* dump = std::fopen(dump_path.c_str(), "w");
        if (dump) {
            std::fprintf(dump, "chain aborted: %s\nconfig:\n%s", e.what(),
                         cfg.serialize().c_str());
            std::fclose(dump);
        }
        std::fprintf(stderr, "error: %s (diagnostics: %s)\n", e.what(), dump_path.c_str());
        return kExitNumeric;
    }
    save_summary(result, data, cc.model, cfg.summary);
    save_trace(result, cfg.trace);

    std::printf("cycles: %ld, burn-in: %ld, skipped blocks: %ld\n", cc.cycles, result.burnin,
                result.skipped_blocks);
    std::printf("posterior regularization parameters (mean +- sd):\n");
    for (std::size_t h = 0; h < result.hyper_names.size(); ++h)
        std::printf("  %-8s %12.6g +- %.6g\n", result.hyper_names[h].c_str(),
                    result.hyper_mean[h], result.hyper_sd[h]);
    std::printf("summary: %s\ntrace: %s\n", cfg.summary.c_str(), cfg.trace.c_str());
    return 0;
}

int cmd_diagnose(const RunConfig& cfg) {
    const Dataset data = load_dataset(cfg.dataset);
    ChainConfig cc = cfg.chain_config();
    const ChainResult result = run_chain(data, cc);
    const DicReport dic = compute_dic(result, data, cc.model);
    std::printf("DIC %.10g\nn_eff %.10g\nmean_deviance %.10g\ndeviance_at_mean %.10g\n", dic.dic,
                dic.n_eff, dic.mean_deviance, dic.deviance_at_mean);

    // acceptance histogram (20 bins over [0,1])
    std::array<long, 20> hist{};
    for (Eigen::Index v = 0; v < result.acceptance.size(); ++v) {
        int bin = static_cast<int>(result.acceptance(v) * 20.0);
        if (bin > 19) bin = 19;
        ++hist[static_cast<std::size_t>(bin)];
    }
    std::printf("acceptance histogram:\n");
    for (int b = 0; b < 20; ++b)
        std::printf("  [%.2f,%.2f) %ld\n", b / 20.0, (b + 1) / 20.0, hist[static_cast<std::size_t>(b)]);

    const std::string dic_path = cfg.output_prefix + "_dic.tsv";
    std::FILE* out = std::fopen(dic_path.c_str(), "w");
    if (!out) throw std::runtime_error("cannot write '" + dic_path + "'");
    std::fprintf(out, "# dic n_eff mean_deviance deviance_at_mean\n%.17g %.17g %.17g %.17g\n",
                 dic.dic, dic.n_eff, dic.mean_deviance, dic.deviance_at_mean);
    std::fclose(out);
    std::printf("wrote %s\n", dic_path.c_str());
    return 0;
}

int cmd_export(const RunConfig& cfg) {
    const Dataset data = load_dataset(cfg.dataset);
    const SummaryFile summary = load_summary(cfg.summary);

    ChainResult result;
    result.burnin = summary.burnin;
    result.theta_mean = summary.theta_mean;
    result.theta_sd = summary.theta_sd;
    result.sigma2_mean = summary.sigma2_mean;
    result.sigma2_sd = summary.sigma2_sd;
    result.acceptance = summary.acceptance;
    result.positive_fraction = summary.positive_fraction;

    for (MapKind kind : {MapKind::FA, MapKind::MD, MapKind::Acceptance, MapKind::Sigma2})
        for (const auto& path : export_maps(result, data, summary.spec, kind, cfg.output_prefix))
            std::printf("wrote %s\n", path.c_str());
    const SphereMesh mesh = SphereMesh::icosphere(2);
    export_profiles(result, data, summary.spec, mesh, cfg.output_prefix);
    std::printf("wrote %s_profiles.tsv and %s_mesh.txt\n", cfg.output_prefix.c_str(),
                cfg.output_prefix.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian diffusion-tensor field estimation under Rice noise"};
    app.require_subcommand(1);

    CommonFlags flags;
    auto* simulate = app.add_subcommand("simulate", "generate the synthetic crossing phantom");
    auto* init = app.add_subcommand("init", "weighted-least-squares initialization only");
    auto* fit = app.add_subcommand("fit", "run the Gibbs-Metropolis chain");
    auto* diagnose = app.add_subcommand("diagnose", "fit and report DIC / acceptance diagnostics");
    auto* exports = app.add_subcommand("export", "FA/MD/acceptance/noise maps and profiles");
    for (auto* cmd : {simulate, init, fit, diagnose, exports}) add_common(cmd, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitUsage : 0;
    }

    try {
        const RunConfig cfg = resolve_config(flags);
        if (simulate->parsed()) return cmd_simulate(cfg);
        if (init->parsed()) return cmd_init(cfg);
        if (fit->parsed()) return cmd_fit(cfg);
        if (diagnose->parsed()) return cmd_diagnose(cfg);
        if (exports->parsed()) return cmd_export(cfg);
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    }
}
