#include "ricefield/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ricefield {

namespace {

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

} // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "model") model = value;
    else if (key == "block_radius") block_radius = std::stoi(value);
    else if (key == "cycles") cycles = std::stol(value);
    else if (key == "burnin") burnin = value == "auto" ? -1 : std::stol(value);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "positivity") positivity = value;
    else if (key == "theta0_prior") theta0_prior = value;
    else if (key == "rho") rho = std::stod(value);
    else if (key == "hyper") hyper = value;
    else if (key == "eta") eta = std::stod(value);
    else if (key == "lambda") lambda = std::stod(value);
    else if (key == "gamma") gamma = std::stod(value);
    else if (key == "a_sq") a_sq = std::stod(value);
    else if (key == "workers") workers = std::stoi(value);
    else if (key == "thin") thin = std::stoi(value);
    else if (key == "proposal_inflation") proposal_inflation = std::stod(value);
    else if (key == "wls_b_max") wls_b_max = std::stod(value);
    else if (key == "separate_theta0") separate_theta0 = parse_bool(value);
    else if (key == "sigma") sigma = std::stod(value);
    else if (key == "quantize") quantize = parse_bool(value);
    else if (key == "dataset") dataset = value;
    else if (key == "summary") summary = value;
    else if (key == "trace") trace = value;
    else if (key == "output_prefix") output_prefix = value;
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

std::string RunConfig::serialize() const {
    std::ostringstream out;
    char buf[256];
    out << "model = " << model << '\n';
    out << "block_radius = " << block_radius << '\n';
    out << "cycles = " << cycles << '\n';
    if (burnin < 0) out << "burnin = auto\n";
    else out << "burnin = " << burnin << '\n';
    out << "seed = " << seed << '\n';
    out << "positivity = " << positivity << '\n';
    out << "theta0_prior = " << theta0_prior << '\n';
    std::snprintf(buf, sizeof buf, "rho = %.17g\n", rho);
    out << buf;
    out << "hyper = " << hyper << '\n';
    std::snprintf(buf, sizeof buf, "eta = %.17g\nlambda = %.17g\ngamma = %.17g\na_sq = %.17g\n",
                  eta, lambda, gamma, a_sq);
    out << buf;
    out << "workers = " << workers << '\n';
    out << "thin = " << thin << '\n';
    std::snprintf(buf, sizeof buf, "proposal_inflation = %.17g\nwls_b_max = %.17g\n",
                  proposal_inflation, wls_b_max);
    out << buf;
    out << "separate_theta0 = " << (separate_theta0 ? 1 : 0) << '\n';
    std::snprintf(buf, sizeof buf, "sigma = %.17g\n", sigma);
    out << buf;
    out << "quantize = " << (quantize ? 1 : 0) << '\n';
    out << "dataset = " << dataset << '\n';
    out << "summary = " << summary << '\n';
    out << "trace = " << trace << '\n';
    out << "output_prefix = " << output_prefix << '\n';
    return out.str();
}

RunConfig RunConfig::parse(std::istream& in, const std::string& origin) {
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            // blank lines only
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                         ": expected 'key = value'");
            continue;
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        try {
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::exception& e) {
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    return parse(in, path);
}

void RunConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config '" + path + "'");
    out << serialize();
}

ChainConfig RunConfig::chain_config() const {
    ChainConfig cc;
    cc.model = model_spec();
    cc.block_radius = block_radius;
    cc.cycles = cycles;
    cc.burnin = burnin;
    cc.thin = thin;
    cc.seed = seed;
    cc.workers = workers;
    if (positivity == "counting") cc.positivity = PositivityMode::Counting;
    else if (positivity == "constrained") cc.positivity = PositivityMode::Constrained;
    else throw std::invalid_argument("positivity must be counting or constrained");
    if (theta0_prior == "flat") cc.rho = 0.0;
    else if (theta0_prior == "intrinsic") cc.rho = rho;
    else throw std::invalid_argument("theta0_prior must be flat or intrinsic");
    if (hyper == "estimated") cc.estimate_hyper = true;
    else if (hyper == "fixed") cc.estimate_hyper = false;
    else throw std::invalid_argument("hyper must be estimated or fixed");
    switch (cc.model.family) {
        case ModelFamily::Tensor2: {
            const IsoPrecision2 p{eta, lambda};
            if (!p.valid())
                throw std::invalid_argument("eta/lambda violate eta > 0, lambda > -eta/3");
            cc.hyper_init = p;
            break;
        }
        case ModelFamily::Tensor4: {
            const IsoPrecision4 p{eta, lambda, gamma};
            if (!p.valid())
                throw std::invalid_argument(
                    "eta/lambda/gamma violate the positive-definiteness constraints");
            cc.hyper_init = p;
            break;
        }
        case ModelFamily::SH: {
            if (!(a_sq > 0.0)) throw std::invalid_argument("a_sq must be positive");
            PowerSpectrum s;
            s.a2l_sq.assign(static_cast<std::size_t>(cc.model.sh_order) + 1, a_sq);
            cc.hyper_init = s;
            break;
        }
    }
    cc.separate_theta0 = separate_theta0;
    cc.proposal_inflation = proposal_inflation;
    cc.wls_b_max = wls_b_max;
    return cc;
}

void save_summary(const ChainResult& result, const Dataset& data, const ModelSpec& spec,
                  const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write summary '" + path + "'");
    const VoxelGraph graph = data.graph();
    const int p = spec.param_dim();
    char buf[256];

    out << "# ricefield summary v1\n";
    out << "# model " << spec.name() << '\n';
    out << "# burnin " << result.burnin << '\n';
    out << "# hyper";
    for (std::size_t h = 0; h < result.hyper_names.size(); ++h) {
        std::snprintf(buf, sizeof buf, " %s %.17g %.17g", result.hyper_names[h].c_str(),
                      result.hyper_mean[h], result.hyper_sd[h]);
        out << buf;
    }
    out << '\n';
    out << "# columns: x y z";
    for (int j = 0; j < p; ++j) out << " mean_theta" << j;
    for (int j = 0; j < p; ++j) out << " sd_theta" << j;
    out << " mean_sigma2 sd_sigma2 acceptance positive_fraction\n";

    for (int v = 0; v < graph.size(); ++v) {
        const auto [x, y, z] = graph.coords[static_cast<std::size_t>(v)];
        out << x << ' ' << y << ' ' << z;
        for (int j = 0; j < p; ++j) {
            std::snprintf(buf, sizeof buf, " %.17g", result.theta_mean(j, v));
            out << buf;
        }
        for (int j = 0; j < p; ++j) {
            std::snprintf(buf, sizeof buf, " %.17g", result.theta_sd(j, v));
            out << buf;
        }
        std::snprintf(buf, sizeof buf, " %.17g %.17g %.17g %.17g\n", result.sigma2_mean(v),
                      result.sigma2_sd(v), result.acceptance(v), result.positive_fraction(v));
        out << buf;
    }
    if (!out) throw std::runtime_error("failed writing summary '" + path + "'");
}

SummaryFile load_summary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open summary '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "# ricefield summary v1")
        throw std::runtime_error(path + ": not a ricefield summary");

    SummaryFile s;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hdr(line.substr(1));
            std::string key;
            hdr >> key;
            if (key == "model") {
                std::string name;
                hdr >> name;
                s.spec = ModelSpec::parse(name);
            } else if (key == "burnin") {
                hdr >> s.burnin;
            } else if (key == "hyper") {
                std::string name;
                double mean, sd;
                while (hdr >> name >> mean >> sd) {
                    s.hyper_names.push_back(name);
                    s.hyper_mean.push_back(mean);
                    s.hyper_sd.push_back(sd);
                }
            }
            continue;
        }
        std::istringstream row(line);
        std::vector<double> vals;
        double x;
        while (row >> x) vals.push_back(x);
        if (!vals.empty()) rows.push_back(std::move(vals));
    }
    const int p = s.spec.param_dim();
    const int nv = static_cast<int>(rows.size());
    const std::size_t expected = 3 + 2 * static_cast<std::size_t>(p) + 4;
    s.theta_mean.resize(p, nv);
    s.theta_sd.resize(p, nv);
    s.sigma2_mean.resize(nv);
    s.sigma2_sd.resize(nv);
    s.acceptance.resize(nv);
    s.positive_fraction.resize(nv);
    for (int v = 0; v < nv; ++v) {
        const auto& r = rows[static_cast<std::size_t>(v)];
        if (r.size() != expected) throw std::runtime_error(path + ": malformed summary row");
        for (int j = 0; j < p; ++j) s.theta_mean(j, v) = r[static_cast<std::size_t>(3 + j)];
        for (int j = 0; j < p; ++j) s.theta_sd(j, v) = r[static_cast<std::size_t>(3 + p + j)];
        s.sigma2_mean(v) = r[expected - 4];
        s.sigma2_sd(v) = r[expected - 3];
        s.acceptance(v) = r[expected - 2];
        s.positive_fraction(v) = r[expected - 1];
    }
    return s;
}

void save_trace(const ChainResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace '" + path + "'");
    out << "# cycle loglik logprior";
    for (const auto& name : result.hyper_names) out << ' ' << name;
    out << " mean_acceptance\n";
    char buf[128];
    for (const auto& row : result.trace) {
        out << row.cycle;
        std::snprintf(buf, sizeof buf, " %.17g %.17g", row.loglik, row.logprior);
        out << buf;
        for (double h : row.hyper) {
            std::snprintf(buf, sizeof buf, " %.17g", h);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, " %.17g\n", row.mean_acceptance);
        out << buf;
    }
}

} // namespace ricefield
