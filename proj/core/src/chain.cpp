#include "ricefield/chain.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "ricefield/rice.hpp"

namespace ricefield {

namespace {

// substream purpose tags
constexpr std::uint64_t kTagBlock = 1;
constexpr std::uint64_t kTagVoxel = 2;
constexpr std::uint64_t kTagHyper = 3;

Eigen::MatrixXd omega_tensor2(const IsoPrecision2& p, double rho) {
    Eigen::MatrixXd om = Eigen::MatrixXd::Zero(7, 7);
    om(0, 0) = rho;
    om.bottomRightCorner<6, 6>() = omega_2nd(p);
    return om;
}

Eigen::MatrixXd omega_tensor4(const IsoPrecision4& p, double rho) {
    Eigen::MatrixXd om = Eigen::MatrixXd::Zero(16, 16);
    om(0, 0) = rho;
    om.bottomRightCorner<15, 15>() = omega_4th_slot_order(p);
    return om;
}

Eigen::MatrixXd omega_sh(const PowerSpectrum& s, int order, double rho) {
    const int d = (2 * order + 1) * (order + 1);
    if (static_cast<int>(s.a2l_sq.size()) != order + 1)
        throw std::invalid_argument("hyper_omega: spectrum length does not match the SH order");
    Eigen::VectorXd diag(1 + d);
    diag(0) = rho;
    int k = 1;
    for (int l = 0; l <= order; ++l)
        for (int m = 0; m < 4 * l + 1; ++m) diag(k++) = 1.0 / s.a2l_sq[static_cast<std::size_t>(l)];
    return diag.asDiagonal();
}

} // namespace

Eigen::MatrixXd hyper_omega(const ModelSpec& spec, const HyperParams& hyper, double rho) {
    switch (spec.family) {
        case ModelFamily::Tensor2: return omega_tensor2(std::get<IsoPrecision2>(hyper), rho);
        case ModelFamily::Tensor4: return omega_tensor4(std::get<IsoPrecision4>(hyper), rho);
        case ModelFamily::SH:
            return omega_sh(std::get<PowerSpectrum>(hyper), spec.sh_order, rho);
    }
    throw std::logic_error("hyper_omega: unknown family");
}

std::vector<std::string> hyper_names(const ModelSpec& spec, const HyperParams& hyper) {
    switch (spec.family) {
        case ModelFamily::Tensor2: return {"eta", "lambda"};
        case ModelFamily::Tensor4: return {"eta", "lambda", "gamma"};
        case ModelFamily::SH: {
            std::vector<std::string> names;
            const auto& s = std::get<PowerSpectrum>(hyper);
            for (std::size_t l = 0; l < s.a2l_sq.size(); ++l)
                names.push_back("a" + std::to_string(2 * l) + "_sq");
            return names;
        }
    }
    return {};
}

std::vector<double> hyper_values(const HyperParams& hyper) {
    if (const auto* p2 = std::get_if<IsoPrecision2>(&hyper)) return {p2->eta, p2->lambda};
    if (const auto* p4 = std::get_if<IsoPrecision4>(&hyper))
        return {p4->eta, p4->lambda, p4->gamma};
    return std::get<PowerSpectrum>(hyper).a2l_sq;
}

HyperParams default_hyper(const ModelSpec& spec) {
    switch (spec.family) {
        case ModelFamily::Tensor2: return IsoPrecision2{1.0, 0.0};
        case ModelFamily::Tensor4: return IsoPrecision4{1.0, 0.0, 0.0};
        case ModelFamily::SH: {
            PowerSpectrum s;
            s.a2l_sq.assign(static_cast<std::size_t>(spec.sh_order) + 1, 1.0);
            return s;
        }
    }
    throw std::logic_error("default_hyper");
}

IsoPrecision2 update_hyper_2nd(const Eigen::MatrixXd& theta, const VoxelGraph& graph,
                               const IsoPrecision2& current, Rng& rng) {
    double rate_delta = 0.0, rate_eta = 0.0;
    for (const auto& [v, w] : graph.edges) {
        const Eigen::Matrix<double, 6, 1> d = theta.col(v).segment<6>(1) - theta.col(w).segment<6>(1);
        const Eigen::Matrix3d m = Tensor2::from_coeffs(d).matrix();
        const double tr = m.trace();
        const double tr2 = (m * m).trace();
        rate_delta += tr * tr / 6.0;
        rate_eta += 0.5 * tr2 - tr * tr / 6.0;
    }
    const double nv = static_cast<double>(graph.size());
    double delta = current.delta(), eta = current.eta;
    if (rate_delta > 0.0) delta = rng.gamma(nv / 2.0) / rate_delta;
    if (rate_eta > 0.0) eta = rng.gamma(5.0 * nv / 2.0) / rate_eta;
    return {eta, (delta - eta) / 3.0};
}

IsoPrecision4 update_hyper_4th(const Eigen::MatrixXd& theta, const VoxelGraph& graph,
                               const IsoPrecision4& current, Rng& rng) {
    double rate_a = 0.0, rate_b = 0.0, rate_d = 0.0;
    for (const auto& [v, w] : graph.edges) {
        const Eigen::Matrix<double, 15, 1> d =
            theta.col(v).segment<15>(1) - theta.col(w).segment<15>(1);
        const Tensor4 t = Tensor4::from_coeffs(d);
        const auto dh = dhat(t);
        const double tr = dh.trace();
        const double tr2 = (dh * dh).trace();
        const double g = g_invariant(t);
        // derivatives of the edge energy (1/2) d' Omega d in (alpha, beta, delta)
        rate_a += (4.0 * tr2 - 12.0 / 5.0 * tr * tr + 6.0 * g) / 14.0;
        rate_b += (tr2 + tr * tr / 3.0 - 2.0 * g) / 14.0;
        rate_d += tr * tr / 30.0;
    }
    const double nv = static_cast<double>(graph.size());
    double a = current.alpha(), b = current.beta(), d = current.delta();
    if (rate_a > 0.0) a = rng.gamma(9.0 * nv / 2.0) / rate_a;
    if (rate_b > 0.0) b = rng.gamma(5.0 * nv / 2.0) / rate_b;
    if (rate_d > 0.0) d = rng.gamma(nv / 2.0) / rate_d;
    return IsoPrecision4::from_alpha_beta_delta(a, b, d);
}

PowerSpectrum update_hyper_sh(const Eigen::MatrixXd& theta, const VoxelGraph& graph,
                              const PowerSpectrum& current, int order, Rng& rng) {
    PowerSpectrum next = current;
    int offset = 1;
    for (int l = 0; l <= order; ++l) {
        const int width = 4 * l + 1;
        double rate = 0.0;
        for (const auto& [v, w] : graph.edges)
            rate += 0.5 * (theta.col(v).segment(offset, width) - theta.col(w).segment(offset, width))
                              .squaredNorm();
        if (rate > 0.0) {
            const double shape = (2.0 * l + 0.5) * static_cast<double>(graph.size());
            const double precision = rng.gamma(shape) / rate;
            next.a2l_sq[static_cast<std::size_t>(l)] = 1.0 / precision;
        }
        offset += width;
    }
    return next;
}

void repair_positivity(const ModelSpec& spec, Eigen::MatrixXd& theta) {
    const int d = spec.coeff_dim();
    for (Eigen::Index v = 0; v < theta.cols(); ++v) {
        Eigen::VectorXd coeffs = theta.col(v).tail(d);
        const auto rep = positivity_check(spec, coeffs);
        if (rep.verdict == Positivity::Positive) continue;
        const double lift = -rep.min_diffusivity * (1.0 + 1e-6) + 1e-12;
        switch (spec.family) {
            case ModelFamily::Tensor2:
                coeffs(0) += lift;
                coeffs(1) += lift;
                coeffs(2) += lift;
                break;
            case ModelFamily::Tensor4:
                coeffs(T4_1111) += lift;
                coeffs(T4_2222) += lift;
                coeffs(T4_3333) += lift;
                coeffs(T4_1122) += lift / 3.0;
                coeffs(T4_1133) += lift / 3.0;
                coeffs(T4_2233) += lift / 3.0;
                break;
            case ModelFamily::SH:
                coeffs(0) += lift * 2.0 * std::sqrt(M_PI);
                break;
        }
        theta.col(v).tail(d) = coeffs;
    }
}

long select_burnin(const std::vector<TraceRow>& trace, long cycles) {
    const long window = 500;
    if (static_cast<long>(trace.size()) < window + 1) return cycles / 2;
    for (long start = 0; start + window <= static_cast<long>(trace.size()); start += 50) {
        // slope t-statistic of the log posterior over the window
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (long i = 0; i < window; ++i) {
            const double x = static_cast<double>(i);
            const double y =
                trace[static_cast<std::size_t>(start + i)].loglik +
                trace[static_cast<std::size_t>(start + i)].logprior;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double n = static_cast<double>(window);
        const double sxx_c = sxx - sx * sx / n;
        const double slope = (sxy - sx * sy / n) / sxx_c;
        double rss = 0;
        const double intercept = (sy - slope * sx) / n;
        for (long i = 0; i < window; ++i) {
            const double y =
                trace[static_cast<std::size_t>(start + i)].loglik +
                trace[static_cast<std::size_t>(start + i)].logprior;
            const double r = y - intercept - slope * static_cast<double>(i);
            rss += r * r;
        }
        const double se = std::sqrt(rss / (n - 2.0) / sxx_c);
        if (se == 0.0 || std::fabs(slope / se) < 2.0) return start;
    }
    return cycles / 2;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    const int nthreads = std::min(workers, n);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= n) return;
                fn(i);
            }
        });
    for (auto& th : pool) th.join();
}

ChainResult run_chain(const Dataset& data, const ChainConfig& config,
                      const Eigen::MatrixXd& theta_init, const Eigen::VectorXd& sigma2_init) {
    const ModelSpec& spec = config.model;
    const int p = spec.param_dim();
    const int nv = data.voxel_count();
    if (config.cycles < 0 || config.block_radius < 0 || config.thin < 1)
        throw std::invalid_argument("run_chain: invalid configuration");

    const VoxelGraph graph = data.graph();
    if (graph.size() != nv) throw std::invalid_argument("run_chain: mask does not match data");
    const Eigen::MatrixXd z = build_design_matrix(data.scheme, spec);

    ChainState state;
    state.seed = config.seed;
    state.hyper = config.hyper_init ? *config.hyper_init : default_hyper(spec);
    (void)hyper_omega(spec, state.hyper, config.rho); // validates family and constraints
    if (theta_init.size() > 0) {
        if (theta_init.rows() != p || theta_init.cols() != nv)
            throw std::invalid_argument("run_chain: init field shape mismatch");
        state.theta = theta_init;
        state.sigma2 = sigma2_init;
        if (state.sigma2.size() != nv)
            throw std::invalid_argument("run_chain: init sigma2 shape mismatch");
    } else {
        const WlsResult wls = wls_initialize(data, spec, config.wls_b_max);
        state.theta = wls.theta;
        state.sigma2 = wls.sigma2;
    }
    for (Eigen::Index v = 0; v < nv; ++v)
        if (!(state.sigma2(v) > 0.0)) throw std::invalid_argument("run_chain: sigma2 must be positive");

    if (config.positivity == PositivityMode::Constrained) repair_positivity(spec, state.theta);

    const int d = spec.coeff_dim();
    BlockUpdateOptions block_opts;
    block_opts.proposal_inflation = config.proposal_inflation;
    if (config.positivity == PositivityMode::Constrained) {
        block_opts.constraint = [&spec, d](int, const Eigen::VectorXd& theta_v) {
            return positivity_check(spec, theta_v.tail(d), 1e-12, PositivityBudget{512, 8})
                       .verdict == Positivity::Positive;
        };
    }

    ChainResult result;
    result.hyper_names = hyper_names(spec, state.hyper);
    Eigen::VectorXd attempts = Eigen::VectorXd::Zero(nv);
    Eigen::VectorXd accepts = Eigen::VectorXd::Zero(nv);
    std::vector<double> loglik_buf(static_cast<std::size_t>(nv), 0.0);

    auto record_sample = [&](long cycle) {
        result.theta_samples.push_back(state.theta);
        result.sigma2_samples.push_back(state.sigma2);
        result.sample_cycles.push_back(cycle);
    };

    auto rice_loglik = [&]() {
        parallel_for(nv, config.workers, [&](int v) {
            const Eigen::VectorXd lin = z * state.theta.col(v);
            double s = 0.0;
            for (Eigen::Index i = 0; i < lin.size(); ++i) {
                const double y = data.measurements(i, v);
                if (y > 0.0)
                    s += rice_log_density(
                        y, RiceParams{std::exp(std::min(lin(i), 300.0)), state.sigma2(v)});
            }
            loglik_buf[static_cast<std::size_t>(v)] = s;
        });
        double total = 0.0;
        for (int v = 0; v < nv; ++v) total += loglik_buf[static_cast<std::size_t>(v)];
        return total;
    };

    record_sample(-1); // initial state counts as the 0-cycle summary

    for (long cycle = 0; cycle < config.cycles; ++cycle) {
        const Eigen::MatrixXd omega = hyper_omega(spec, state.hyper, config.rho);
        const BlockPartition part =
            partition_blocks(graph, config.block_radius, static_cast<std::uint64_t>(cycle));

        // block Metropolis updates, conditionally independent within the step
        std::vector<BlockUpdateResult> block_results(part.blocks.size());
        const int nblocks = static_cast<int>(part.blocks.size());
        std::atomic<long> skipped{0};
        parallel_for(nblocks, config.workers, [&](int b) {
            const auto& block = part.blocks[static_cast<std::size_t>(b)];
            Rng rng(substream_seed(config.seed, static_cast<std::uint64_t>(cycle), kTagBlock,
                                   static_cast<std::uint64_t>(part.centers[static_cast<std::size_t>(b)])));
            std::vector<AugmentedCounts> counts;
            Eigen::VectorXd sig(block.size());
            counts.reserve(block.size());
            for (std::size_t i = 0; i < block.size(); ++i) {
                const int v = block[i];
                const Eigen::VectorXd lin = z * state.theta.col(v);
                counts.push_back(
                    sample_counts(data.measurements.col(v), lin, state.sigma2(v), rng));
                sig(static_cast<Eigen::Index>(i)) = state.sigma2(v);
            }
            PoissonBlockModel model(z, std::move(counts), sig, block, config.scoring);
            block_results[static_cast<std::size_t>(b)] =
                update_theta_block(block, state.theta, graph, omega, model, rng, block_opts);
            if (!block_results[static_cast<std::size_t>(b)].attempted) skipped.fetch_add(1);
        });
        result.skipped_blocks += skipped.load();

        double acc_num = 0.0, acc_den = 0.0;
        for (std::size_t b = 0; b < part.blocks.size(); ++b) {
            if (!block_results[b].attempted) continue;
            for (int v : part.blocks[b]) {
                attempts(v) += 1.0;
                if (block_results[b].accepted) accepts(v) += 1.0;
            }
            acc_num += block_results[b].accepted ? static_cast<double>(part.blocks[b].size()) : 0.0;
            acc_den += static_cast<double>(part.blocks[b].size());
        }

        // per-voxel Gibbs updates of sigma2 and (optionally) theta0
        if (config.update_noise || config.separate_theta0) {
            parallel_for(nv, config.workers, [&](int v) {
                Rng rng(substream_seed(config.seed, static_cast<std::uint64_t>(cycle), kTagVoxel,
                                       static_cast<std::uint64_t>(v)));
                const Eigen::VectorXd lin = z * state.theta.col(v);
                if (config.update_noise) {
                    const AugmentedCounts n =
                        sample_counts(data.measurements.col(v), lin, state.sigma2(v), rng);
                    state.sigma2(v) = sample_sigma2(data.measurements.col(v), lin, n, rng);
                }
                if (config.separate_theta0) {
                    const AugmentedCounts n =
                        sample_counts(data.measurements.col(v), lin, state.sigma2(v), rng);
                    const Eigen::VectorXd lin_tensor = lin.array() - state.theta(0, v);
                    const auto t0 = sample_theta0(n, lin_tensor, state.sigma2(v), rng);
                    if (t0) state.theta(0, v) = *t0;
                }
            });
        }

        // hyperparameter Gibbs update (serial barrier)
        if (config.estimate_hyper && graph.edges.size() > 0) {
            Rng rng(substream_seed(config.seed, static_cast<std::uint64_t>(cycle), kTagHyper));
            switch (spec.family) {
                case ModelFamily::Tensor2:
                    state.hyper =
                        update_hyper_2nd(state.theta, graph, std::get<IsoPrecision2>(state.hyper), rng);
                    break;
                case ModelFamily::Tensor4:
                    state.hyper =
                        update_hyper_4th(state.theta, graph, std::get<IsoPrecision4>(state.hyper), rng);
                    break;
                case ModelFamily::SH:
                    state.hyper = update_hyper_sh(state.theta, graph,
                                                  std::get<PowerSpectrum>(state.hyper),
                                                  spec.sh_order, rng);
                    break;
            }
        }

        TraceRow row;
        row.cycle = cycle;
        row.loglik = rice_loglik();
        row.logprior = -field_prior_energy(state.theta, graph, hyper_omega(spec, state.hyper, config.rho));
        row.hyper = hyper_values(state.hyper);
        row.mean_acceptance = acc_den > 0.0 ? acc_num / acc_den : 0.0;
        if (!std::isfinite(row.loglik) || !std::isfinite(row.logprior))
            throw std::runtime_error("run_chain: non-finite state at cycle " +
                                     std::to_string(cycle));
        result.trace.push_back(std::move(row));

        state.cycle = cycle + 1;
        if ((cycle + 1) % config.thin == 0) record_sample(cycle + 1);
    }

    result.burnin = config.burnin >= 0 ? std::min(config.burnin, config.cycles)
                                       : select_burnin(result.trace, config.cycles);

    // summaries over post-burn-in thinned samples
    const int dcoeff = spec.coeff_dim();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(p, nv), sumsq = Eigen::MatrixXd::Zero(p, nv);
    Eigen::VectorXd ssum = Eigen::VectorXd::Zero(nv), ssumsq = Eigen::VectorXd::Zero(nv);
    Eigen::VectorXd positive = Eigen::VectorXd::Zero(nv);
    long nsamples = 0;
    for (std::size_t k = 0; k < result.theta_samples.size(); ++k) {
        if (result.sample_cycles[k] < result.burnin) continue;
        ++nsamples;
        sum += result.theta_samples[k];
        sumsq += result.theta_samples[k].cwiseAbs2();
        ssum += result.sigma2_samples[k];
        ssumsq += result.sigma2_samples[k].cwiseAbs2();
        for (int v = 0; v < nv; ++v)
            if (positivity_check(spec, result.theta_samples[k].col(v).tail(dcoeff), 1e-12,
                                 PositivityBudget{512, 8})
                    .verdict == Positivity::Positive)
                positive(v) += 1.0;
    }
    if (nsamples == 0) {
        // 0-cycle runs summarize the initializer
        sum = state.theta;
        sumsq = state.theta.cwiseAbs2();
        ssum = state.sigma2;
        ssumsq = state.sigma2.cwiseAbs2();
        for (int v = 0; v < nv; ++v)
            positive(v) = positivity_check(spec, state.theta.col(v).tail(dcoeff), 1e-12,
                                           PositivityBudget{512, 8})
                                  .verdict == Positivity::Positive
                              ? 1.0
                              : 0.0;
        nsamples = 1;
    }
    const double inv = 1.0 / static_cast<double>(nsamples);
    result.theta_mean = sum * inv;
    result.theta_sd = (sumsq * inv - result.theta_mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
    result.sigma2_mean = ssum * inv;
    result.sigma2_sd = (ssumsq * inv - result.sigma2_mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
    result.positive_fraction = positive * inv;
    result.acceptance = Eigen::VectorXd::Zero(nv);
    for (int v = 0; v < nv; ++v)
        result.acceptance(v) = attempts(v) > 0.0 ? accepts(v) / attempts(v) : 0.0;

    // hyper summaries over post-burn-in trace rows
    const std::size_t nh = result.hyper_names.size();
    result.hyper_mean.assign(nh, 0.0);
    result.hyper_sd.assign(nh, 0.0);
    long nrows = 0;
    for (const auto& row : result.trace) {
        if (row.cycle < result.burnin) continue;
        ++nrows;
        for (std::size_t h = 0; h < nh; ++h) result.hyper_mean[h] += row.hyper[h];
    }
    if (nrows > 0) {
        for (std::size_t h = 0; h < nh; ++h) result.hyper_mean[h] /= static_cast<double>(nrows);
        for (const auto& row : result.trace) {
            if (row.cycle < result.burnin) continue;
            for (std::size_t h = 0; h < nh; ++h) {
                const double dvl = row.hyper[h] - result.hyper_mean[h];
                result.hyper_sd[h] += dvl * dvl;
            }
        }
        for (std::size_t h = 0; h < nh; ++h)
            result.hyper_sd[h] = std::sqrt(result.hyper_sd[h] / static_cast<double>(nrows));
    } else {
        result.hyper_mean = hyper_values(state.hyper);
    }
    return result;
}

} // namespace ricefield
