#include <doctest.h>

#include "oracles.hpp"
#include "ricefield/chain.hpp"
#include "test_helpers.hpp"

using namespace ricefield;

namespace {

Dataset tiny_dataset(int nx, int ny, int nz, std::uint64_t seed) {
    PhantomSpec spec;
    spec.dims = {nx, ny, nz};
    const std::size_t total = static_cast<std::size_t>(nx * ny * nz);
    spec.mask.assign(total, 1);
    PhantomRegion region;
    region.model = ModelSpec::tensor2();
    region.coeffs = Tensor2{1.5e-3, 0.4e-3, 0.4e-3, 0, 0, 0}.coeffs();
    spec.regions.push_back(region);
    for (std::size_t v = 0; v < total; ++v) {
        spec.region_of_voxel.push_back(0);
        spec.s0.push_back(1000.0);
        spec.sigma2.push_back(40.0 * 40.0);
    }
    return simulate_phantom(spec, standard_scheme({600.0, 2000.0}), seed);
}

} // namespace

TEST_CASE("hyper update shapes and rates for the 2nd-order field") {
    // rates computed from the Omega-derivative quadratic forms as the oracle
    Rng rng(41);
    const VoxelGraph g =
        VoxelGraph::from_mask({2, 1, 1}, std::vector<std::uint8_t>{1, 1});
    Eigen::MatrixXd theta(7, 2);
    for (int v = 0; v < 2; ++v)
        for (int i = 0; i < 7; ++i) theta(i, v) = rng.normal();

    const Eigen::Matrix<double, 6, 1> d = theta.col(0).tail<6>() - theta.col(1).tail<6>();
    // d Omega(eta=0, lambda=1/3) d / 2 = delta-rate; (eta=1, lambda=-1/3) = eta-rate
    auto quad = [&](double eta, double lambda) {
        Eigen::Matrix<double, 6, 6> om = Eigen::Matrix<double, 6, 6>::Zero();
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) om(i, j) = lambda;
            om(i, i) = lambda + eta;
            om(i + 3, i + 3) = 2.0 * eta;
        }
        return 0.5 * d.dot(om * d);
    };
    const double rate_delta = quad(0.0, 1.0 / 3.0);
    const double rate_eta = quad(1.0, -1.0 / 3.0);
    CHECK(rate_eta >= 0.0);
    CHECK(rate_delta >= 0.0);

    std::vector<double> etas(100000), deltas(100000);
    for (std::size_t i = 0; i < etas.size(); ++i) {
        const IsoPrecision2 p = update_hyper_2nd(theta, g, {1.0, 0.0}, rng);
        etas[i] = p.eta;
        deltas[i] = p.delta();
    }
    const double ks_eta = oracles::ks_statistic(
        etas, [&](double x) { return oracles::gamma_cdf(x, 5.0 * 2.0 / 2.0, rate_eta); });
    const double ks_delta = oracles::ks_statistic(
        deltas, [&](double x) { return oracles::gamma_cdf(x, 2.0 / 2.0, rate_delta); });
    CHECK(ks_eta < 0.01);
    CHECK(ks_delta < 0.01);
}

TEST_CASE("2nd-order eta rate is nonnegative for any field") {
    Rng rng(42);
    for (int rep = 0; rep < 200; ++rep) {
        const Eigen::Matrix3d m = helpers::random_tensor2(rng).matrix();
        CHECK(0.5 * (m * m).trace() - m.trace() * m.trace() / 6.0 >= -1e-12);
    }
}

TEST_CASE("hyper update for the 4th-order field") {
    Rng rng(43);
    const VoxelGraph g =
        VoxelGraph::from_mask({2, 1, 1}, std::vector<std::uint8_t>{1, 1});
    Eigen::MatrixXd theta(16, 2);
    for (int v = 0; v < 2; ++v)
        for (int i = 0; i < 16; ++i) theta(i, v) = rng.normal();

    // oracle rates from the Omega-parameter derivatives:
    // d/d(alpha) [1/2 d' Omega d] with Omega linear in (alpha, beta, delta)
    const Eigen::Matrix<double, 15, 1> diff = theta.col(0).tail<15>() - theta.col(1).tail<15>();
    auto energy = [&](double a, double b, double dd) {
        // quadratic-form identity route, independent of the omega builder
        const IsoPrecision4 p = IsoPrecision4::from_alpha_beta_delta(a, b, dd);
        const Tensor4 t = Tensor4::from_coeffs(diff);
        const auto dh = dhat(t);
        return 0.5 * (p.eta * (dh * dh).trace() + p.lambda * dh.trace() * dh.trace() +
                      2.0 * p.gamma * g_invariant(t));
    };
    const double base = energy(1.0, 1.0, 1.0);
    const double rate_a = energy(2.0, 1.0, 1.0) - base;
    const double rate_b = energy(1.0, 2.0, 1.0) - base;
    const double rate_d = energy(1.0, 1.0, 2.0) - base;
    CHECK(rate_a >= 0.0);
    CHECK(rate_b >= 0.0);
    CHECK(rate_d >= 0.0);

    std::vector<double> alphas(50000), betas(50000), deltas(50000);
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const IsoPrecision4 p = update_hyper_4th(theta, g, {1.0, 0.0, 0.0}, rng);
        alphas[i] = p.alpha();
        betas[i] = p.beta();
        deltas[i] = p.delta();
        CHECK(p.valid());
    }
    CHECK(oracles::ks_statistic(alphas, [&](double x) {
              return oracles::gamma_cdf(x, 9.0, rate_a);
          }) < 0.01);
    CHECK(oracles::ks_statistic(betas, [&](double x) {
              return oracles::gamma_cdf(x, 5.0, rate_b);
          }) < 0.01);
    CHECK(oracles::ks_statistic(deltas, [&](double x) {
              return oracles::gamma_cdf(x, 1.0, rate_d);
          }) < 0.01);
}

TEST_CASE("alpha beta delta reparametrization") {
    const IsoPrecision4 p = IsoPrecision4::from_alpha_beta_delta(7.0, 7.0, 7.0);
    CHECK(p.eta == doctest::Approx(5.0));
    CHECK(p.gamma == doctest::Approx(2.0));
    CHECK(p.lambda == doctest::Approx(-1.6));
    CHECK(p.alpha() == doctest::Approx(7.0));
    CHECK(p.beta() == doctest::Approx(7.0));
    CHECK(p.delta() == doctest::Approx(7.0));
}

TEST_CASE("hyper update for the SH field") {
    Rng rng(44);
    const VoxelGraph g =
        VoxelGraph::from_mask({2, 1, 1}, std::vector<std::uint8_t>{1, 1});
    const int order = 1; // d = 6
    Eigen::MatrixXd theta(7, 2);
    for (int v = 0; v < 2; ++v)
        for (int i = 0; i < 7; ++i) theta(i, v) = rng.normal();

    const double rate0 = 0.5 * std::pow(theta(1, 0) - theta(1, 1), 2);
    const double rate2 =
        0.5 * (theta.col(0).segment(2, 5) - theta.col(1).segment(2, 5)).squaredNorm();

    PowerSpectrum cur;
    cur.a2l_sq = {1.0, 1.0};
    std::vector<double> prec0(50000), prec2(50000);
    for (std::size_t i = 0; i < prec0.size(); ++i) {
        const PowerSpectrum s = update_hyper_sh(theta, g, cur, order, rng);
        prec0[i] = 1.0 / s.a2l_sq[0];
        prec2[i] = 1.0 / s.a2l_sq[1];
    }
    // shapes (2l + 1/2)|V| with |V| = 2: 1 and 5
    CHECK(oracles::ks_statistic(prec0, [&](double x) {
              return oracles::gamma_cdf(x, 1.0, rate0);
          }) < 0.01);
    CHECK(oracles::ks_statistic(prec2, [&](double x) {
              return oracles::gamma_cdf(x, 5.0, rate2);
          }) < 0.01);

    // constant field in one degree: that degree is skipped
    Eigen::MatrixXd flat = theta;
    flat.row(1) = Eigen::RowVector2d(0.4, 0.4);
    PowerSpectrum marker;
    marker.a2l_sq = {123.0, 1.0};
    const PowerSpectrum s = update_hyper_sh(flat, g, marker, order, rng);
    CHECK(s.a2l_sq[0] == 123.0);
    CHECK(s.a2l_sq[1] != 1.0);
}

TEST_CASE("zero cycles summarizes the initializer") {
    const Dataset data = tiny_dataset(3, 3, 1, 99);
    ChainConfig cfg;
    cfg.model = ModelSpec::tensor2();
    cfg.cycles = 0;
    cfg.burnin = 0;
    const ChainResult res = run_chain(data, cfg);
    const WlsResult wls = wls_initialize(data, cfg.model, cfg.wls_b_max);
    CHECK((res.theta_mean - wls.theta).cwiseAbs().maxCoeff() == 0.0);
    CHECK((res.sigma2_mean - wls.sigma2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("chain output is identical across worker counts") {
    const Dataset data = tiny_dataset(4, 3, 2, 7);
    ChainConfig cfg;
    cfg.model = ModelSpec::tensor2();
    cfg.cycles = 30;
    cfg.burnin = 10;
    cfg.thin = 5;
    cfg.seed = 1234;
    cfg.block_radius = 1;

    cfg.workers = 1;
    const ChainResult a = run_chain(data, cfg);
    cfg.workers = 2;
    const ChainResult b = run_chain(data, cfg);
    cfg.workers = 8;
    const ChainResult c = run_chain(data, cfg);

    CHECK((a.theta_mean - b.theta_mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.theta_mean - c.theta_mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.sigma2_mean - c.sigma2_mean).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].loglik == c.trace[i].loglik);
        CHECK(a.trace[i].hyper == c.trace[i].hyper);
    }
}

TEST_CASE("constrained mode produces only positive draws") {
    const Dataset data = tiny_dataset(3, 3, 1, 5);
    ChainConfig cfg;
    cfg.model = ModelSpec::tensor2();
    cfg.cycles = 20;
    cfg.burnin = 0;
    cfg.thin = 1;
    cfg.positivity = PositivityMode::Constrained;
    const ChainResult res = run_chain(data, cfg);
    CHECK(res.positive_fraction.minCoeff() == 1.0);

    cfg.positivity = PositivityMode::Counting;
    const ChainResult res2 = run_chain(data, cfg);
    CHECK(res2.positive_fraction.minCoeff() >= 0.0);
    CHECK(res2.positive_fraction.maxCoeff() <= 1.0);
}

TEST_CASE("separate theta0 update and intrinsic prior run deterministically") {
    const Dataset data = tiny_dataset(3, 3, 1, 23);
    ChainConfig cfg;
    cfg.model = ModelSpec::tensor2();
    cfg.cycles = 15;
    cfg.burnin = 5;
    cfg.thin = 5;
    cfg.separate_theta0 = true;
    cfg.rho = 0.5;
    const ChainResult a = run_chain(data, cfg);
    cfg.workers = 4;
    const ChainResult b = run_chain(data, cfg);
    CHECK((a.theta_mean - b.theta_mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.theta_mean.row(0).minCoeff() > 0.0); // log S0 stays near log(1000)
}

TEST_CASE("hyper draws stay in the constraint region") {
    const Dataset data = tiny_dataset(3, 3, 2, 17);
    ChainConfig cfg;
    cfg.model = ModelSpec::tensor2();
    cfg.cycles = 50;
    cfg.burnin = 0;
    cfg.thin = 10;
    const ChainResult res = run_chain(data, cfg);
    for (const auto& row : res.trace) {
        const IsoPrecision2 p{row.hyper[0], row.hyper[1]};
        CHECK(p.valid());
    }
}

TEST_CASE("single voxel at SNR 20 recovers the principal direction") {
    PhantomSpec spec;
    spec.dims = {1, 1, 1};
    spec.mask = {1};
    PhantomRegion region;
    region.model = ModelSpec::tensor2();
    const Eigen::Vector3d truth = Eigen::Vector3d(1.0, 0.4, 0.0).normalized();
    Eigen::Matrix3d m = 0.3e-3 * Eigen::Matrix3d::Identity() + 1.4e-3 * truth * truth.transpose();
    region.coeffs = Tensor2::from_matrix(m).coeffs();
    spec.regions.push_back(region);
    spec.region_of_voxel = {0};
    spec.s0 = {1000.0};
    spec.sigma2 = {50.0 * 50.0};
    GradientScheme sch = standard_scheme({500.0, 1500.0, 3500.0});
    sch.entries.erase(sch.entries.begin()); // 96 acquisitions
    const Dataset data = simulate_phantom(spec, sch, 51);

    ChainConfig cfg;
    cfg.model = ModelSpec::tensor2();
    cfg.cycles = 400;
    cfg.burnin = 100;
    cfg.thin = 5;
    cfg.seed = 52;
    const ChainResult res = run_chain(data, cfg);
    const Eigen::Vector3d est =
        principal_direction(Tensor2::from_coeffs(res.theta_mean.col(0).tail<6>()));
    const double angle = std::acos(std::min(1.0, std::fabs(est.dot(truth)))) * 180.0 / M_PI;
    CHECK(angle < 5.0);
}

TEST_CASE("tensor4 and SH chains run and keep their hyper structure") {
    const Dataset data = tiny_dataset(3, 3, 1, 31);
    for (const ModelSpec spec : {ModelSpec::tensor4(), ModelSpec::sh(1)}) {
        ChainConfig cfg;
        cfg.model = spec;
        cfg.cycles = 10;
        cfg.burnin = 0;
        cfg.thin = 5;
        cfg.block_radius = 1;
        const ChainResult res = run_chain(data, cfg);
        CHECK(res.theta_mean.rows() == spec.param_dim());
        CHECK(res.trace.size() == 10);
        if (spec.family == ModelFamily::Tensor4) {
            for (const auto& row : res.trace) {
                const IsoPrecision4 p{row.hyper[0], row.hyper[1], row.hyper[2]};
                CHECK(p.valid());
            }
        } else {
            for (const auto& row : res.trace)
                for (double a : row.hyper) CHECK(a > 0.0);
        }
        // acceptance is healthy on this easy problem
        double acc = 0.0;
        for (const auto& row : res.trace) acc += row.mean_acceptance;
        CHECK(acc / static_cast<double>(res.trace.size()) > 0.2);
    }
}

TEST_CASE("burn-in heuristic finds the flat region") {
    std::vector<TraceRow> trace;
    Rng rng(45);
    for (long c = 0; c < 1500; ++c) {
        TraceRow row;
        row.cycle = c;
        // steep transient for 300 cycles, then stationary noise
        row.loglik = c < 300 ? -1000.0 + 3.0 * c : -100.0 + rng.normal();
        row.logprior = 0.0;
        trace.push_back(row);
    }
    const long burnin = select_burnin(trace, 1500);
    CHECK(burnin >= 250);
    CHECK(burnin <= 600);
}
