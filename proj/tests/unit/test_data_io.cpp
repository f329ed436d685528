#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "ricefield/data_io.hpp"
#include "ricefield/rice.hpp"
#include "test_helpers.hpp"

using namespace ricefield;

namespace {

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "ricefield_test_io";
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("noiseless simulation reproduces the forward model exactly up to float32") {
    PhantomSpec spec = standard_crossing_phantom(false);
    for (auto& s : spec.sigma2) s = 0.0;
    // sigma = 0 is outside RiceParams but fine for the forward model
    const GradientScheme scheme = standard_scheme({1000.0});
    // direct simulation with zero noise: hypot(signal, 0) = signal
    Dataset data;
    CHECK_NOTHROW(data = simulate_phantom(spec, scheme, 1));
    int row = 0;
    for (const auto& e : scheme.entries) {
        for (int k = 0; k < e.repeats; ++k, ++row) {
            for (int v : {0, 100, 300}) {
                const double d = e.b > 0 ? phantom_diffusivity(spec, v, e.u) : 0.0;
                const float expect = static_cast<float>(1000.0 * std::exp(-e.b * d));
                CHECK(data.measurements(row, v) == doctest::Approx(expect).epsilon(1e-7));
            }
        }
    }
}

TEST_CASE("isotropic voxels have direction-independent signal") {
    PhantomSpec spec = standard_crossing_phantom(false);
    for (auto& s : spec.sigma2) s = 0.0;
    const GradientScheme scheme = standard_scheme({2500.0});
    const Dataset data = simulate_phantom(spec, scheme, 2);
    // voxel 0 is background (isotropic)
    REQUIRE(spec.region_of_voxel[0] == RegionBackground);
    const double first = data.measurements(1, 0);
    for (int r = 1; r < data.measurements.rows(); ++r)
        CHECK(data.measurements(r, 0) == doctest::Approx(first).epsilon(1e-6));
}

TEST_CASE("simulated magnitudes follow the Rice law") {
    PhantomSpec spec;
    spec.dims = {1, 1, 1};
    spec.mask = {1};
    PhantomRegion region;
    region.model = ModelSpec::tensor2();
    region.coeffs = Tensor2{1e-3, 1e-3, 1e-3, 0, 0, 0}.coeffs();
    spec.regions.push_back(region);
    spec.region_of_voxel = {0};
    spec.s0 = {100.0};
    spec.sigma2 = {50.0 * 50.0};

    GradientScheme scheme;
    scheme.entries.push_back({Eigen::Vector3d(0, 0, 1), 1000.0, 20000});
    const Dataset data = simulate_phantom(spec, scheme, 3);

    const double nu = 100.0 * std::exp(-1.0); // b d = 1
    std::vector<double> ys(static_cast<std::size_t>(data.measurements.rows()));
    for (Eigen::Index i = 0; i < data.measurements.rows(); ++i)
        ys[static_cast<std::size_t>(i)] = data.measurements(i, 0);
    // CDF by quadrature of the density
    auto cdf = [&](double y) {
        if (y <= 0.0) return 0.0;
        return oracles::integrate(
            [&](double t) {
                return t <= 0.0 ? 0.0 : std::exp(rice_log_density(t, {nu, 2500.0}));
            },
            0.0, y, 1e-10);
    };
    CHECK(oracles::ks_statistic(ys, cdf) < 0.015);
}

TEST_CASE("quantized phantom contains zeros at high b") {
    PhantomSpec spec = standard_crossing_phantom(true);
    const GradientScheme scheme = standard_scheme({500.0, 1500.0, 14000.0});
    const Dataset data = simulate_phantom(spec, scheme, 4);
    CHECK(data.quantized);
    long zeros = 0;
    for (Eigen::Index v = 0; v < data.measurements.cols(); ++v)
        for (Eigen::Index r = 0; r < data.measurements.rows(); ++r) {
            const double y = data.measurements(r, v);
            CHECK(y == std::floor(y));
            zeros += y == 0.0;
        }
    CHECK(zeros > 0);
}

TEST_CASE("wls initializer recovers noiseless parameters") {
    PhantomSpec spec = standard_crossing_phantom(false);
    for (auto& s : spec.sigma2) s = 0.0;
    const GradientScheme scheme = standard_scheme({400.0, 900.0, 1600.0});
    const Dataset data = simulate_phantom(spec, scheme, 5);
    const WlsResult wls = wls_initialize(data, ModelSpec::tensor2(), 5000.0);

    const VoxelGraph graph = data.graph();
    for (int v : {0, 7, 120, 400}) {
        const int region = spec.region_of_voxel[static_cast<std::size_t>(v)];
        if (spec.regions[static_cast<std::size_t>(region)].model.family != ModelFamily::Tensor2)
            continue;
        CHECK(wls.theta(0, v) == doctest::Approx(std::log(1000.0)).epsilon(1e-6));
        const Eigen::VectorXd expect = spec.regions[static_cast<std::size_t>(region)].coeffs;
        // float32 storage bounds the attainable accuracy
        CHECK((wls.theta.col(v).tail<6>() - expect).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("wls is a fixed point at convergence") {
    const PhantomSpec spec = standard_crossing_phantom(false);
    const Dataset data = simulate_phantom(spec, standard_scheme({600.0, 1800.0}), 6);
    const WlsResult a = wls_initialize(data, ModelSpec::tensor2(), 5000.0);
    const WlsResult b = wls_initialize(data, ModelSpec::tensor2(), 5000.0);
    CHECK((a.theta - b.theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("wls direction accuracy on the moderate-SNR phantom") {
    const PhantomSpec spec = standard_crossing_phantom(false);
    const Dataset data = simulate_phantom(spec, standard_scheme({500.0, 1500.0, 3500.0}), 7);
    const WlsResult wls = wls_initialize(data, ModelSpec::tensor2(), 5000.0);
    long ok = 0, total = 0;
    for (std::size_t v = 0; v < spec.region_of_voxel.size(); ++v) {
        const int region = spec.region_of_voxel[v];
        if (region != RegionFiberX && region != RegionFiberY) continue;
        ++total;
        const Eigen::Vector3d truth =
            region == RegionFiberX ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
        const Eigen::Vector3d est = principal_direction(
            Tensor2::from_coeffs(wls.theta.col(static_cast<Eigen::Index>(v)).tail<6>()));
        const double angle = std::acos(std::min(1.0, std::fabs(est.dot(truth)))) * 180.0 / M_PI;
        ok += angle < 10.0;
    }
    CHECK(total > 0);
    CHECK(static_cast<double>(ok) / static_cast<double>(total) >= 0.9);
}

TEST_CASE("refitting reproduces the mean signal at high SNR") {
    PhantomSpec spec = standard_crossing_phantom(false);
    for (auto& s : spec.sigma2) s = 25.0; // sigma = 5, SNR 200
    const GradientScheme scheme = standard_scheme({400.0, 1200.0});
    const Dataset data = simulate_phantom(spec, scheme, 77);
    const WlsResult wls = wls_initialize(data, ModelSpec::tensor2(), 5000.0);
    const Eigen::MatrixXd z = build_design_matrix(scheme, ModelSpec::tensor2());
    for (int v : {0, 50, 200, 511}) {
        if (spec.regions[static_cast<std::size_t>(
                             spec.region_of_voxel[static_cast<std::size_t>(v)])]
                .model.family != ModelFamily::Tensor2)
            continue;
        const Eigen::VectorXd predicted = (z * wls.theta.col(v)).array().exp();
        int row = 0;
        for (const auto& e : scheme.entries) {
            const double d = e.b > 0 ? phantom_diffusivity(spec, v, e.u) : 0.0;
            const double truth = 1000.0 * std::exp(-e.b * d);
            for (int k = 0; k < e.repeats; ++k, ++row)
                CHECK(predicted(row) == doctest::Approx(truth).epsilon(0.02));
        }
    }
}

TEST_CASE("dataset round trip is bit exact") {
    const PhantomSpec spec = standard_crossing_phantom(true);
    const Dataset data = simulate_phantom(spec, standard_scheme({700.0}), 8);
    const auto dir = temp_dir();
    const std::string path = (dir / "roundtrip.dtset").string();
    save_dataset(data, path);
    const Dataset back = load_dataset(path);
    CHECK(back.dims == data.dims);
    CHECK(back.mask == data.mask);
    CHECK(back.quantized == data.quantized);
    CHECK(back.scheme.entries.size() == data.scheme.entries.size());
    CHECK((back.measurements - data.measurements).cwiseAbs().maxCoeff() == 0.0);
    // saving the loaded dataset reproduces identical bytes
    const std::string path2 = (dir / "roundtrip2.dtset").string();
    save_dataset(back, path2);
    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    CHECK(slurp(path.substr(0, path.size() - 6) + ".dtraw") ==
          slurp(path2.substr(0, path2.size() - 6) + ".dtraw"));
}

TEST_CASE("truncated dataset file fails to load") {
    const PhantomSpec spec = standard_crossing_phantom(false);
    const Dataset data = simulate_phantom(spec, standard_scheme({700.0}), 9);
    const auto dir = temp_dir();
    const std::string path = (dir / "trunc.dtset").string();
    save_dataset(data, path);
    // truncate the raw array
    const std::string raw = path.substr(0, path.size() - 6) + ".dtraw";
    std::filesystem::resize_file(raw, std::filesystem::file_size(raw) / 2);
    CHECK_THROWS(load_dataset(path));
}

TEST_CASE("published acquisition table parses") {
    // 32 directions x 16 b-values with 2-3 repetitions
    const auto dir = temp_dir();
    const std::string path = (dir / "published.scheme").string();
    std::ofstream out(path);
    const double bvals[16] = {0,    62,   249,  560,  996,   1556,  2240,  3049,
                              3982, 5040, 6222, 7529, 8960, 10516, 12196, 14000};
    for (int bi = 0; bi < 16; ++bi) {
        if (bvals[bi] == 0) {
            out << "0 0 0 0 3\n";
            continue;
        }
        for (const auto& d : standard_directions)
            out << d[0] << ' ' << d[1] << ' ' << d[2] << ' ' << bvals[bi] << " "
                << (bi < 5 ? 3 : 2) << "\n";
    }
    out.close();
    const GradientScheme scheme = GradientScheme::load(path);
    CHECK(scheme.entries.size() == 1 + 15 * 32);
    for (const auto& e : scheme.entries) {
        CHECK((e.repeats == 2 || e.repeats == 3));
        if (e.b > 0) CHECK(std::fabs(e.u.norm() - 1.0) < 1e-6);
    }
}
