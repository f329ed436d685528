#include "ricefield/data_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ricefield/rng.hpp"

// the dataset array format is little-endian float32 on disk
static_assert(std::endian::native == std::endian::little,
              "dataset I/O writes raw float32 and needs byte swapping on this platform");

namespace ricefield {

const std::array<std::array<double, 3>, 32> standard_directions = {{
    {-0.5000, -0.5000, -0.7071}, {-0.5000, -0.5000, 0.7071},
    {0.7071, -0.7071, -0.0000},  {-0.6533, -0.2706, -0.7071},
    {-0.2087, -0.6756, -0.7071}, {0.0197, -0.7068, -0.7071},
    {0.4212, -0.5679, -0.7071},  {0.6899, -0.1549, -0.7071},
    {-0.6535, -0.2707, -0.7069}, {-0.2929, -0.7071, -0.6436},
    {0.2945, -0.7064, -0.6436},  {0.5150, -0.4861, -0.7061},
    {0.7071, -0.2929, -0.6436},  {-0.7071, -0.4725, -0.5261},
    {-0.4725, -0.7071, -0.5261}, {0.5555, -0.6439, -0.5261},
    {0.7071, -0.4725, -0.5261},  {-0.7071, -0.7071, -0.0002},
    {-0.7071, -0.4725, 0.5261},  {0.7071, -0.4725, 0.5261},
    {0.4725, -0.7071, 0.5261},   {-0.7071, -0.7071, 0.0078},
    {-0.6364, -0.4252, 0.6436},  {-0.7060, -0.7060, 0.0547},
    {-0.2929, -0.7071, 0.6436},  {0.2929, -0.7071, 0.6436},
    {0.7071, -0.7071, 0.0078},   {0.7071, -0.2929, 0.6436},
    {-0.7063, -0.7063, 0.0489},  {0.0347, -0.7063, 0.7071},
    {0.7071, -0.7071, 0.0115},   {0.7071, 0.0000, 0.7071},
}};

GradientScheme standard_scheme(const std::vector<double>& b_shells, int repeats) {
    GradientScheme scheme;
    scheme.entries.push_back({Eigen::Vector3d(0, 0, 0), 0.0, repeats});
    for (double b : b_shells)
        for (const auto& d : standard_directions) {
            Eigen::Vector3d u(d[0], d[1], d[2]);
            scheme.entries.push_back({u.normalized(), b, repeats});
        }
    return scheme;
}

PhantomSpec standard_crossing_phantom(bool quantize) {
    PhantomSpec spec;
    spec.dims = {16, 16, 2};
    spec.voxel_size_mm = {1.875, 1.875, 5.0};
    const std::size_t total = 16 * 16 * 2;
    spec.mask.assign(total, 1);
    spec.quantize = quantize;

    auto tensor2_region = [](double dx, double dy, double dz) {
        PhantomRegion r;
        r.model = ModelSpec::tensor2();
        Eigen::Matrix<double, 6, 1> c;
        c << dx, dy, dz, 0, 0, 0;
        r.coeffs = c;
        return r;
    };
    spec.regions.push_back(tensor2_region(0.8e-3, 0.8e-3, 0.8e-3)); // background
    spec.regions.push_back(tensor2_region(1.7e-3, 0.3e-3, 0.3e-3)); // fiber along x
    spec.regions.push_back(tensor2_region(0.3e-3, 1.7e-3, 0.3e-3)); // fiber along y
    {
        // crossing: d(u) = 1.4e-3 (ux^4 + uy^4) + 0.3e-3
        PhantomRegion r;
        r.model = ModelSpec::tensor4();
        Tensor4 t;
        const double a = 1.4e-3, iso = 0.3e-3;
        t[T4_1111] = a + iso;
        t[T4_2222] = a + iso;
        t[T4_3333] = iso;
        // isotropic part: D_iijj = iso/3 so that sum u_i^2 u_j^2 terms close |u|^4
        t[T4_1122] = iso / 3.0;
        t[T4_1133] = iso / 3.0;
        t[T4_2233] = iso / 3.0;
        r.coeffs = t.coeffs();
        spec.regions.push_back(r);
    }

    for (int z = 0; z < 2; ++z)
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                const bool in_x_band = (y >= 6 && y <= 9);
                const bool in_y_band = (x >= 6 && x <= 9);
                int region = RegionBackground;
                if (in_x_band && in_y_band) region = RegionCrossing;
                else if (in_x_band) region = RegionFiberX;
                else if (in_y_band) region = RegionFiberY;
                spec.region_of_voxel.push_back(region);
                spec.s0.push_back(1000.0);
                spec.sigma2.push_back(z == 0 ? 20.0 * 20.0 : 50.0 * 50.0);
            }
    return spec;
}

double phantom_diffusivity(const PhantomSpec& spec, int voxel, const Eigen::Vector3d& u) {
    const auto& region = spec.regions[static_cast<std::size_t>(
        spec.region_of_voxel[static_cast<std::size_t>(voxel)])];
    return diffusivity_eval(region.model, region.coeffs, u);
}

Dataset simulate_phantom(const PhantomSpec& spec, const GradientScheme& scheme,
                         std::uint64_t seed) {
    const std::size_t total =
        static_cast<std::size_t>(spec.dims[0]) * spec.dims[1] * spec.dims[2];
    if (spec.mask.size() != total) throw std::invalid_argument("simulate_phantom: mask size");
    std::size_t nmask = 0;
    for (auto m : spec.mask) nmask += m ? 1 : 0;
    if (spec.region_of_voxel.size() != nmask || spec.s0.size() != nmask ||
        spec.sigma2.size() != nmask)
        throw std::invalid_argument("simulate_phantom: per-voxel maps must be in mask order");

    Dataset data;
    data.dims = spec.dims;
    data.voxel_size_mm = spec.voxel_size_mm;
    data.mask = spec.mask;
    data.scheme = scheme;
    data.quantized = spec.quantize;
    const int m = scheme.total_acquisitions();
    data.measurements.resize(m, static_cast<Eigen::Index>(nmask));

    for (std::size_t v = 0; v < nmask; ++v) {
        Rng rng(substream_seed(seed, 0x9aa11ULL, v));
        const double sigma = std::sqrt(spec.sigma2[v]);
        int row = 0;
        for (const auto& e : scheme.entries) {
            const double d = e.b > 0.0 ? phantom_diffusivity(spec, static_cast<int>(v), e.u) : 0.0;
            const double signal = spec.s0[v] * std::exp(-e.b * d);
            for (int k = 0; k < e.repeats; ++k) {
                const double re = signal + sigma * rng.normal();
                const double im = sigma * rng.normal();
                double y = std::hypot(re, im);
                if (spec.quantize) y = std::floor(y);
                data.measurements(row++, static_cast<Eigen::Index>(v)) =
                    static_cast<double>(static_cast<float>(y));
            }
        }
    }
    return data;
}

WlsResult wls_initialize(const Dataset& data, const ModelSpec& spec, double b_max) {
    const Eigen::MatrixXd z = build_design_matrix(data.scheme, spec);
    const int p = spec.param_dim();
    const int nv = data.voxel_count();

    // acquisition rows retained by the b-value filter
    std::vector<int> row_of;
    {
        int r = 0;
        for (const auto& e : data.scheme.entries)
            for (int k = 0; k < e.repeats; ++k, ++r)
                if (e.b <= b_max) row_of.push_back(r);
    }

    WlsResult out;
    out.theta = Eigen::MatrixXd::Zero(p, nv);
    out.sigma2 = Eigen::VectorXd::Ones(nv);
    out.flagged.assign(static_cast<std::size_t>(nv), 1);

    for (int v = 0; v < nv; ++v) {
        std::vector<int> rows;
        for (int r : row_of)
            if (data.measurements(r, v) > 0.0) rows.push_back(r);
        if (static_cast<int>(rows.size()) < p + 1) continue;

        Eigen::MatrixXd zv(rows.size(), p);
        Eigen::VectorXd logy(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            zv.row(static_cast<Eigen::Index>(i)) = z.row(rows[i]);
            logy(static_cast<Eigen::Index>(i)) = std::log(data.measurements(rows[i], v));
        }

        Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(rows.size()));
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
        bool ok = false;
        for (int it = 0; it < 25; ++it) {
            const Eigen::MatrixXd zw = w.asDiagonal() * zv;
            const Eigen::MatrixXd normal = zv.transpose() * zw;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
            const Eigen::VectorXd next = ldlt.solve(zv.transpose() * (w.asDiagonal() * logy));
            if (!next.allFinite()) break;
            const double delta = (next - theta).norm();
            theta = next;
            // variance of log Y is sigma^2 exp(-2 Z theta): weight with its inverse
            w = (2.0 * (zv * theta).array()).exp().cwiseMax(1e-6).cwiseMin(1e6);
            if (delta < 1e-8 * (1.0 + theta.norm())) {
                ok = true;
                break;
            }
        }
        if (!ok) continue;

        const Eigen::VectorXd resid = logy - zv * theta;
        const double dof = static_cast<double>(rows.size()) - p;
        const double s2 = (w.array() * resid.array().square()).sum() / std::max(dof, 1.0);
        if (!(s2 > 0.0) || !std::isfinite(s2)) continue;
        out.theta.col(v) = theta;
        out.sigma2(v) = s2;
        out.flagged[static_cast<std::size_t>(v)] = 0;
    }

    // fill failures from the nearest fitted neighbor (BFS over the voxel graph)
    const VoxelGraph graph = data.graph();
    std::deque<int> frontier;
    std::vector<int> source(static_cast<std::size_t>(nv), -1);
    for (int v = 0; v < nv; ++v)
        if (!out.flagged[static_cast<std::size_t>(v)]) {
            source[static_cast<std::size_t>(v)] = v;
            frontier.push_back(v);
        }
    if (frontier.empty()) throw std::runtime_error("wls_initialize: no voxel could be fitted");
    while (!frontier.empty()) {
        const int v = frontier.front();
        frontier.pop_front();
        for (int w : graph.neighbors[static_cast<std::size_t>(v)])
            if (source[static_cast<std::size_t>(w)] < 0) {
                source[static_cast<std::size_t>(w)] = source[static_cast<std::size_t>(v)];
                frontier.push_back(w);
            }
    }
    for (int v = 0; v < nv; ++v)
        if (out.flagged[static_cast<std::size_t>(v)]) {
            const int s = source[static_cast<std::size_t>(v)];
            if (s >= 0) {
                out.theta.col(v) = out.theta.col(s);
                out.sigma2(v) = out.sigma2(s);
            }
        }
    return out;
}

namespace {

std::string data_path_for(const std::string& header_path) {
    const auto dot = header_path.rfind('.');
    const std::string stem =
        (dot == std::string::npos) ? header_path : header_path.substr(0, dot);
    return stem + ".dtraw";
}

std::string basename_of(const std::string& path) {
    const auto slash = path.find_last_of('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

std::string dirname_of(const std::string& path) {
    const auto slash = path.find_last_of('/');
    return slash == std::string::npos ? std::string() : path.substr(0, slash + 1);
}

} // namespace

void save_dataset(const Dataset& data, const std::string& path) {
    const std::string raw_path = data_path_for(path);
    const std::string scheme_path = path + ".scheme";
    data.scheme.save(scheme_path);

    std::ofstream hdr(path);
    if (!hdr) throw std::runtime_error("cannot write dataset header '" + path + "'");
    hdr << "ricefield dataset v1\n";
    hdr << "dims: " << data.dims[0] << ' ' << data.dims[1] << ' ' << data.dims[2] << '\n';
    char buf[128];
    std::snprintf(buf, sizeof buf, "voxel_size_mm: %.17g %.17g %.17g\n", data.voxel_size_mm[0],
                  data.voxel_size_mm[1], data.voxel_size_mm[2]);
    hdr << buf;
    hdr << "scheme: " << basename_of(scheme_path) << '\n';
    hdr << "quantized: " << (data.quantized ? 1 : 0) << '\n';
    hdr << "acquisitions: " << data.measurements.rows() << '\n';
    hdr << "data: " << basename_of(raw_path) << '\n';
    hdr << "mask:\n";
    std::size_t gi = 0;
    for (int zc = 0; zc < data.dims[2]; ++zc)
        for (int yc = 0; yc < data.dims[1]; ++yc) {
            std::string line;
            for (int xc = 0; xc < data.dims[0]; ++xc)
                line += data.mask[gi++] ? '1' : '0';
            hdr << line << '\n';
        }
    if (!hdr) throw std::runtime_error("failed writing dataset header '" + path + "'");

    std::ofstream raw(raw_path, std::ios::binary);
    if (!raw) throw std::runtime_error("cannot write dataset array '" + raw_path + "'");
    std::vector<float> column(static_cast<std::size_t>(data.measurements.rows()));
    for (Eigen::Index v = 0; v < data.measurements.cols(); ++v) {
        for (Eigen::Index r = 0; r < data.measurements.rows(); ++r)
            column[static_cast<std::size_t>(r)] = static_cast<float>(data.measurements(r, v));
        raw.write(reinterpret_cast<const char*>(column.data()),
                  static_cast<std::streamsize>(column.size() * sizeof(float)));
    }
    if (!raw) throw std::runtime_error("failed writing dataset array '" + raw_path + "'");
}

Dataset load_dataset(const std::string& path) {
    std::ifstream hdr(path);
    if (!hdr) throw std::runtime_error("cannot open dataset header '" + path + "'");
    auto fail = [&](const std::string& what) -> std::runtime_error {
        return std::runtime_error(path + ": " + what);
    };

    std::string line;
    if (!std::getline(hdr, line) || line != "ricefield dataset v1")
        throw fail("not a ricefield dataset header");

    Dataset data;
    std::string scheme_name, data_name;
    long acquisitions = -1;
    while (std::getline(hdr, line)) {
        if (line == "mask:") break;
        std::istringstream row(line);
        std::string key;
        row >> key;
        if (key == "dims:") row >> data.dims[0] >> data.dims[1] >> data.dims[2];
        else if (key == "voxel_size_mm:")
            row >> data.voxel_size_mm[0] >> data.voxel_size_mm[1] >> data.voxel_size_mm[2];
        else if (key == "scheme:") row >> scheme_name;
        else if (key == "quantized:") { int q; row >> q; data.quantized = q != 0; }
        else if (key == "acquisitions:") row >> acquisitions;
        else if (key == "data:") row >> data_name;
        else throw fail("unknown header key '" + key + "'");
        if (!row) throw fail("malformed header line '" + line + "'");
    }
    if (data.dims[0] <= 0 || data.dims[1] <= 0 || data.dims[2] <= 0)
        throw fail("missing or invalid dims");
    if (scheme_name.empty() || data_name.empty() || acquisitions < 0)
        throw fail("incomplete header");

    const std::size_t total =
        static_cast<std::size_t>(data.dims[0]) * data.dims[1] * data.dims[2];
    data.mask.reserve(total);
    for (int zc = 0; zc < data.dims[2]; ++zc)
        for (int yc = 0; yc < data.dims[1]; ++yc) {
            if (!std::getline(hdr, line) || static_cast<int>(line.size()) != data.dims[0])
                throw fail("truncated mask");
            for (char c : line) {
                if (c != '0' && c != '1') throw fail("mask must be rows of 0/1");
                data.mask.push_back(c == '1');
            }
        }

    data.scheme = GradientScheme::load(dirname_of(path) + scheme_name);
    if (data.scheme.total_acquisitions() != acquisitions)
        throw fail("scheme does not match the acquisition count");

    std::size_t nmask = 0;
    for (auto m : data.mask) nmask += m ? 1 : 0;
    std::ifstream raw(dirname_of(path) + data_name, std::ios::binary);
    if (!raw) throw fail("cannot open data array '" + data_name + "'");
    data.measurements.resize(acquisitions, static_cast<Eigen::Index>(nmask));
    std::vector<float> column(static_cast<std::size_t>(acquisitions));
    for (std::size_t v = 0; v < nmask; ++v) {
        raw.read(reinterpret_cast<char*>(column.data()),
                 static_cast<std::streamsize>(column.size() * sizeof(float)));
        if (!raw) throw fail("truncated data array");
        for (long r = 0; r < acquisitions; ++r)
            data.measurements(r, static_cast<Eigen::Index>(v)) = column[static_cast<std::size_t>(r)];
    }
    char extra;
    if (raw.read(&extra, 1)) throw fail("data array longer than expected");
    return data;
}

} // namespace ricefield
