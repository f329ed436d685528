#include "ricefield/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "ricefield/rice.hpp"
#include "ricefield/sh.hpp"

namespace ricefield {

double rice_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& linpred, double sigma2) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y(i) > 0.0)
            ll += rice_log_density(y(i), RiceParams{std::exp(std::min(linpred(i), 300.0)), sigma2});
    return -2.0 * ll;
}

DicReport compute_dic(const ChainResult& chain, const Dataset& data, const ModelSpec& spec) {
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < chain.theta_samples.size(); ++k)
        if (chain.sample_cycles[k] >= chain.burnin) kept.push_back(k);
    if (kept.size() < 2)
        throw std::invalid_argument("compute_dic: need at least two post-burn-in samples");

    const Eigen::MatrixXd z = build_design_matrix(data.scheme, spec);
    const int nv = data.voxel_count();

    DicReport rep;
    rep.dic_voxel = Eigen::VectorXd::Zero(nv);
    rep.n_eff_voxel = Eigen::VectorXd::Zero(nv);

    Eigen::VectorXd mean_dev = Eigen::VectorXd::Zero(nv);
    Eigen::MatrixXd theta_mean = Eigen::MatrixXd::Zero(z.cols(), nv);
    Eigen::VectorXd sigma2_mean = Eigen::VectorXd::Zero(nv);
    for (std::size_t k : kept) {
        theta_mean += chain.theta_samples[k];
        sigma2_mean += chain.sigma2_samples[k];
    }
    theta_mean /= static_cast<double>(kept.size());
    sigma2_mean /= static_cast<double>(kept.size());

    for (int v = 0; v < nv; ++v) {
        double dev = 0.0;
        for (std::size_t k : kept)
            dev += rice_deviance(data.measurements.col(v), z * chain.theta_samples[k].col(v),
                                 chain.sigma2_samples[k](v));
        mean_dev(v) = dev / static_cast<double>(kept.size());
        const double at_mean =
            rice_deviance(data.measurements.col(v), z * theta_mean.col(v), sigma2_mean(v));
        rep.n_eff_voxel(v) = mean_dev(v) - at_mean;
        rep.dic_voxel(v) = mean_dev(v) + rep.n_eff_voxel(v);
        rep.mean_deviance += mean_dev(v);
        rep.deviance_at_mean += at_mean;
    }
    rep.n_eff = rep.mean_deviance - rep.deviance_at_mean;
    rep.dic = rep.mean_deviance + rep.n_eff;
    return rep;
}

Eigen::VectorXd map_values(const ChainResult& chain, const ModelSpec& spec, MapKind kind) {
    const int nv = static_cast<int>(chain.theta_mean.cols());
    Eigen::VectorXd vals(nv);
    for (int v = 0; v < nv; ++v) {
        switch (kind) {
            case MapKind::Acceptance: vals(v) = chain.acceptance(v); break;
            case MapKind::Sigma2: vals(v) = chain.sigma2_mean(v); break;
            case MapKind::FA:
            case MapKind::MD: {
                Tensor2 t;
                const Eigen::VectorXd coeffs = chain.theta_mean.col(v).tail(spec.coeff_dim());
                switch (spec.family) {
                    case ModelFamily::Tensor2: t = Tensor2::from_coeffs(coeffs); break;
                    case ModelFamily::Tensor4:
                        t = project_4th_to_2nd(Tensor4::from_coeffs(coeffs));
                        break;
                    case ModelFamily::SH: {
                        if (spec.sh_order < 1)
                            throw std::invalid_argument("map_values: SH order too low for FA/MD");
                        t = tensor2_from_sh(coeffs.head(6));
                        break;
                    }
                }
                const auto [fa, md] = fa_md_2nd(t);
                vals(v) = kind == MapKind::FA ? fa : md;
                break;
            }
        }
    }
    return vals;
}

namespace {

const char* map_name(MapKind kind) {
    switch (kind) {
        case MapKind::FA: return "fa";
        case MapKind::MD: return "md";
        case MapKind::Acceptance: return "acceptance";
        case MapKind::Sigma2: return "sigma2";
    }
    return "?";
}

} // namespace

std::vector<std::string> export_maps(const ChainResult& chain, const Dataset& data,
                                     const ModelSpec& spec, MapKind kind,
                                     const std::string& prefix) {
    const Eigen::VectorXd vals = map_values(chain, spec, kind);
    const double lo = vals.minCoeff();
    const double hi = vals.maxCoeff();
    const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;
    std::vector<std::string> written;

    // voxel id lookup per grid cell
    const VoxelGraph graph = data.graph();

    for (int slice = 0; slice < data.dims[2]; ++slice) {
        char name[512];
        std::snprintf(name, sizeof name, "%s_%s_slice%02d.pgm", prefix.c_str(), map_name(kind),
                      slice);
        std::ofstream img(name, std::ios::binary);
        if (!img) throw std::runtime_error(std::string("cannot write map '") + name + "'");
        img << "P5\n" << data.dims[0] << ' ' << data.dims[1] << "\n65535\n";
        for (int y = 0; y < data.dims[1]; ++y)
            for (int x = 0; x < data.dims[0]; ++x) {
                const std::size_t gi =
                    (static_cast<std::size_t>(slice) * data.dims[1] + y) * data.dims[0] + x;
                const std::int64_t v = graph.voxel_of_grid[gi];
                unsigned value = 0;
                if (v >= 0)
                    value = static_cast<unsigned>(std::lround((vals(static_cast<int>(v)) - lo) * scale));
                const unsigned char hibyte = static_cast<unsigned char>(value >> 8);
                const unsigned char lobyte = static_cast<unsigned char>(value & 0xff);
                img.put(static_cast<char>(hibyte));
                img.put(static_cast<char>(lobyte));
            }
        written.push_back(name);
    }

    const std::string table = prefix + "_" + map_name(kind) + ".tsv";
    std::ofstream tsv(table);
    if (!tsv) throw std::runtime_error("cannot write map table '" + table + "'");
    char buf[256];
    std::snprintf(buf, sizeof buf, "# min %.17g max %.17g\n", lo, hi);
    tsv << buf << "# x\ty\tz\tvalue\n";
    for (int v = 0; v < graph.size(); ++v) {
        const auto [x, y, zc] = graph.coords[static_cast<std::size_t>(v)];
        std::snprintf(buf, sizeof buf, "%d\t%d\t%d\t%.17g\n", x, y, zc, vals(v));
        tsv << buf;
    }
    written.push_back(table);
    return written;
}

SphereMesh SphereMesh::icosphere(int subdivisions) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> verts = {
        {-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1},
    };
    for (auto& v : verts) v.normalize();
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},   {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4},  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},   {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11},  {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            const auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const int idx = static_cast<int>(verts.size());
            verts.push_back((verts[static_cast<std::size_t>(a)] + verts[static_cast<std::size_t>(b)])
                                .normalized());
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
    SphereMesh mesh;
    mesh.vertices = std::move(verts);
    mesh.faces = std::move(faces);
    return mesh;
}

void SphereMesh::save_vertices(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write mesh '" + path + "'");
    out << "# icosphere vertices: x y z\n";
    char buf[160];
    for (const auto& v : vertices) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", v.x(), v.y(), v.z());
        out << buf;
    }
}

void export_profiles(const ChainResult& chain, const Dataset& data, const ModelSpec& spec,
                     const SphereMesh& mesh, const std::string& prefix) {
    mesh.save_vertices(prefix + "_mesh.txt");
    const VoxelGraph graph = data.graph();
    std::ofstream out(prefix + "_profiles.tsv");
    if (!out) throw std::runtime_error("cannot write profiles '" + prefix + "_profiles.tsv'");
    out << "# x\ty\tz\tr\tg\tb\td(u) per mesh vertex\n";
    char buf[64];
    for (int v = 0; v < graph.size(); ++v) {
        const Eigen::VectorXd coeffs = chain.theta_mean.col(v).tail(spec.coeff_dim());
        Tensor2 color_tensor;
        switch (spec.family) {
            case ModelFamily::Tensor2: color_tensor = Tensor2::from_coeffs(coeffs); break;
            case ModelFamily::Tensor4:
                color_tensor = project_4th_to_2nd(Tensor4::from_coeffs(coeffs));
                break;
            case ModelFamily::SH: color_tensor = tensor2_from_sh(coeffs.head(6)); break;
        }
        const Eigen::Vector3d dir = principal_direction(color_tensor);
        const auto [x, y, zc] = graph.coords[static_cast<std::size_t>(v)];
        out << x << '\t' << y << '\t' << zc;
        std::snprintf(buf, sizeof buf, "\t%d\t%d\t%d", static_cast<int>(std::fabs(dir.x()) * 255),
                      static_cast<int>(std::fabs(dir.y()) * 255),
                      static_cast<int>(std::fabs(dir.z()) * 255));
        out << buf;
        for (const auto& u : mesh.vertices) {
            std::snprintf(buf, sizeof buf, "\t%.10g", diffusivity_eval(spec, coeffs, u));
            out << buf;
        }
        out << '\n';
    }
}

std::vector<Eigen::Vector3d> diffusivity_peaks(const ModelSpec& spec,
                                               const Eigen::VectorXd& coeffs,
                                               const SphereMesh& mesh) {
    const int n = static_cast<int>(mesh.vertices.size());
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const auto& f : mesh.faces)
        for (int e = 0; e < 3; ++e) {
            adj[static_cast<std::size_t>(f[e])].push_back(f[(e + 1) % 3]);
            adj[static_cast<std::size_t>(f[e])].push_back(f[(e + 2) % 3]);
        }
    Eigen::VectorXd vals(n);
    for (int i = 0; i < n; ++i) vals(i) = diffusivity_eval(spec, coeffs, mesh.vertices[static_cast<std::size_t>(i)]);

    std::vector<std::pair<double, int>> peaks;
    for (int i = 0; i < n; ++i) {
        bool is_peak = true;
        for (int j : adj[static_cast<std::size_t>(i)])
            if (vals(j) > vals(i)) {
                is_peak = false;
                break;
            }
        if (is_peak) peaks.emplace_back(vals(i), i);
    }
    std::sort(peaks.rbegin(), peaks.rend());

    std::vector<Eigen::Vector3d> out;
    for (const auto& [val, i] : peaks) {
        const Eigen::Vector3d u = mesh.vertices[static_cast<std::size_t>(i)];
        bool dup = false;
        for (const auto& existing : out)
            if (std::fabs(existing.dot(u)) > 0.985) { // ~10 degrees, antipodes merged
                dup = true;
                break;
            }
        if (!dup) out.push_back(u);
    }
    return out;
}

} // namespace ricefield
