#include "ricefield/priors.hpp"

#include <cmath>
#include <stdexcept>

#include "ricefield/sh.hpp"

namespace ricefield {

bool PowerSpectrum::valid() const {
    if (a2l_sq.empty() || rho < 0.0) return false;
    for (double a : a2l_sq)
        if (!(a > 0.0)) return false;
    return true;
}

VoxelGraph VoxelGraph::from_mask(const std::array<int, 3>& dims,
                                 const std::vector<std::uint8_t>& mask) {
    const std::size_t total = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    if (mask.size() != total) throw std::invalid_argument("VoxelGraph: mask size mismatch");

    VoxelGraph g;
    g.dims = dims;
    g.voxel_of_grid.assign(total, -1);
    auto grid_index = [&](int x, int y, int z) {
        return (static_cast<std::size_t>(z) * dims[1] + y) * dims[0] + x;
    };
    for (int z = 0; z < dims[2]; ++z)
        for (int y = 0; y < dims[1]; ++y)
            for (int x = 0; x < dims[0]; ++x) {
                const std::size_t gi = grid_index(x, y, z);
                if (mask[gi]) {
                    g.voxel_of_grid[gi] = g.size();
                    g.coords.push_back({x, y, z});
                }
            }
    g.neighbors.resize(static_cast<std::size_t>(g.size()));
    for (int v = 0; v < g.size(); ++v) {
        const auto [x, y, z] = g.coords[static_cast<std::size_t>(v)];
        const int deltas[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
        for (const auto& d : deltas) {
            const int nx = x + d[0], ny = y + d[1], nz = z + d[2];
            if (nx >= dims[0] || ny >= dims[1] || nz >= dims[2]) continue;
            const std::int64_t w = g.voxel_of_grid[grid_index(nx, ny, nz)];
            if (w < 0) continue;
            g.neighbors[static_cast<std::size_t>(v)].push_back(static_cast<int>(w));
            g.neighbors[static_cast<std::size_t>(w)].push_back(v);
            g.edges.emplace_back(v, static_cast<int>(w));
        }
    }
    return g;
}

Eigen::Matrix<double, 6, 6> omega_2nd(const IsoPrecision2& p) {
    if (!p.valid()) throw std::domain_error("omega_2nd: constraints eta > 0, lambda > -eta/3 violated");
    Eigen::Matrix<double, 6, 6> m = Eigen::Matrix<double, 6, 6>::Zero();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) m(i, j) = p.lambda;
        m(i, i) = p.lambda + p.eta;
        m(i + 3, i + 3) = 2.0 * p.eta;
    }
    return m;
}

Eigen::Matrix<double, 15, 15> omega_4th(const IsoPrecision4& p) {
    if (!p.valid())
        throw std::domain_error("omega_4th: constraints alpha, beta, delta > 0 violated");
    const double e = p.eta, l = p.lambda, g = p.gamma;
    Eigen::Matrix<double, 15, 15> m = Eigen::Matrix<double, 15, 15>::Zero();

    // upper block on (1111, 2222, 3333, 1122, 1133, 2233)
    Eigen::Matrix<double, 6, 6> a;
    a << e + l,  l + g,  l + g,  2 * l,          2 * l,          2 * l + 2 * g,
         l + g,  e + l,  l + g,  2 * l,          2 * l + 2 * g,  2 * l,
         l + g,  l + g,  e + l,  2 * l + 2 * g,  2 * l,          2 * l,
         2 * l,  2 * l,  2 * l + 2 * g, 6 * e + 6 * g + 4 * l, 4 * l + 2 * g, 4 * l + 2 * g,
         2 * l,  2 * l + 2 * g, 2 * l,  4 * l + 2 * g, 6 * e + 6 * g + 4 * l, 4 * l + 2 * g,
         2 * l + 2 * g, 2 * l,  2 * l,  4 * l + 2 * g, 4 * l + 2 * g, 6 * e + 6 * g + 4 * l;
    m.topLeftCorner<6, 6>() = a;

    // lower block on (1112, 1113, 1222, 2223, 1333, 2333, 1123, 1223, 1233)
    Eigen::Matrix<double, 9, 9> b = Eigen::Matrix<double, 9, 9>::Zero();
    for (int i = 0; i < 6; ++i) b(i, i) = 4 * e;
    for (int i = 6; i < 9; ++i) b(i, i) = 12 * e + 8 * g;
    auto couple = [&](int i, int j) { b(i, j) = b(j, i) = -4 * g; };
    couple(0, 2); // 1112-1222
    couple(1, 4); // 1113-1333
    couple(3, 5); // 2223-2333
    couple(0, 8); // 1112-1233
    couple(2, 8); // 1222-1233
    couple(1, 7); // 1113-1223
    couple(4, 7); // 1333-1223
    couple(3, 6); // 2223-1123
    couple(5, 6); // 2333-1123
    m.bottomRightCorner<9, 9>() = b;
    return m;
}

Eigen::Matrix<double, 15, 15> omega_4th_slot_order(const IsoPrecision4& p) {
    const Eigen::Matrix<double, 15, 15> m = omega_4th(p);
    Eigen::Matrix<double, 15, 15> out;
    for (int i = 0; i < 15; ++i)
        for (int j = 0; j < 15; ++j)
            out(tensor4_omega_to_slot[static_cast<std::size_t>(i)],
                tensor4_omega_to_slot[static_cast<std::size_t>(j)]) = m(i, j);
    return out;
}

double g_invariant(const Tensor4& t) {
    const double d1111 = t[T4_1111], d2222 = t[T4_2222], d3333 = t[T4_3333];
    const double d1122 = t[T4_1122], d1133 = t[T4_1133], d2233 = t[T4_2233];
    const double d1112 = t[T4_1112], d1113 = t[T4_1113], d1222 = t[T4_1222];
    const double d2223 = t[T4_2223], d1333 = t[T4_1333], d2333 = t[T4_2333];
    const double d1123 = t[T4_1123], d1223 = t[T4_1223], d1233 = t[T4_1233];
    return d1111 * (d2222 + d3333) + d2222 * d3333 +
           3.0 * (d1122 * d1122 + d1133 * d1133 + d2233 * d2233) +
           2.0 * (d1122 * d3333 + d1133 * d2222 + d2233 * d1111 +
                  d1122 * (d1133 + d2233) + d2233 * d1133) +
           4.0 * (d1233 * (d1233 - d1222 - d1112) + d1223 * (d1223 - d1113 - d1333) +
                  d1123 * (d1123 - d2333 - d2223) - d1222 * d1112 - d1113 * d1333 -
                  d2223 * d2333);
}

double iso_log_density(const Tensor2& t, const IsoPrecision2& p) {
    if (!p.valid()) throw std::domain_error("iso_log_density: invalid precision parameters");
    const Eigen::Matrix3d m = t.matrix();
    const double tr = m.trace();
    const double quad = p.eta * (m * m).trace() + p.lambda * tr * tr;
    // log det Omega = log(8 eta^5 (eta + 3 lambda))
    const double logdet = std::log(8.0) + 5.0 * std::log(p.eta) + std::log(p.delta());
    return -0.5 * quad + 0.5 * logdet - 3.0 * std::log(2.0 * M_PI);
}

double iso_log_density(const Tensor4& t, const IsoPrecision4& p) {
    if (!p.valid()) throw std::domain_error("iso_log_density: invalid precision parameters");
    const Eigen::Matrix<double, 6, 6> dh = dhat(t);
    const double tr = dh.trace();
    // The Omega quadratic form carries 2 gamma g(D); the matrices, the
    // normalizing constant, the constraint region and the spectrum formulas
    // are mutually consistent under this convention.
    const double quad =
        p.eta * (dh * dh).trace() + p.lambda * tr * tr + 2.0 * p.gamma * g_invariant(t);
    // det Omega = 2^21 alpha^9 beta^5 delta, so the density normalizes to
    // 2^3 sqrt(alpha^9 beta^5 delta / pi^15)
    const double logdet = 21.0 * std::log(2.0) + 9.0 * std::log(p.alpha()) +
                          5.0 * std::log(p.beta()) + std::log(p.delta());
    return -0.5 * quad + 0.5 * logdet - 7.5 * std::log(2.0 * M_PI);
}

double iso_log_density(const Eigen::VectorXd& sh_coeffs, const PowerSpectrum& s, int order) {
    if (!s.valid() || static_cast<int>(s.a2l_sq.size()) != order + 1)
        throw std::domain_error("iso_log_density: spectrum does not match the SH order");
    const int d = (2 * order + 1) * (order + 1);
    if (sh_coeffs.size() != d)
        throw std::invalid_argument("iso_log_density: coefficient size mismatch");
    double logdens = -0.5 * d * std::log(2.0 * M_PI);
    int k = 0;
    for (int l = 0; l <= order; ++l) {
        const double var = s.a2l_sq[static_cast<std::size_t>(l)];
        for (int m = 0; m < 4 * l + 1; ++m, ++k)
            logdens -= 0.5 * (std::log(var) + sh_coeffs(k) * sh_coeffs(k) / var);
    }
    return logdens;
}

double field_prior_energy(const Eigen::MatrixXd& field, const VoxelGraph& graph,
                          const Eigen::MatrixXd& omega) {
    if (field.rows() != omega.rows() || field.cols() != graph.size())
        throw std::invalid_argument("field_prior_energy: dimension mismatch");
    double energy = 0.0;
    for (const auto& [v, w] : graph.edges) {
        const Eigen::VectorXd d = field.col(v) - field.col(w);
        energy += 0.5 * d.dot(omega * d);
    }
    return energy;
}

IsoPrecision2 spectrum_to_precision_2nd(const PowerSpectrum& s) {
    if (s.a2l_sq.size() < 2 || !s.valid())
        throw std::domain_error("spectrum_to_precision_2nd: need positive a0^2, a2^2");
    const double ia0 = 1.0 / s.a2l_sq[0], ia2 = 1.0 / s.a2l_sq[1];
    return {8.0 * M_PI / 15.0 * ia2, 4.0 * M_PI / 9.0 * ia0 - 8.0 * M_PI / 45.0 * ia2};
}

IsoPrecision4 spectrum_to_precision_4th(const PowerSpectrum& s) {
    if (s.a2l_sq.size() < 3 || !s.valid())
        throw std::domain_error("spectrum_to_precision_4th: need positive a0^2, a2^2, a4^2");
    const double ia0 = 1.0 / s.a2l_sq[0], ia2 = 1.0 / s.a2l_sq[1], ia4 = 1.0 / s.a2l_sq[2];
    IsoPrecision4 p;
    p.eta = 48.0 * M_PI / 245.0 * ia2 + 128.0 * M_PI / 2205.0 * ia4;
    p.lambda = 4.0 * M_PI / 25.0 * ia0 + 16.0 * M_PI / 245.0 * ia2 - 128.0 * M_PI / 3675.0 * ia4;
    p.gamma = -48.0 * M_PI / 245.0 * ia2 + 32.0 * M_PI / 735.0 * ia4;
    return p;
}

} // namespace ricefield
