#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ricefield/tensor.hpp"

namespace ricefield {

// Hyperparameters of the isotropic Gaussian law for a 2nd-order tensor.
// Positive definite iff eta > 0 and lambda > -eta/3.
struct IsoPrecision2 {
    double eta;
    double lambda;

    double delta() const { return eta + 3.0 * lambda; }
    bool valid() const { return eta > 0.0 && lambda > -eta / 3.0; }
};

// Hyperparameters of the isotropic Gaussian law for a 4th-order tensor.
// Positive definite iff eta > 0, -eta < gamma < (3/4) eta and
// lambda > -(eta/5 + 8 gamma/15); equivalently alpha, beta, delta > 0.
struct IsoPrecision4 {
    double eta;
    double lambda;
    double gamma;

    double alpha() const { return gamma + eta; }
    double beta() const { return 3.0 * eta - 4.0 * gamma; }
    double delta() const { return 3.0 * eta + 8.0 * gamma + 15.0 * lambda; }
    bool valid() const { return alpha() > 0.0 && beta() > 0.0 && delta() > 0.0; }

    static IsoPrecision4 from_alpha_beta_delta(double alpha, double beta, double delta) {
        return {(beta + 4.0 * alpha) / 7.0,
                (7.0 * delta + 5.0 * beta - 36.0 * alpha) / 105.0,
                (3.0 * alpha - beta) / 7.0};
    }
};

// Angular power spectrum of an isotropic Gaussian random field on the sphere:
// variances a_{2l}^2 of the spherical-harmonic coefficients, plus the
// smoothing weight rho for the log-intensity channel.
struct PowerSpectrum {
    std::vector<double> a2l_sq; // a_0^2, a_2^2, ..., a_{2n}^2
    double rho = 0.0;

    bool valid() const;
};

// 6-neighborhood adjacency over the masked voxels of a 3d grid.
struct VoxelGraph {
    std::array<int, 3> dims{};
    std::vector<std::int64_t> voxel_of_grid;       // dense grid -> voxel id or -1
    std::vector<std::array<int, 3>> coords;        // voxel id -> grid coordinates
    std::vector<std::vector<int>> neighbors;       // voxel id -> adjacent voxel ids
    std::vector<std::pair<int, int>> edges;        // unordered pairs, first < second

    int size() const { return static_cast<int>(coords.size()); }
    int degree(int v) const { return static_cast<int>(neighbors[static_cast<std::size_t>(v)].size()); }

    static VoxelGraph from_mask(const std::array<int, 3>& dims, const std::vector<std::uint8_t>& mask);
};

// precision matrix of the 2nd-order isotropic Gaussian in the coefficient
// ordering (D11, D22, D33, D12, D13, D23)
Eigen::Matrix<double, 6, 6> omega_2nd(const IsoPrecision2& p);

// precision matrix of the 4th-order isotropic Gaussian, block diagonal in the
// ordering (1111, 2222, 3333, 1122, 1133, 2233 | 1112, 1113, 1222, 2223, 1333,
// 2333, 1123, 1223, 1233)
Eigen::Matrix<double, 15, 15> omega_4th(const IsoPrecision4& p);

// same matrix permuted to the Tensor4 regression slot ordering
Eigen::Matrix<double, 15, 15> omega_4th_slot_order(const IsoPrecision4& p);

// rotation-invariant quadratic polynomial completing trace(dhat)^2 and
// trace(dhat^2) to a basis of the isotropic quadratics in D
double g_invariant(const Tensor4& t);

double iso_log_density(const Tensor2& t, const IsoPrecision2& p);
double iso_log_density(const Tensor4& t, const IsoPrecision4& p);
// SH coefficients under the diagonal spectrum law (independent zero-mean
// Gaussians with variance a_{2l}^2 per degree)
double iso_log_density(const Eigen::VectorXd& sh_coeffs, const PowerSpectrum& s, int order);

// 1/2 sum over edges of (theta(v)-theta(w))^T Omega (theta(v)-theta(w));
// field is (1+d) x |V|, omega is (1+d) x (1+d)
double field_prior_energy(const Eigen::MatrixXd& field, const VoxelGraph& graph,
                          const Eigen::MatrixXd& omega);

// linear correspondences between the angular power spectrum and the tensor
// precision parameters
IsoPrecision2 spectrum_to_precision_2nd(const PowerSpectrum& s);
IsoPrecision4 spectrum_to_precision_4th(const PowerSpectrum& s);

} // namespace ricefield
