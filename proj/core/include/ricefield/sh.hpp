#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ricefield/tensor.hpp"

namespace ricefield {
struct ModelSpec;
}

namespace ricefield {

// Real orthonormal spherical harmonic Y_{l,m} at a unit vector, orthonormal
// under the (unnormalized) surface measure of S^2. Only even degrees are
// admitted; the diffusivity is antipodally symmetric so odd degrees never
// appear.
double real_spherical_harmonic(int l, int m, const Eigen::Vector3d& u);

// (l, m) pairs for truncation order n: degrees 0, 2, ..., 2n, m = -l..l.
// The list length is (2n+1)(n+1).
std::vector<std::pair<int, int>> sh_index_list(int order);

// Bijection matrix B with D = theta^T B mapping spherical-harmonic
// coefficients of the diffusivity to tensor coefficients.
//
// Order 2: 6x6, D columns ordered (D11, D22, D33, D12, D13, D23).
// Order 4: 15x15, D columns ordered
//   (1111, 2222, 3333, 1122, 1133, 2233,
//    1112, 1113, 1222, 2223, 1333, 2333, 1123, 1223, 1233).
// Rows follow sh_index_list(order/2).
Eigen::MatrixXd tensor_sh_bijection_2nd();
Eigen::MatrixXd tensor_sh_bijection_4th();

// family-dispatched form; the SH family has no tensor side to map to
Eigen::MatrixXd tensor_sh_bijection(const ModelSpec& spec);

// column permutation taking the 4th-order bijection/precision coefficient
// ordering above to the Tensor4 regression slot ordering
extern const std::array<int, 15> tensor4_omega_to_slot;

Tensor2 tensor2_from_sh(const Eigen::VectorXd& theta_sh);
Tensor4 tensor4_from_sh(const Eigen::VectorXd& theta_sh);

} // namespace ricefield
