#pragma once

#include <array>

#include <Eigen/Dense>

namespace ricefield {

// 2nd-order diffusion tensor, symmetric by construction. Units mm^2/s.
struct Tensor2 {
    double d11 = 0, d22 = 0, d33 = 0, d12 = 0, d13 = 0, d23 = 0;

    Eigen::Matrix3d matrix() const;
    static Tensor2 from_matrix(const Eigen::Matrix3d& m);

    // coefficient vector in the regression layout (D11,D22,D33,D12,D13,D23)
    Eigen::Matrix<double, 6, 1> coeffs() const;
    static Tensor2 from_coeffs(const Eigen::Matrix<double, 6, 1>& c);

    double diffusivity(const Eigen::Vector3d& u) const;
};

// Totally symmetric 4th-order tensor stored as its 15 distinct coefficients,
// in the regression parameter ordering:
//   1111 2222 3333 1122 1133 2233 1123 1223 1233 1112 1113 1222 2223 1333 2333
struct Tensor4 {
    std::array<double, 15> c{};

    double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

    Eigen::Matrix<double, 15, 1> coeffs() const;
    static Tensor4 from_coeffs(const Eigen::Matrix<double, 15, 1>& v);

    // full 3x3x3x3 coefficient by index (0-based), using total symmetry
    double entry(int i, int j, int k, int l) const;

    double diffusivity(const Eigen::Vector3d& u) const;
};

// index names for the Tensor4 coefficient slots
enum Tensor4Slot {
    T4_1111 = 0, T4_2222, T4_3333, T4_1122, T4_1133, T4_2233,
    T4_1123, T4_1223, T4_1233, T4_1112, T4_1113, T4_1222, T4_2223, T4_1333, T4_2333
};

// monomial multiplicities 4!/(k1! k2! k3!) matching the slots above
extern const std::array<double, 15> tensor4_multiplicity;

// 6x6 second-order representation of a 4th-order tensor; eigenvalues of the
// result are the tensor eigenvalues
Eigen::Matrix<double, 6, 6> dhat(const Tensor4& t);

// mean diffusivity = sphere average of the quartic diffusivity = trace(dhat)/5
double md_4th(const Tensor4& t);

// linear L2 projection of the quartic diffusivity onto quadratics
Tensor2 project_4th_to_2nd(const Tensor4& t);

// (FA, MD) from the eigenvalues; FA = 0 when all eigenvalues vanish
std::pair<double, double> fa_md_2nd(const Tensor2& t);

Tensor2 rotate(const Tensor2& t, const Eigen::Matrix3d& r);
Tensor4 rotate(const Tensor4& t, const Eigen::Matrix3d& r);

// eigenvector of the largest eigenvalue, unit norm, sign fixed to e_z >= 0
Eigen::Vector3d principal_direction(const Tensor2& t);

} // namespace ricefield
