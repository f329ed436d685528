#include "ricefield/sh.hpp"

#include <cmath>
#include <stdexcept>

#include "ricefield/design.hpp"

namespace ricefield {

double real_spherical_harmonic(int l, int m, const Eigen::Vector3d& u) {
    if (l < 0 || l % 2 != 0)
        throw std::domain_error("real_spherical_harmonic: degree must be even and nonnegative");
    const int am = std::abs(m);
    if (am > l) throw std::domain_error("real_spherical_harmonic: |m| must not exceed l");

    const double z = u.z();
    // C_m = sin^m(theta) cos(m phi), S_m likewise with sine; both polynomials in u
    double cm = 1.0, sm = 0.0;
    for (int k = 0; k < am; ++k) {
        const double cn = cm * u.x() - sm * u.y();
        sm = sm * u.x() + cm * u.y();
        cm = cn;
    }

    // P~_l^m = P_l^m / sin^m(theta), Condon-Shortley-free recurrence
    double pmm = 1.0;
    for (int k = 1; k <= am; ++k) pmm *= 2.0 * k - 1.0;
    double p = pmm;
    if (l > am) {
        double pm1 = pmm;
        double pm2 = 0.0;
        p = z * (2.0 * am + 1.0) * pmm;
        for (int ll = am + 2; ll <= l; ++ll) {
            pm2 = pm1;
            pm1 = p;
            p = ((2.0 * ll - 1.0) * z * pm1 - (ll + am - 1.0) * pm2) / (ll - am);
        }
    }

    double norm = (2.0 * l + 1.0) / (4.0 * M_PI);
    for (int k = l - am + 1; k <= l + am; ++k) norm /= k;
    norm = std::sqrt(norm);

    if (m == 0) return norm * p;
    const double azimuth = (m > 0) ? cm : sm;
    return std::sqrt(2.0) * norm * p * azimuth;
}

std::vector<std::pair<int, int>> sh_index_list(int order) {
    if (order < 0) throw std::domain_error("sh_index_list: order must be nonnegative");
    std::vector<std::pair<int, int>> idx;
    for (int l = 0; l <= 2 * order; l += 2)
        for (int m = -l; m <= l; ++m) idx.emplace_back(l, m);
    return idx;
}

Eigen::MatrixXd tensor_sh_bijection_2nd() {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6, 6);
    const double c = 0.25 * std::sqrt(15.0 / M_PI);
    const double s3 = std::sqrt(3.0), s15 = std::sqrt(15.0);
    // rows: (0,0), (2,-2), (2,-1), (2,0), (2,1), (2,2)
    b(0, 0) = b(0, 1) = b(0, 2) = 2.0 / s15;
    b(1, 3) = 1.0;
    b(2, 5) = 1.0;
    b(3, 0) = b(3, 1) = -1.0 / s3;
    b(3, 2) = 2.0 / s3;
    b(4, 4) = 1.0;
    b(5, 0) = 1.0;
    b(5, 1) = -1.0;
    return c * b;
}

Eigen::MatrixXd tensor_sh_bijection_4th() {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(15, 15);
    const double s5 = std::sqrt(5.0), s10 = std::sqrt(10.0), s15 = std::sqrt(15.0);
    const double s35 = std::sqrt(35.0), s70 = std::sqrt(70.0);
    // rows: (0,0), (2,-2), (2,-1), (2,0), (2,1), (2,2),
    //       (4,-4), (4,-3), (4,-2), (4,-1), (4,0), (4,1), (4,2), (4,3), (4,4)
    // columns: 1111 2222 3333 1122 1133 2233 1112 1113 1222 2223 1333 2333 1123 1223 1233
    b.row(0) << 1 / 2.0, 1 / 2.0, 1 / 2.0, 1 / 6.0, 1 / 6.0, 1 / 6.0, 0, 0, 0, 0, 0, 0, 0, 0, 0;
    b.row(1) << 0, 0, 0, 0, 0, 0, s15 / 8, 0, s15 / 8, 0, 0, 0, 0, 0, s15 / 24;
    b.row(2) << 0, 0, 0, 0, 0, 0, 0, 0, 0, s15 / 8, 0, s15 / 8, s15 / 24, 0, 0;
    b.row(3) << -s5 / 4, -s5 / 4, s5 / 2, -s5 / 12, s5 / 24, s5 / 24, 0, 0, 0, 0, 0, 0, 0, 0, 0;
    b.row(4) << 0, 0, 0, 0, 0, 0, 0, s15 / 8, 0, 0, s15 / 8, 0, 0, s15 / 24, 0;
    b.row(5) << s15 / 4, -s15 / 4, 0, 0, s15 / 24, -s15 / 24, 0, 0, 0, 0, 0, 0, 0, 0, 0;
    b.row(6) << 0, 0, 0, 0, 0, 0, 3 * s35 / 16, 0, -3 * s35 / 16, 0, 0, 0, 0, 0, 0;
    b.row(7) << 0, 0, 0, 0, 0, 0, 0, 0, 0, -3 * s70 / 32, 0, 0, 3 * s70 / 32, 0, 0;
    b.row(8) << 0, 0, 0, 0, 0, 0, -3 * s5 / 16, 0, -3 * s5 / 16, 0, 0, 0, 0, 0, 3 * s5 / 8;
    b.row(9) << 0, 0, 0, 0, 0, 0, 0, 0, 0, -9 * s10 / 32, 0, 3 * s10 / 8, -3 * s10 / 32, 0, 0;
    b.row(10) << 9 / 16.0, 9 / 16.0, 3 / 2.0, 3 / 16.0, -3 / 4.0, -3 / 4.0, 0, 0, 0, 0, 0, 0, 0, 0, 0;
    b.row(11) << 0, 0, 0, 0, 0, 0, 0, -9 * s10 / 32, 0, 0, 3 * s10 / 8, 0, 0, -3 * s10 / 32, 0;
    b.row(12) << -3 * s5 / 8, 3 * s5 / 8, 0, 0, 3 * s5 / 8, -3 * s5 / 8, 0, 0, 0, 0, 0, 0, 0, 0, 0;
    b.row(13) << 0, 0, 0, 0, 0, 0, 0, 3 * s70 / 32, 0, 0, 0, 0, 0, -3 * s70 / 32, 0;
    b.row(14) << 3 * s35 / 16, 3 * s35 / 16, 0, -3 * s35 / 16, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0;
    return b / std::sqrt(M_PI);
}

Eigen::MatrixXd tensor_sh_bijection(const ModelSpec& spec) {
    switch (spec.family) {
        case ModelFamily::Tensor2: return tensor_sh_bijection_2nd();
        case ModelFamily::Tensor4: return tensor_sh_bijection_4th();
        case ModelFamily::SH:
            throw std::domain_error("tensor_sh_bijection: not applicable to the SH family");
    }
    throw std::logic_error("tensor_sh_bijection: unknown family");
}

const std::array<int, 15> tensor4_omega_to_slot = {
    T4_1111, T4_2222, T4_3333, T4_1122, T4_1133, T4_2233,
    T4_1112, T4_1113, T4_1222, T4_2223, T4_1333, T4_2333,
    T4_1123, T4_1223, T4_1233,
};

Tensor2 tensor2_from_sh(const Eigen::VectorXd& theta_sh) {
    if (theta_sh.size() != 6)
        throw std::invalid_argument("tensor2_from_sh: expected 6 coefficients");
    const Eigen::Matrix<double, 6, 1> d =
        (theta_sh.transpose() * tensor_sh_bijection_2nd()).transpose();
    return Tensor2::from_coeffs(d);
}

Tensor4 tensor4_from_sh(const Eigen::VectorXd& theta_sh) {
    if (theta_sh.size() != 15)
        throw std::invalid_argument("tensor4_from_sh: expected 15 coefficients");
    const Eigen::VectorXd d = (theta_sh.transpose() * tensor_sh_bijection_4th()).transpose();
    Tensor4 t;
    for (int i = 0; i < 15; ++i) t[tensor4_omega_to_slot[static_cast<std::size_t>(i)]] = d(i);
    return t;
}

} // namespace ricefield
