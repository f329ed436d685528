#include "ricefield/tensor.hpp"

#include <cmath>

namespace ricefield {

namespace {

// exponents (k1,k2,k3) of the monomial attached to each Tensor4 slot
constexpr int kSlotExp[15][3] = {
    {4, 0, 0}, {0, 4, 0}, {0, 0, 4}, {2, 2, 0}, {2, 0, 2}, {0, 2, 2},
    {2, 1, 1}, {1, 2, 1}, {1, 1, 2},
    {3, 1, 0}, {3, 0, 1}, {1, 3, 0}, {0, 3, 1}, {1, 0, 3}, {0, 1, 3},
};

int slot_of_counts(int n1, int n2, int n3) {
    for (int s = 0; s < 15; ++s)
        if (kSlotExp[s][0] == n1 && kSlotExp[s][1] == n2 && kSlotExp[s][2] == n3) return s;
    return -1;
}

} // namespace

const std::array<double, 15> tensor4_multiplicity = {
    1, 1, 1, 6, 6, 6, 12, 12, 12, 4, 4, 4, 4, 4, 4,
};

Eigen::Matrix3d Tensor2::matrix() const {
    Eigen::Matrix3d m;
    m << d11, d12, d13,
         d12, d22, d23,
         d13, d23, d33;
    return m;
}

Tensor2 Tensor2::from_matrix(const Eigen::Matrix3d& m) {
    return {m(0, 0), m(1, 1), m(2, 2), m(0, 1), m(0, 2), m(1, 2)};
}

Eigen::Matrix<double, 6, 1> Tensor2::coeffs() const {
    Eigen::Matrix<double, 6, 1> v;
    v << d11, d22, d33, d12, d13, d23;
    return v;
}

Tensor2 Tensor2::from_coeffs(const Eigen::Matrix<double, 6, 1>& c) {
    return {c(0), c(1), c(2), c(3), c(4), c(5)};
}

double Tensor2::diffusivity(const Eigen::Vector3d& u) const {
    return u.dot(matrix() * u);
}

Eigen::Matrix<double, 15, 1> Tensor4::coeffs() const {
    Eigen::Matrix<double, 15, 1> v;
    for (int i = 0; i < 15; ++i) v(i) = c[static_cast<std::size_t>(i)];
    return v;
}

Tensor4 Tensor4::from_coeffs(const Eigen::Matrix<double, 15, 1>& v) {
    Tensor4 t;
    for (int i = 0; i < 15; ++i) t.c[static_cast<std::size_t>(i)] = v(i);
    return t;
}

double Tensor4::entry(int i, int j, int k, int l) const {
    int n[3] = {0, 0, 0};
    ++n[i]; ++n[j]; ++n[k]; ++n[l];
    return c[static_cast<std::size_t>(slot_of_counts(n[0], n[1], n[2]))];
}

double Tensor4::diffusivity(const Eigen::Vector3d& u) const {
    const double x = u.x(), y = u.y(), z = u.z();
    const double x2 = x * x, y2 = y * y, z2 = z * z;
    return c[T4_1111] * x2 * x2 + c[T4_2222] * y2 * y2 + c[T4_3333] * z2 * z2 +
           6.0 * (c[T4_1122] * x2 * y2 + c[T4_1133] * x2 * z2 + c[T4_2233] * y2 * z2) +
           12.0 * (c[T4_1123] * x2 * y * z + c[T4_1223] * y2 * x * z + c[T4_1233] * z2 * x * y) +
           4.0 * (c[T4_1112] * x2 * x * y + c[T4_1113] * x2 * x * z + c[T4_1222] * y2 * y * x +
                  c[T4_2223] * y2 * y * z + c[T4_1333] * z2 * z * x + c[T4_2333] * z2 * z * y);
}

Eigen::Matrix<double, 6, 6> dhat(const Tensor4& t) {
    const double s2 = std::sqrt(2.0);
    Eigen::Matrix<double, 6, 6> m;
    m << t[T4_1111],      t[T4_1122],      t[T4_1133],      s2 * t[T4_1112], s2 * t[T4_1113], s2 * t[T4_1123],
         t[T4_1122],      t[T4_2222],      t[T4_2233],      s2 * t[T4_1222], s2 * t[T4_1223], s2 * t[T4_2223],
         t[T4_1133],      t[T4_2233],      t[T4_3333],      s2 * t[T4_1233], s2 * t[T4_1333], s2 * t[T4_2333],
         s2 * t[T4_1112], s2 * t[T4_1222], s2 * t[T4_1233], 2 * t[T4_1122],  2 * t[T4_1123],  2 * t[T4_1223],
         s2 * t[T4_1113], s2 * t[T4_1223], s2 * t[T4_1333], 2 * t[T4_1123],  2 * t[T4_1133],  2 * t[T4_1233],
         s2 * t[T4_1123], s2 * t[T4_2223], s2 * t[T4_2333], 2 * t[T4_1223],  2 * t[T4_1233],  2 * t[T4_2233];
    return m;
}

double md_4th(const Tensor4& t) {
    return (t[T4_1111] + t[T4_2222] + t[T4_3333] +
            2.0 * (t[T4_1122] + t[T4_1133] + t[T4_2233])) / 5.0;
}

Tensor2 project_4th_to_2nd(const Tensor4& t) {
    Tensor2 r;
    r.d11 = 3.0 / 35.0 * (9 * t[T4_1111] + 8 * t[T4_1122] + 8 * t[T4_1133] -
                          t[T4_2222] - t[T4_3333] - 2 * t[T4_2233]);
    r.d22 = 3.0 / 35.0 * (9 * t[T4_2222] + 8 * t[T4_1122] + 8 * t[T4_2233] -
                          t[T4_1111] - t[T4_3333] - 2 * t[T4_1133]);
    r.d33 = 3.0 / 35.0 * (9 * t[T4_3333] + 8 * t[T4_1133] + 8 * t[T4_2233] -
                          t[T4_1111] - t[T4_2222] - 2 * t[T4_1122]);
    r.d12 = 6.0 / 7.0 * (t[T4_1112] + t[T4_1222] + t[T4_1233]);
    r.d13 = 6.0 / 7.0 * (t[T4_1113] + t[T4_1333] + t[T4_1223]);
    r.d23 = 6.0 / 7.0 * (t[T4_2223] + t[T4_2333] + t[T4_1123]);
    return r;
}

std::pair<double, double> fa_md_2nd(const Tensor2& t) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(t.matrix(), Eigen::EigenvaluesOnly);
    const Eigen::Vector3d ev = es.eigenvalues();
    const double md = ev.mean();
    const double ssq = ev.squaredNorm();
    if (ssq == 0.0) return {0.0, md};
    const double dev = (ev.array() - md).matrix().squaredNorm();
    // indefinite inputs can push the raw ratio above 1; FA is clipped to [0,1]
    return {std::min(std::sqrt(1.5 * dev / ssq), 1.0), md};
}

Tensor2 rotate(const Tensor2& t, const Eigen::Matrix3d& r) {
    return Tensor2::from_matrix(r * t.matrix() * r.transpose());
}

Tensor4 rotate(const Tensor4& t, const Eigen::Matrix3d& r) {
    // D'_{abcd} = R_ai R_bj R_ck R_dl D_{ijkl}, accumulated over the distinct slots
    double full[3][3][3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) full[i][j][k][l] = t.entry(i, j, k, l);

    Tensor4 out;
    for (int slot = 0; slot < 15; ++slot) {
        int idx[4];
        int p = 0;
        for (int axis = 0; axis < 3; ++axis)
            for (int rep = 0; rep < kSlotExp[slot][axis]; ++rep) idx[p++] = axis;
        double s = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k)
                    for (int l = 0; l < 3; ++l)
                        s += r(idx[0], i) * r(idx[1], j) * r(idx[2], k) * r(idx[3], l) *
                             full[i][j][k][l];
        out[slot] = s;
    }
    return out;
}

Eigen::Vector3d principal_direction(const Tensor2& t) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(t.matrix());
    Eigen::Vector3d v = es.eigenvectors().col(2); // largest eigenvalue last
    if (v.z() < 0.0 || (v.z() == 0.0 && (v.y() < 0.0 || (v.y() == 0.0 && v.x() < 0.0)))) v = -v;
    return v;
}

} // namespace ricefield
