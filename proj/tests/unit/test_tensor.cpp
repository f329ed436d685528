#include <doctest.h>

#include "ricefield/tensor.hpp"
#include "test_helpers.hpp"

using namespace ricefield;

TEST_CASE("dhat placement and trace") {
    Tensor4 zero;
    CHECK(dhat(zero).isZero(0.0));
    CHECK(md_4th(zero) == 0.0);

    Tensor4 t;
    t[T4_1111] = 1.0;
    Eigen::Matrix<double, 6, 6> expect = Eigen::Matrix<double, 6, 6>::Zero();
    expect(0, 0) = 1.0;
    CHECK((dhat(t) - expect).cwiseAbs().maxCoeff() == 0.0);

    Rng rng(5);
    const Tensor4 r = helpers::random_tensor4(rng);
    const double tr = r[T4_1111] + r[T4_2222] + r[T4_3333] +
                      2.0 * (r[T4_1122] + r[T4_1133] + r[T4_2233]);
    CHECK(dhat(r).trace() == doctest::Approx(tr).epsilon(1e-14));
}

TEST_CASE("md_4th equals the sphere average") {
    // isotropic tensor: diffusivity identically 1
    Tensor4 iso;
    iso[T4_1111] = iso[T4_2222] = iso[T4_3333] = 1.0;
    iso[T4_1122] = iso[T4_1133] = iso[T4_2233] = 1.0 / 3.0;
    CHECK(md_4th(iso) == doctest::Approx(1.0).epsilon(1e-14));

    Rng rng(6);
    const Tensor4 t = helpers::random_tensor4(rng);
    double mc = 0.0;
    const long n = 1000000;
    for (long i = 0; i < n; ++i) mc += t.diffusivity(helpers::random_unit(rng));
    CHECK(std::fabs(mc / n - md_4th(t)) < 1e-2); // MC error ~ sd/sqrt(n)
}

TEST_CASE("projection to 2nd order") {
    Tensor4 zero;
    const Tensor2 pz = project_4th_to_2nd(zero);
    CHECK(pz.coeffs().isZero(0.0));

    Tensor4 iso;
    iso[T4_1111] = iso[T4_2222] = iso[T4_3333] = 1.0;
    iso[T4_1122] = iso[T4_1133] = iso[T4_2233] = 1.0 / 3.0;
    const Tensor2 pi = project_4th_to_2nd(iso);
    CHECK(pi.d11 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pi.d22 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pi.d33 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pi.d12 == doctest::Approx(0.0));

    Rng rng(7);
    for (int rep = 0; rep < 100; ++rep) {
        const Tensor4 t = helpers::random_tensor4(rng);
        const auto [fa, md] = fa_md_2nd(project_4th_to_2nd(t));
        (void)fa;
        CHECK(md == doctest::Approx(md_4th(t)).epsilon(1e-12));
    }
}

TEST_CASE("projection and md commute with rotations") {
    Rng rng(8);
    for (int rep = 0; rep < 50; ++rep) {
        const Tensor4 t = helpers::random_tensor4(rng);
        const Eigen::Matrix3d r = helpers::random_rotation(rng);
        CHECK(md_4th(rotate(t, r)) == doctest::Approx(md_4th(t)).epsilon(1e-10));
        const Tensor2 a = rotate(project_4th_to_2nd(t), r);
        const Tensor2 b = project_4th_to_2nd(rotate(t, r));
        CHECK((a.coeffs() - b.coeffs()).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("fa and md") {
    const Tensor2 iso{1, 1, 1, 0, 0, 0};
    auto [fa0, md0] = fa_md_2nd(iso);
    CHECK(fa0 == doctest::Approx(0.0));
    CHECK(md0 == doctest::Approx(1.0));

    const Tensor2 stick{1, 0, 0, 0, 0, 0};
    auto [fa1, md1] = fa_md_2nd(stick);
    CHECK(fa1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(md1 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const Tensor2 t{2, 1, 1, 0, 0, 0};
    auto [fa2, md2] = fa_md_2nd(t);
    CHECK(md2 == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(fa2 == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));

    const Tensor2 zero{0, 0, 0, 0, 0, 0};
    CHECK(fa_md_2nd(zero).first == 0.0);
}

TEST_CASE("fa invariances") {
    Rng rng(9);
    for (int rep = 0; rep < 50; ++rep) {
        const Tensor2 t = helpers::random_tensor2(rng);
        const auto [fa, md] = fa_md_2nd(t);
        (void)md;
        CHECK(fa >= 0.0);
        CHECK(fa <= 1.0 + 1e-12);
        const auto [far, mdr] = fa_md_2nd(rotate(t, helpers::random_rotation(rng)));
        (void)mdr;
        CHECK(far == doctest::Approx(fa).epsilon(1e-10));
        Tensor2 scaled = t;
        Eigen::Matrix<double, 6, 1> c = t.coeffs() * 3.25;
        scaled = Tensor2::from_coeffs(c);
        CHECK(fa_md_2nd(scaled).first == doctest::Approx(fa).epsilon(1e-10));
    }
}

TEST_CASE("rotation equivariance of the diffusivity") {
    Rng rng(10);
    for (int rep = 0; rep < 30; ++rep) {
        const Eigen::Matrix3d r = helpers::random_rotation(rng);
        const Eigen::Vector3d u = helpers::random_unit(rng);
        const Tensor2 t2 = helpers::random_tensor2(rng);
        CHECK(rotate(t2, r).diffusivity(r * u) == doctest::Approx(t2.diffusivity(u)).epsilon(1e-12));
        const Tensor4 t4 = helpers::random_tensor4(rng);
        CHECK(rotate(t4, r).diffusivity(r * u) == doctest::Approx(t4.diffusivity(u)).epsilon(1e-12));
    }
}

TEST_CASE("diffusivity equals the brute-force quadruple sum") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const Tensor4 t = helpers::random_tensor4(rng);
        const Eigen::Vector3d u = helpers::random_unit(rng);
        CHECK(t.diffusivity(u) ==
              doctest::Approx(helpers::diffusivity_bruteforce(t, u)).epsilon(1e-12));
    }
}
