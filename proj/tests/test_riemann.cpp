#include <catch2/catch_amalgamated.hpp>

#include "dkf/riemann.hpp"
#include "test_util.hpp"

using dkf::Matrix;

TEST_CASE("distance of a matrix to itself is zero") {
    dkf::GaussianSource rng(1);
    for (int t = 0; t < 20; ++t) {
        const Matrix p = testutil::random_spd(rng, 1 + t % 6);
        CHECK(dkf::riemannian_distance(p, p) == 0.0);
    }
}

TEST_CASE("scaled identity distance is sqrt(n) log 2") {
    for (Eigen::Index n : {1, 2, 5}) {
        const Matrix i = Matrix::Identity(n, n);
        CHECK(dkf::riemannian_distance(2.0 * i, i) ==
              Catch::Approx(std::sqrt(static_cast<double>(n)) * std::log(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("distance is symmetric and inversion-invariant") {
    dkf::GaussianSource rng(2);
    for (int t = 0; t < 200; ++t) {
        const Eigen::Index n = 1 + t % 6;
        const Matrix p = testutil::random_spd(rng, n);
        const Matrix q = testutil::random_spd(rng, n);
        const double d = dkf::riemannian_distance(p, q);
        CHECK(std::abs(d - dkf::riemannian_distance(q, p)) < 1e-10);
        CHECK(std::abs(d - dkf::riemannian_distance(dkf::spd_inverse(p), dkf::spd_inverse(q))) <
              1e-10);
    }
}

TEST_CASE("distance rejects non-SPD input") {
    const Matrix bad = -Matrix::Identity(2, 2);
    CHECK_THROWS_AS(dkf::riemannian_distance(bad, Matrix::Identity(2, 2)), dkf::NonSpd);
    CHECK_THROWS_AS(dkf::riemannian_distance(Matrix::Identity(2, 2), Matrix::Identity(3, 3)),
                    dkf::DimensionMismatch);
}

TEST_CASE("contraction inequality boundary cases") {
    dkf::GaussianSource rng(3);
    const Matrix p = testutil::random_spd(rng, 3);
    const Matrix w = testutil::random_spd(rng, 3);
    {
        auto [lhs, rhs] = dkf::contraction_check(p, p, w, Matrix::Identity(3, 3));
        CHECK(lhs < 1e-10);
        CHECK(rhs < 1e-10);
    }
    {
        auto [lhs, rhs] = dkf::contraction_check(p, testutil::random_spd(rng, 3), w,
                                                 Matrix::Zero(3, 3));
        CHECK(lhs == 0.0);
        CHECK(rhs == 0.0);
    }
}

TEST_CASE("contraction inequality holds on random draws") {
    dkf::GaussianSource rng(4);
    for (int t = 0; t < 200; ++t) {
        const Eigen::Index n = 1 + t % 6;
        const Eigen::Index m = 1 + (t / 2) % 6;
        const auto [lhs, rhs] = dkf::contraction_check(
            testutil::random_spd(rng, n), testutil::random_spd(rng, n),
            testutil::random_spd(rng, m), testutil::random_matrix(rng, m, n));
        CHECK(lhs <= rhs + 1e-10);
    }
}

TEST_CASE("norm-gap inequality") {
    dkf::GaussianSource rng(5);
    // Small perturbation: lhs is about eps and rhs dominates.
    const Matrix q = testutil::random_spd(rng, 4);
    const Matrix p = q + 1e-6 * Matrix::Identity(4, 4);
    auto [lhs, rhs] = dkf::norm_gap_bound_check(p, q);
    CHECK(lhs == Catch::Approx(1e-6).epsilon(1e-6));
    CHECK(rhs >= lhs);

    // P = 2Q: lhs = ||Q||, delta = sqrt(n) log 2, rhs = (2^sqrt(n) - 1)||Q||.
    auto [lhs2, rhs2] = dkf::norm_gap_bound_check(Matrix(2.0 * q), q);
    CHECK(lhs2 == Catch::Approx(dkf::spectral_norm(q)));
    CHECK(rhs2 == Catch::Approx((std::exp(2.0 * std::log(2.0)) - 1.0) * dkf::spectral_norm(q))
                      .epsilon(1e-9));

    for (int t = 0; t < 200; ++t) {
        const Eigen::Index n = 1 + t % 6;
        const Matrix b = testutil::random_spd(rng, n);
        const Matrix a = dkf::symmetrize(b + testutil::random_spd(rng, n));
        const auto [l, r] = dkf::norm_gap_bound_check(a, b);
        CHECK(l <= r + 1e-10);
    }

    CHECK_THROWS_AS(dkf::norm_gap_bound_check(q, Matrix(2.0 * q)), dkf::OrderViolation);
}

TEST_CASE("exp interpolation inequality on the grid") {
    int violations = 0;
    for (int xi = -500; xi <= 500; ++xi)
        for (int yi = 0; yi <= 100; ++yi) {
            const double x = xi * 0.01;
            const double y = yi * 0.01;
            const auto [lhs, rhs] = dkf::exp_interpolation_check(x, y);
            if (lhs > rhs + 1e-12) ++violations;
        }
    CHECK(violations == 0);
    // Equality at the boundary cases.
    CHECK(dkf::exp_interpolation_check(0.0, 0.37).first ==
          Catch::Approx(dkf::exp_interpolation_check(0.0, 0.37).second).margin(1e-15));
    CHECK(dkf::exp_interpolation_check(2.0, 1.0).first ==
          Catch::Approx(dkf::exp_interpolation_check(2.0, 1.0).second));
}

TEST_CASE("psd off-diagonal block bound") {
    dkf::GaussianSource rng(6);
    for (int t = 0; t < 500; ++t) {
        const Eigen::Index top = 1 + t % 5;
        const Eigen::Index bot = 1 + (t / 5) % 5;
        const Matrix g = testutil::random_matrix(rng, top + bot, top + bot);
        const auto [lhs, rhs] = dkf::psd_offdiag_check(dkf::symmetrize(g * g.transpose()), top);
        CHECK(lhs <= rhs + 1e-10);
    }
}
