#include "doctest.h"
#include "oracles.hpp"
#include "vitl/solver.hpp"

using namespace vitl;

namespace {

struct Tiny {
    Eigen::MatrixXd k, y;
    Tiny() {
        Eigen::MatrixXd x(2, 2);
        x << 0, 0, 1, 0;
        Eigen::MatrixXd thetas(4, 1);
        thetas << 0, 1, 0, 1;
        k = oracle::loop_gram(x, thetas, 2, 0.5, 1.0);
        y.resize(4, 2);
        y << 1, 0, 0, 1, 2, 1, 1, -1;
    }
};

Eigen::MatrixXd reshape_rows(std::initializer_list<double> v, Index rows, Index cols) {
    Eigen::MatrixXd m(rows, cols);
    auto it = v.begin();
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) m(r, c) = *it++;
    return m;
}

}  // namespace

TEST_CASE("frozen solutions of a 4-pair problem") {
    // Independent numpy solve of (A (x) K + n lambda I) vec C = vec Y, lambda = 0.1.
    const Tiny p;
    const Eigen::MatrixXd c_identity = reshape_rows({0.20528158362320803, -0.6168019972476493, -0.501172053410945,
                                                     1.342216625976345, 1.2711312451907149, 1.1625186137096684,
                                                     0.5646776081565615, -1.5029536465484792},
                                                    4, 2);
    const Eigen::MatrixXd c_a2 = reshape_rows({0.2200010307835428, -0.6020825500873146, -0.6759843794865056,
                                               1.167404299900784, 0.6417150293531159, 0.5331023978720694,
                                               0.7492574582912546, -1.318373796413786},
                                              4, 2);
    Eigen::Matrix2d a2;
    a2 << 2, 1, 1, 2;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);

    CHECK(oracle::rel_err(solve_ridge_identity(p.k, p.y, 0.1), c_identity) < 1e-13);
    CHECK(oracle::rel_err(solve_sylvester(p.k, p.y, eye, 0.1), c_identity) < 1e-13);
    CHECK(oracle::rel_err(solve_sylvester(p.k, p.y, a2, 0.1), c_a2) < 1e-13);
    CHECK(oracle::rel_err(oracle::dense_solve(p.k, p.y, a2, 0.1), c_a2) < 1e-13);

    CHECK(objective_value(c_identity, p.k, p.y, eye, 0.1) == doctest::Approx(0.36599552841978455).epsilon(1e-12));
    CHECK(objective_value(c_a2, p.k, p.y, a2, 0.1) == doctest::Approx(0.26357845209838343).epsilon(1e-12));
}

TEST_CASE("Kronecker solve matches the dense solves") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const Index t = 1 + trial % 5, m = 1 + trial % 4, d = 1 + trial % 6;
        const Eigen::MatrixXd x = oracle::random_normal(t, 3, rng);
        const Eigen::MatrixXd grid = oracle::random_normal(m, 2, rng);
        const Eigen::MatrixXd kx = gaussian_gram(x, 0.4);
        const Eigen::MatrixXd kt = gaussian_gram(grid, 0.8);
        const Eigen::MatrixXd k = oracle::kron_loop(kx, kt);
        const Eigen::MatrixXd y = oracle::random_normal(t * m, d, rng);
        const Eigen::MatrixXd a = oracle::random_spd(d, rng);
        const double lambda = 0.05;
        const Eigen::MatrixXd ref = oracle::dense_solve(k, y, a, lambda);
        CHECK(oracle::rel_err(solve_kron(kx, kt, y, a, lambda), ref) < 1e-10);
        CHECK(oracle::rel_err(solve_sylvester(k, y, a, lambda), ref) < 1e-10);
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
        CHECK(oracle::rel_err(solve_kron(kx, kt, y, eye, lambda), solve_ridge_identity(k, y, lambda)) < 1e-10);
    }
}

TEST_CASE("gradient vanishes at the solution and matches finite differences") {
    std::mt19937_64 rng(8);
    const Index n = 6, d = 3;
    const Eigen::MatrixXd x = oracle::random_normal(n, 2, rng);
    const Eigen::MatrixXd k = gaussian_gram(x, 0.5);
    const Eigen::MatrixXd y = oracle::random_normal(n, d, rng);
    const Eigen::MatrixXd a = oracle::random_spd(d, rng);
    const double lambda = 0.02;

    const Eigen::MatrixXd c = solve_sylvester(k, y, a, lambda);
    CHECK(objective_gradient(c, k, y, a, lambda).norm() <= 1e-10 * y.norm());

    const Eigen::MatrixXd c0 = oracle::random_normal(n, d, rng);
    CHECK(objective_value(c0, k, y, a, lambda) == doctest::Approx(oracle::loop_objective(c0, k, y, a, lambda)).epsilon(1e-12));
    const auto f = [&](const Eigen::MatrixXd& cc) { return objective_value(cc, k, y, a, lambda); };
    const Eigen::MatrixXd fd = oracle::central_difference(f, c0, 1e-5);
    CHECK(oracle::rel_err(objective_gradient(c0, k, y, a, lambda), fd) < 1e-7);
}

TEST_CASE("solver argument checks") {
    const Tiny p;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(solve_ridge_identity(p.k, p.y, 0.0), InvalidArgument);
    CHECK_THROWS_AS(solve_sylvester(p.k, p.y, eye, -1.0), InvalidArgument);
    CHECK_THROWS_AS(solve_ridge_identity(p.k, p.y.topRows(3), 0.1), DimensionError);
    CHECK_THROWS_AS(solve_sylvester(p.k, p.y, Eigen::MatrixXd::Identity(3, 3), 0.1), DimensionError);
    Eigen::Matrix2d asym;
    asym << 1, 1, 0, 1;
    CHECK_THROWS_AS(solve_sylvester(p.k, p.y, asym, 0.1), InvalidArgument);
    CHECK_THROWS_AS(solve_sylvester(Eigen::MatrixXd(-p.k), p.y, eye, 0.1), NumericalError);
    CHECK_THROWS_AS(solve_kron(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(3, 3), p.y, eye, 0.1),
                    DimensionError);
}

TEST_CASE("near-zero negative eigenvalues are clamped") {
    Eigen::Matrix2d m;
    m << 1, 1, 1, 1;  // eigenvalues 0 and 2; round-off may push 0 below zero
    const auto e = psd_eigen(m, "test");
    CHECK(e.values.minCoeff() >= 0.0);
}

TEST_CASE("low-rank output matrix from the output covariance") {
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd basis = oracle::random_normal(5, 2, rng);
    const Eigen::MatrixXd y = oracle::random_normal(20, 2, rng) * basis.transpose();  // rank 2
    const auto full = build_lowrank_A(y, 5);
    CHECK((full.a - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-12);
    for (Index k = 1; k < 5; ++k) CHECK(full.eigenvalues(k - 1) >= full.eigenvalues(k));

    const auto two = build_lowrank_A(y, 2);
    CHECK(two.rank == 2);
    CHECK((y * two.a - y).norm() < 1e-10 * y.norm());  // projection keeps the span
    CHECK((two.a * two.a - two.a).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(build_lowrank_A(y, 0).a.isZero(0.0));
    CHECK_THROWS_AS(build_lowrank_A(y, 6), InvalidArgument);
    CHECK_THROWS_AS(build_lowrank_A(y, -1), InvalidArgument);
}
