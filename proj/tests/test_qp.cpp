#include <doctest.h>

#include <random>

#include "kio/qp.hpp"

using namespace kio;

namespace {

Matrix box_constraints(int n, double bound, Vector& b) {
    Matrix A(2 * n, n);
    A.topRows(n) = Matrix::Identity(n, n);
    A.bottomRows(n) = -Matrix::Identity(n, n);
    b = Vector::Constant(2 * n, bound);
    return A;
}

// Projected gradient oracle for box-constrained QPs; independent of the
// active-set path.
Vector pg_oracle(const Matrix& H, const Vector& g, double bound, int iters) {
    const int n = static_cast<int>(H.rows());
    Vector x = Vector::Zero(n);
    double L = Eigen::SelfAdjointEigenSolver<Matrix>(H).eigenvalues().maxCoeff();
    for (int t = 0; t < iters; ++t) {
        x -= (H * x + g) / L;
        x = x.cwiseMin(bound).cwiseMax(-bound);
    }
    return x;
}

}  // namespace

TEST_CASE("unconstrained minimum inside the box") {
    Matrix H = 2.0 * Matrix::Identity(2, 2);
    Vector g(2);
    g << -1.0, 0.5;
    Vector b;
    Matrix A = box_constraints(2, 10.0, b);
    QpResult r = solve_qp(H, g, A, b, Vector::Zero(2));
    CHECK(r.converged);
    CHECK((r.x + g / 2.0).norm() == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(r.mu.maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("separable clip solution on the box") {
    Matrix H = 2.0 * Matrix::Identity(3, 3);
    Vector g(3);
    g << -5.0, 1.0, 0.2;
    Vector b;
    Matrix A = box_constraints(3, 1.0, b);
    QpResult r = solve_qp(H, g, A, b, Vector::Zero(3));
    Vector expect(3);
    expect << 1.0, -0.5, -0.1;
    CHECK((r.x - expect).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("KKT certificate holds on random box instances") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 2 + static_cast<int>(rng() % 4);
        Matrix R(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) R(i, j) = normal(rng);
        Matrix H = R * R.transpose() + Matrix::Identity(n, n);
        Vector g(n);
        for (int i = 0; i < n; ++i) g(i) = 2.0 * normal(rng);
        Vector b;
        Matrix A = box_constraints(n, 1.0, b);
        QpResult r = solve_qp(H, g, A, b, Vector::Zero(n));
        REQUIRE(r.converged);
        Vector stat = H * r.x + g + A.transpose() * r.mu;
        CHECK(stat.lpNorm<Eigen::Infinity>() < 1e-6);
        CHECK(r.mu.minCoeff() >= 0.0);
        CHECK((A * r.x - b).maxCoeff() < 1e-9);
        double comp = r.mu.dot(b - A * r.x);
        CHECK(std::abs(comp) < 1e-6);
        Vector oracle = pg_oracle(H, g, 1.0, 20000);
        CHECK((r.x - oracle).lpNorm<Eigen::Infinity>() < 1e-5);
    }
}

TEST_CASE("general polytope with coupled rows") {
    // min (x-2)^2 + (y-2)^2 s.t. x + y <= 1, x,y >= 0
    Matrix H = 2.0 * Matrix::Identity(2, 2);
    Vector g(2);
    g << -4.0, -4.0;
    Matrix A(3, 2);
    A << 1, 1, -1, 0, 0, -1;
    Vector b(3);
    b << 1, 0, 0;
    QpResult r = solve_qp(H, g, A, b, Vector::Zero(2));
    CHECK(r.x(0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(r.x(1) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("infeasible start is rejected") {
    Matrix H = Matrix::Identity(1, 1);
    Vector g = Vector::Zero(1);
    Matrix A(1, 1);
    A << 1;
    Vector b(1);
    b << -1.0;
    CHECK_THROWS_AS(solve_qp(H, g, A, b, Vector::Zero(1)), SolverFailure);
}

TEST_CASE("phase-1 finds a feasible point") {
    Matrix A(3, 2);
    A << -1, 0, 0, -1, 1, 1;
    Vector b(3);
    b << -2, -2, 10;  // x,y >= 2, x+y <= 10
    Vector x = find_feasible_point(A, b);
    CHECK((A * x - b).maxCoeff() <= 1e-7);
}

TEST_CASE("empty region reported infeasible") {
    Matrix A(2, 1);
    A << 1, -1;
    Vector b(2);
    b << -1, -1;  // x <= -1 and x >= 1
    CHECK_THROWS_AS(find_feasible_point(A, b), Infeasible);
}
