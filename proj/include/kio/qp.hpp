#pragma once

#include "kio/types.hpp"

namespace kio {

// Primal active-set solver for strictly convex QPs
//   minimize 0.5 x'Hx + g'x   subject to  A x <= b,
// with H symmetric positive definite. Requires a feasible starting point.
//
// Multipliers are reported for the inequality constraints (zero on inactive
// rows), so callers get a KKT certificate: H x + g + A' mu = 0, mu >= 0,
// mu_i (A_i x - b_i) = 0.

struct QpResult {
    Vector x;
    Vector mu;        // one entry per row of A
    int iterations = 0;
    bool converged = false;
};

struct QpOptions {
    double tol = 1e-8;         // KKT residual tolerance
    int max_iterations = 0;    // 0 = automatic (scales with problem size)
};

QpResult solve_qp(const Matrix& H, const Vector& g, const Matrix& A,
                  const Vector& b, const Vector& x0, const QpOptions& opts = {});

// Finds a feasible point of {x : A x <= b} via a slack-minimizing QP.
// Throws Infeasible if the region is (numerically) empty.
Vector find_feasible_point(const Matrix& A, const Vector& b);

}  // namespace kio
