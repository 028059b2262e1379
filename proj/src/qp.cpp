#include "kio/qp.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace kio {

namespace {

constexpr double kActiveTol = 1e-11;  // slack below this counts as active

}  // namespace

QpResult solve_qp(const Matrix& H, const Vector& g, const Matrix& A,
                  const Vector& b, const Vector& x0, const QpOptions& opts) {
    const int dim = static_cast<int>(H.rows());
    const int m = static_cast<int>(A.rows());
    if (H.cols() != dim || g.size() != dim || x0.size() != dim ||
        (m > 0 && A.cols() != dim) || b.size() != m) {
        throw DimensionError("solve_qp: inconsistent dimensions");
    }

    Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success) {
        throw SolverFailure("solve_qp: Hessian is not positive definite");
    }

    // Tolerances scale with the objective so a uniform positive multiplier on
    // (H, g) cannot change the iteration path.
    const double scale = std::max({1.0, g.lpNorm<Eigen::Infinity>(),
                                   H.diagonal().lpNorm<Eigen::Infinity>()});
    const double mu_tol = opts.tol * scale;
    const double step_tol = opts.tol;
    const int max_iters =
        opts.max_iterations > 0 ? opts.max_iterations : 50 * (dim + m + 10);

    Vector x = x0;
    std::vector<int> work;  // indices of rows treated as equalities
    work.reserve(m);
    Matrix Y(dim, 0);       // cached H^{-1} A_W' columns
    Matrix S(0, 0);         // cached A_W Y (Schur complement)

    for (int i = 0; i < m; ++i) {
        double slack = b(i) - A.row(i).dot(x);
        if (slack < -kActiveTol * scale) {
            throw SolverFailure("solve_qp: starting point infeasible");
        }
    }

    auto add_constraint = [&](int row) {
        const int na = static_cast<int>(work.size());
        work.push_back(row);
        Y.conservativeResize(Eigen::NoChange, na + 1);
        Y.col(na) = llt.solve(A.row(row).transpose());
        S.conservativeResize(na + 1, na + 1);
        for (int c = 0; c < na; ++c) {
            S(na, c) = A.row(row).dot(Y.col(c));
            S(c, na) = A.row(work[c]).dot(Y.col(na));
        }
        S(na, na) = A.row(row).dot(Y.col(na));
    };
    auto drop_constraint = [&](int pos) {
        work.erase(work.begin() + pos);
        const int last = static_cast<int>(Y.cols()) - 1;
        for (int c = pos; c < last; ++c) Y.col(c) = Y.col(c + 1);
        Y.conservativeResize(Eigen::NoChange, last);
        for (int c = pos; c < last; ++c) S.col(c) = S.col(c + 1);
        for (int r = pos; r < last; ++r) S.row(r) = S.row(r + 1);
        S.conservativeResize(last, last);
    };

    QpResult res;
    for (int iter = 0; iter < max_iters; ++iter) {
        res.iterations = iter + 1;
        const int na = static_cast<int>(work.size());
        Vector r = H * x + g;
        Vector hr = llt.solve(r);

        Vector mu(na), d;
        if (na == 0) {
            d = -hr;
        } else {
            // A_W x = b_W may hold only approximately; aim the step at the
            // constraint surface, not parallel to it.
            Vector resid(na);
            for (int c = 0; c < na; ++c) {
                resid(c) = A.row(work[c]).dot(x) - b(work[c]);
            }
            Eigen::LDLT<Matrix> sldlt(S);
            mu = sldlt.solve(-(Y.transpose() * r) + resid);
            d = -hr - Y * mu;
        }

        if (d.lpNorm<Eigen::Infinity>() <= step_tol) {
            // Stationary on the working set; check multiplier signs.
            int worst = -1;
            double worst_mu = -mu_tol;
            for (int c = 0; c < na; ++c) {
                if (mu(c) < worst_mu) {
                    worst_mu = mu(c);
                    worst = c;
                }
            }
            if (worst < 0) {
                res.x = x;
                res.mu = Vector::Zero(m);
                for (int c = 0; c < na; ++c) res.mu(work[c]) = std::max(0.0, mu(c));
                res.converged = true;
                return res;
            }
            drop_constraint(worst);
            continue;
        }

        // Ratio test over constraints outside the working set.
        double alpha = 1.0;
        int blocking = -1;
        for (int i = 0; i < m; ++i) {
            if (std::find(work.begin(), work.end(), i) != work.end()) continue;
            double ad = A.row(i).dot(d);
            if (ad <= 1e-14 * scale) continue;
            double slack = b(i) - A.row(i).dot(x);
            double ratio = std::max(0.0, slack) / ad;
            if (ratio < alpha - 1e-15) {
                alpha = ratio;
                blocking = i;
            } else if (blocking >= 0 && std::abs(ratio - alpha) <= 1e-15 &&
                       i < blocking) {
                blocking = i;  // deterministic tie-break
            }
        }
        x += alpha * d;
        if (blocking >= 0) add_constraint(blocking);
    }
    throw SolverFailure("solve_qp: maximum iterations exceeded");
}

Vector find_feasible_point(const Matrix& A, const Vector& b) {
    const int dim = static_cast<int>(A.cols());
    const int m = static_cast<int>(A.rows());
    Vector x0 = Vector::Zero(dim);
    if (m == 0) return x0;
    double worst = (A * x0 - b).maxCoeff();
    if (worst <= 0) return x0;

    // Phase-1: minimize s + eps*(||x||^2 + s^2) subject to A x - s 1 <= b,
    // -s <= current violation bound; strictly convex so the same engine applies.
    const double eps = 1e-6;
    const int d1 = dim + 1;
    Matrix H = Matrix::Identity(d1, d1) * (2 * eps);
    Vector g = Vector::Zero(d1);
    g(dim) = 1.0;
    Matrix A1(m + 1, d1);
    A1.setZero();
    A1.block(0, 0, m, dim) = A;
    A1.col(dim).head(m).setConstant(-1.0);
    A1(m, dim) = -1.0;  // s >= 0
    Vector b1(m + 1);
    b1.head(m) = b;
    b1(m) = 0.0;
    Vector z0 = Vector::Zero(d1);
    z0(dim) = worst + 1.0;
    QpResult r = solve_qp(H, g, A1, b1, z0);
    Vector x = r.x.head(dim);
    if ((A * x - b).maxCoeff() > 1e-7) {
        throw Infeasible("find_feasible_point: region appears empty");
    }
    return x;
}

}  // namespace kio
