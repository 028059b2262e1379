#include "kio/dualcore.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "kio/qp.hpp"

namespace kio {

namespace {

// Columns v_i = u_i/N - 2 Gamma_i.
Matrix residual_columns(const ProblemData& pd, const DualState& x) {
    const int N = pd.N();
    const int n = pd.n();
    Matrix V(n, N);
    for (int i = 0; i < N; ++i) {
        V.col(i) = pd.dataset.records[i].u / N - 2.0 * x.gamma[i];
    }
    return V;
}

Matrix psd_projection(const Matrix& A) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()));
    Vector ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

DualState DualState::zero(int N, int n, DualMode mode) {
    DualState x;
    x.gamma.assign(N, Vector::Zero(n));
    x.lambda.assign(N, Matrix::Zero(n, n));
    if (mode == DualMode::General) x.P = Matrix::Zero(n, n);
    return x;
}

ProblemData make_problem(Dataset normalized, const KernelSpec& kernel, double k,
                         double scalar, DualMode mode) {
    if (k <= 0) throw Error("make_problem: k must be positive");
    if (scalar <= 0) throw Error("make_problem: scalar must be positive");
    std::vector<Vector> signals;
    signals.reserve(normalized.size());
    for (const auto& rec : normalized.records) signals.push_back(rec.s);
    GramMatrix G = gram(kernel, signals);
    return ProblemData{std::move(normalized), std::move(G), k, scalar, mode};
}

Matrix eliminate_lambda(const Vector& gamma_i, int N) {
    return 4.0 * N * gamma_i * gamma_i.transpose();
}

double eval_dual_objective(const ProblemData& pd, const DualState& x) {
    if ((pd.mode == DualMode::General) != x.P.has_value()) {
        throw ModeMismatch("eval_dual_objective: P present iff mode is general");
    }
    const int N = pd.N();
    Matrix V = residual_columns(pd, x);
    double kernel_term = ((V * pd.gram.K).cwiseProduct(V)).sum() / pd.k;
    if (pd.mode == DualMode::Simplified) {
        double trace_sum = 0.0;
        for (const auto& L : x.lambda) trace_sum += L.trace();
        return kernel_term + trace_sum;
    }
    Matrix C = Matrix::Zero(pd.n(), pd.n());
    for (int i = 0; i < N; ++i) {
        const Vector& u = pd.dataset.records[i].u;
        C += u * u.transpose() / N;
        C -= x.lambda[i];
    }
    return kernel_term + (C - *x.P).squaredNorm() / (4.0 * pd.k) - x.P->trace();
}

DualState solve_subproblem_simplified(const ProblemData& pd, const DualState& x,
                                      const std::vector<int>& S) {
    const int N = pd.N();
    const int n = pd.n();
    const int p = static_cast<int>(S.size());
    if (p == 0) throw Error("solve_subproblem_simplified: empty index set");
    for (int i : S) {
        if (i < 0 || i >= N) throw IndexOutOfRange("subproblem index out of range");
    }

    Matrix V = residual_columns(pd, x);
    Matrix T = V * pd.gram.K;  // column i = sum_j K_ij v_j

    const int dim = p * n;
    Matrix H = Matrix::Zero(dim, dim);
    Vector g(dim);
    for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) {
            double kab = pd.gram.K(S[a], S[b]);
            H.block(a * n, b * n, n, n) =
                (8.0 / pd.k) * kab * Matrix::Identity(n, n);
        }
        H.block(a * n, a * n, n, n) += 8.0 * N * Matrix::Identity(n, n);
        Vector lin = T.col(S[a]);
        for (int b = 0; b < p; ++b) {
            lin += 2.0 * pd.gram.K(S[a], S[b]) * x.gamma[S[b]];
        }
        g.segment(a * n, n) = -(4.0 / pd.k) * lin;
    }

    int m_total = 0;
    for (int i : S) m_total += static_cast<int>(pd.dataset.records[i].W.size());
    Matrix A = Matrix::Zero(m_total, dim);
    Vector b(m_total);
    Vector x0(dim);
    int row = 0;
    for (int a = 0; a < p; ++a) {
        const auto& rec = pd.dataset.records[S[a]];
        const int m = static_cast<int>(rec.W.size());
        A.block(row, a * n, m, n) = 2.0 * rec.M;
        b.segment(row, m) = rec.W / N;
        row += m;
        x0.segment(a * n, n) = x.gamma[S[a]];
    }

    if ((A * x0 - b).maxCoeff() > kFeasTol) {
        throw SolverFailure("solve_subproblem_simplified: state infeasible");
    }

    QpOptions opts;
    opts.tol = kQpTol;
    QpResult r = solve_qp(pd.scalar * H, pd.scalar * g, A, b, x0, opts);
    if (!r.converged) {
        throw SolverFailure("solve_subproblem_simplified: QP did not converge");
    }

    DualState out = x;
    for (int a = 0; a < p; ++a) {
        out.gamma[S[a]] = r.x.segment(a * n, n);
        out.lambda[S[a]] = eliminate_lambda(out.gamma[S[a]], N);
    }
    return out;
}

DualState solve_general(const ProblemData& pd, const DualState& x0,
                        const GeneralSolveOptions& opts) {
    if (pd.mode != DualMode::General) {
        throw ModeMismatch("solve_general: problem mode is not general");
    }
    const int N = pd.N();
    const int n = pd.n();

    DualState x = x0;
    if (!x.P) x.P = Matrix::Zero(n, n);

    Matrix C0 = Matrix::Zero(n, n);
    for (const auto& rec : pd.dataset.records) {
        C0 += rec.u * rec.u.transpose() / N;
    }

    std::vector<int> full(N);
    for (int i = 0; i < N; ++i) full[i] = i;

    double prev = eval_dual_objective(pd, x);
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        // Gamma step: exact coordinate minimization with Lambda on the
        // boundary of the block constraint.
        DualState xs = x;
        xs.P.reset();
        xs = solve_subproblem_simplified(pd, xs, full);
        x.gamma = xs.gamma;
        x.lambda = xs.lambda;

        // Lambda step: shifted PSD projection of the Frobenius term, block
        // constraint Lambda_i >= 4N Gamma_i Gamma_i' kept exactly.
        Matrix lambda_sum = Matrix::Zero(n, n);
        for (const auto& L : x.lambda) lambda_sum += L;
        for (int i = 0; i < N; ++i) {
            Matrix B = eliminate_lambda(x.gamma[i], N);
            Matrix T = C0 - (lambda_sum - x.lambda[i]) - *x.P;
            Matrix Lnew = B + psd_projection(T - B);
            lambda_sum += Lnew - x.lambda[i];
            x.lambda[i] = Lnew;
        }

        // P step: closed form.
        x.P = psd_projection(C0 - lambda_sum +
                             2.0 * pd.k * Matrix::Identity(n, n));

        double obj = eval_dual_objective(pd, x);
        if (std::abs(prev - obj) <= opts.tol * std::max(1.0, std::abs(obj))) {
            break;
        }
        prev = obj;
    }
    return x;
}

Matrix dual_linear_terms(const ProblemData& pd, const DualState& x) {
    Matrix V = residual_columns(pd, x);
    return -(2.0 / pd.k) * (V * pd.gram.K);
}

double KktReport::max_residual() const {
    double r = 0.0;
    r = std::max(r, stationarity_su.maxCoeff());
    r = std::max(r, stationarity_lambda.maxCoeff());
    r = std::max(r, comp_slack_lambda.maxCoeff());
    r = std::max(r, comp_slack_block.maxCoeff());
    r = std::max(r, primal_feas.maxCoeff());
    return r;
}

KktReport kkt_report(const ProblemData& pd, const DualState& x) {
    if (pd.mode != DualMode::Simplified) {
        throw ModeMismatch("kkt_report: simplified mode only");
    }
    const int N = pd.N();
    const int n = pd.n();
    Matrix G = dual_linear_terms(pd, x);

    KktReport rep;
    rep.stationarity_su.resize(N);
    rep.stationarity_lambda.resize(N);
    rep.comp_slack_lambda.resize(N);
    rep.comp_slack_block.resize(N);
    rep.primal_feas.resize(N);
    rep.gamma_small.resize(N);
    rep.lambda_small.resize(N);
    rep.lambda_tilde.resize(N);

    const double active_tol = 1e-7;
    for (int i = 0; i < N; ++i) {
        const auto& rec = pd.dataset.records[i];
        const int m = static_cast<int>(rec.W.size());
        Vector g_i = G.col(i);
        Vector tilde = rec.W / N - 2.0 * rec.M * x.gamma[i];
        rep.lambda_tilde[i] = tilde;

        // Complementary slackness pins lambda to zero wherever the slack is
        // strictly positive; on active rows the multiplier is recovered from
        // the stationarity system in least squares.
        std::vector<int> active;
        for (int r = 0; r < m; ++r) {
            if (tilde(r) <= active_tol) active.push_back(r);
        }
        Vector lam = Vector::Zero(m);
        double signed_min = 0.0;
        if (!active.empty()) {
            Matrix Ma(static_cast<int>(active.size()), n);
            for (size_t r = 0; r < active.size(); ++r) {
                Ma.row(static_cast<int>(r)) = rec.M.row(active[r]);
            }
            Vector rhs = -(4.0 * N * x.gamma[i] + g_i);
            Vector la = Ma.transpose()
                            .colPivHouseholderQr()
                            .solve(rhs);
            signed_min = std::min(0.0, la.minCoeff());
            for (size_t r = 0; r < active.size(); ++r) {
                lam(active[r]) = std::max(0.0, la(static_cast<int>(r)));
            }
        }
        rep.lambda_small[i] = lam;

        Vector h = rec.M.transpose() * lam + g_i;
        rep.gamma_small(i) = h.squaredNorm();
        rep.stationarity_su(i) =
            (4.0 * N * x.gamma[i] + h).lpNorm<Eigen::Infinity>();
        rep.stationarity_lambda(i) = std::max(0.0, -tilde.minCoeff());
        rep.comp_slack_lambda(i) = std::abs(tilde.dot(lam));
        rep.comp_slack_block(i) = std::abs(
            x.lambda[i].trace() + 2.0 * x.gamma[i].dot(h) +
            h.squaredNorm() / (4.0 * N));
        rep.primal_feas(i) = -signed_min;
    }
    return rep;
}

}  // namespace kio
