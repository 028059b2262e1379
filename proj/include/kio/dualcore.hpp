#pragma once

#include <optional>
#include <vector>

#include "kio/dataset.hpp"
#include "kio/kernels.hpp"
#include "kio/types.hpp"

namespace kio {

inline constexpr double kQpTol = 1e-8;

enum class DualMode { Simplified, General };

// Dual variables {Lambda_i, Gamma_i} (and P in general mode). The index i is
// the coordinate identity used by the training loop.
struct DualState {
    std::vector<Vector> gamma;   // N vectors, length n
    std::vector<Matrix> lambda;  // N symmetric PSD n x n matrices
    std::optional<Matrix> P;     // general mode only

    static DualState zero(int N, int n, DualMode mode);
};

struct ProblemData {
    Dataset dataset;   // signals already normalized
    GramMatrix gram;
    double k = 1e-4;   // regularization weight
    double scalar = 1.0;  // inner-solver objective multiplier
    DualMode mode = DualMode::Simplified;

    int N() const { return dataset.size(); }
    int n() const { return dataset.n(); }
};

ProblemData make_problem(Dataset normalized, const KernelSpec& kernel, double k,
                         double scalar, DualMode mode);

// Trace-minimal Lambda satisfying the block constraint: Lambda = 4N Gamma Gamma'.
Matrix eliminate_lambda(const Vector& gamma_i, int N);

double eval_dual_objective(const ProblemData& pd, const DualState& x);

// Exact minimization of the reduced dual over the coordinates in S, all other
// coordinates held fixed; Lambda_i is re-eliminated for i in S.
DualState solve_subproblem_simplified(const ProblemData& pd, const DualState& x,
                                      const std::vector<int>& S);

struct GeneralSolveOptions {
    double tol = 1e-7;      // relative objective-change stopping threshold
    int max_iterations = 5000;
};

DualState solve_general(const ProblemData& pd, const DualState& x0,
                        const GeneralSolveOptions& opts = {});

// Linear coefficients g_i = 2 theta_su' phi(s_i), evaluated through kernel
// products only; column i of the result is g_i.
Matrix dual_linear_terms(const ProblemData& pd, const DualState& x);

struct KktReport {
    // Per-index residuals for the five optimality conditions.
    Vector stationarity_su;
    Vector stationarity_lambda;
    Vector comp_slack_lambda;
    Vector comp_slack_block;
    Vector primal_feas;
    // Derived quantities.
    std::vector<Vector> lambda_small;        // lambda_i (multipliers)
    std::vector<Vector> lambda_tilde;        // W_i/N - 2 M_i Gamma_i
    Vector gamma_small;                      // gamma_i = ||M_i' lambda_i + g_i||^2

    double max_residual() const;
};

KktReport kkt_report(const ProblemData& pd, const DualState& x);

}  // namespace kio
