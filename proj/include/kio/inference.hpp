#pragma once

#include <map>
#include <string>
#include <vector>

#include "kio/dataset.hpp"
#include "kio/dualcore.hpp"
#include "kio/kernels.hpp"

namespace kio {

inline constexpr double kFopTol = 1e-8;

struct TrainedModel {
    KernelSpec kernel;
    std::vector<Vector> train_signals;  // normalized
    std::vector<Vector> alpha;          // representer coefficients, length n each
    Matrix theta_uu;                    // identity in simplified mode
    NormalizationStats norm;
    double k = 0.0;
    std::map<std::string, std::string> meta;

    int size() const { return static_cast<int>(train_signals.size()); }
    int n() const { return static_cast<int>(alpha.front().size()); }

    std::string to_json() const;
    static TrainedModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static TrainedModel load(const std::string& path);
};

struct FopInstance {
    Matrix Q;  // n x n, >= I
    Vector c;
    Matrix M;
    Vector W;
};

TrainedModel recover_model(const ProblemData& pd, const DualState& x,
                           const NormalizationStats& norm);

// Assembles the learned forward problem for a raw (unnormalized) signal.
FopInstance build_fop(const TrainedModel& model, const Vector& s_new,
                      const Matrix& M, const Vector& W);

Vector solve_fop(const FopInstance& f);

// Convenience: build + solve with the record's own constraints.
Vector predict(const TrainedModel& model, const Vector& s_new, const Matrix& M,
               const Vector& W);

double suboptimality_loss(const TrainedModel& model, const Dataset& ds);

struct ImitationReport {
    double decision_error = 0.0;  // mean ||u_pred - u_hat||
    double regret = 0.0;          // mean ground-truth objective gap
    double expert_objective_magnitude = 0.0;  // mean |F_true(s, u_true_opt)|
};

ImitationReport evaluate_imitation(const TrainedModel& model,
                                   const SyntheticExpertSpec& spec,
                                   const Dataset& ds_test);

}  // namespace kio
