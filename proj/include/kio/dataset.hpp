#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kio/types.hpp"

namespace kio {

// Tolerance for validating that an expert decision satisfies its own
// constraints. Files carry rounding, so exact feasibility is not required.
inline constexpr double kFeasTol = 1e-6;

struct SignalDecisionRecord {
    Vector s;  // exogenous signal, length d_s
    Vector u;  // expert decision, length n
    Matrix M;  // constraint matrix, m x n
    Vector W;  // constraint vector, length m
};

struct Dataset {
    std::vector<SignalDecisionRecord> records;
    std::string name;
    bool shared_constraints = false;

    int size() const { return static_cast<int>(records.size()); }
    int n() const { return static_cast<int>(records.front().u.size()); }
    int d_s() const { return static_cast<int>(records.front().s.size()); }
    int m() const { return static_cast<int>(records.front().W.size()); }
};

struct NormalizationStats {
    Vector mean;
    Vector std;  // componentwise, floor-clamped to stay positive

    Vector normalize(const Vector& s) const;
    Vector denormalize(const Vector& z) const;
};

enum class FeatureKind { Linear, RandomFourier, Polynomial };

struct FeatureMapSpec {
    FeatureKind kind = FeatureKind::Linear;
    int count = 32;             // random-fourier feature count
    double bandwidth = 1.0;     // random-fourier frequency scale
    std::uint64_t seed = 0;     // random-fourier frequency seed
    int degree = 2;             // polynomial degree
};

// Explicit feature map used only by the synthetic expert; the learned model
// never materializes features.
class FeatureMap {
  public:
    FeatureMap(FeatureMapSpec spec, int d_s);

    Vector operator()(const Vector& s) const;
    int dim() const { return dim_; }

  private:
    FeatureMapSpec spec_;
    int d_s_ = 0;
    int dim_ = 0;
    Matrix omega_;  // random-fourier frequencies, count x d_s
    Vector phase_;  // random-fourier phases
};

enum class ConstraintKind { Box, General };

struct SyntheticExpertSpec {
    int n = 2;
    int d_s = 2;
    Matrix theta_uu_true;       // n x n, symmetric, min eigenvalue >= 1
    FeatureMapSpec feature_map;
    Matrix theta_su_true;       // feature dim x n
    ConstraintKind constraint_kind = ConstraintKind::Box;
    double box_bound = 1.0;
    Matrix M;                   // general constraints only
    Vector W;
    double noise_std = 0.0;
    std::uint64_t seed = 0;

    int m() const;
    Matrix constraint_M() const;
    Vector constraint_W() const;
};

Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path);
void validate_dataset(const Dataset& ds);

NormalizationStats fit_normalizer(const Dataset& ds);
Dataset apply_normalizer(const Dataset& ds, const NormalizationStats& stats);

// Ground-truth objective of the synthetic expert: u' Quu u + 2 phi(s)' Qsu u.
double true_objective(const SyntheticExpertSpec& spec, const FeatureMap& fm,
                      const Vector& s, const Vector& u);

// Draws signals uniformly from [-1,1]^{d_s}, solves the ground-truth FOP for
// each, and adds Gaussian noise projected back to the feasible set.
Dataset generate_synthetic(const SyntheticExpertSpec& spec, int N);

}  // namespace kio
