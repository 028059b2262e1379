#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kio/dualcore.hpp"

namespace kio {

struct SsoConfig {
    int p = 0;                    // coordinates per iteration; 0 = N/2
    int T = 50;                   // max iterations
    double random_fraction = 0.1; // share of each batch drawn at random
    int warmup_partitions = 2;    // 0 = no warm-up
    double stop_tol = 1e-8;       // relative objective-change stopping threshold
    std::uint64_t seed = 0;
    bool paper_literal_warmup = false;  // use per-partition N_i scalings
};

struct ConvergenceRow {
    int iteration;
    double objective;
    double max_violator;
    double time_ms;
    int n_heuristic;
    int n_random;
};

struct ConvergenceLog {
    std::vector<ConvergenceRow> rows;
    bool converged = false;

    std::string to_csv() const;
};

// KKT violation score of coordinate i (block-trace condition in closed form).
double kkt_violator(const ProblemData& pd, const DualState& x, int i);

// Violators for all coordinates in one pass; column i of dual_linear_terms is
// reused so this is O(N^2 n) total rather than per index.
Vector kkt_violators(const ProblemData& pd, const DualState& x);

// Indices whose linear slack W_i/N - 2 M_i Gamma_i is componentwise strictly
// positive; only these can be certified suboptimal by the violator score.
std::vector<bool> eligible_mask(const ProblemData& pd, const DualState& x);

struct Selection {
    std::vector<int> indices;
    int n_heuristic = 0;
    int n_random = 0;
};

Selection select_coordinates(const ProblemData& pd, const DualState& x,
                             const SsoConfig& cfg, std::mt19937_64& rng);

DualState warm_up(const ProblemData& pd, const SsoConfig& cfg);

struct SsoResult {
    DualState state;
    ConvergenceLog log;
};

SsoResult sso_train(const ProblemData& pd, const SsoConfig& cfg);

}  // namespace kio
