#pragma once

#include <string>

#include "kio/dataset.hpp"
#include "kio/dualcore.hpp"

namespace kio {

// Training checkpoint: the dual variables alongside the hyperparameters
// needed to re-evaluate residuals later.
std::string dual_state_to_json(const DualState& x, double k, double scalar,
                               DualMode mode);
struct DualCheckpoint {
    DualState state;
    double k = 0.0;
    double scalar = 1.0;
    DualMode mode = DualMode::Simplified;
};
DualCheckpoint dual_state_from_json(const std::string& text);

void save_dual_state(const std::string& path, const DualState& x, double k,
                     double scalar, DualMode mode);
DualCheckpoint load_dual_state(const std::string& path);

// Ground-truth sidecar written next to generated datasets so regret against
// the true expert objective can be evaluated later.
std::string expert_spec_to_json(const SyntheticExpertSpec& spec);
SyntheticExpertSpec expert_spec_from_json(const std::string& text);
void save_expert_spec(const SyntheticExpertSpec& spec, const std::string& path);
SyntheticExpertSpec load_expert_spec(const std::string& path);

}  // namespace kio
