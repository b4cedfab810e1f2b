#pragma once

#include <cstdint>
#include <string>

#include "satsched/agents.hpp"

namespace satsched::io {

/**
 * @brief Binary policy checkpoints.
 *
 * A checkpoint stores the scenario's configuration hash, the policy kind,
 * and every agent's actor and critic parameters (little-endian IEEE-754
 * doubles). Optimizer state is not persisted: a checkpoint is an evaluation
 * and deployment artifact. Loading verifies the magic, the configuration
 * hash, the policy kind, and every network shape, and throws
 * std::runtime_error with the offending detail on any mismatch.
 */
void save_policy(const std::string& path, const learn::Scheduler& sched,
                 std::uint64_t config_hash);

void load_policy(const std::string& path, learn::Scheduler& sched,
                 std::uint64_t config_hash);

} // namespace satsched::io
