#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ixdrl/agent.hpp"
#include "ixdrl/env.hpp"
#include "ixdrl/types.hpp"

namespace ixdrl {

// Which model outputs each datapoint carries. Trimming fields mimics
// algorithm families that expose only part of the interaction data.
struct ProbeOptions {
  bool value = true;
  bool policy = true;
  bool action_values = true;
  bool ensemble = true;
};

struct RolloutOptions {
  ProbeOptions probe;
  std::string trace_prefix = "t";
  int agent_episodes = 200;  // episodes logged for ensemble training
};

// Samples n_traces episodes with the agent's softmax policy, probing every
// requested model output at each step. Each trace draws from an independent
// RNG stream derived from (seed, trace index), so results are deterministic
// and independent of scheduling. Rewards land on the datapoint of the state
// they were received in (step 0 has reward 0).
TraceSet rollout(const GridworldSpec& env, const ToyAgentBundle& agent, int n_traces,
                 std::uint64_t seed, const RolloutOptions& opts = {});

TraceSet rollout(const LineWorldSpec& env, const LineAgentBundle& agent, int n_traces,
                 std::uint64_t seed, const RolloutOptions& opts = {});

// Trains an agent per component and concatenates proportionally-sized
// rollouts into one TraceSet; each trace's metadata carries its true regime
// index. All components must share the action-space shape and discount.
TraceSet make_regime_mixture(const MixtureSpec& mix, int n_traces, std::uint64_t seed,
                             const RolloutOptions& opts = {});

// Convenience: trains and rolls out whatever the env spec describes.
TraceSet rollout_env(const EnvSpec& spec, int n_traces, std::uint64_t seed,
                     const RolloutOptions& opts = {});

}  // namespace ixdrl
