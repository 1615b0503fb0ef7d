#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ixdrl/common.hpp"

namespace ixdrl {

// ---------------------------------------------------------------------------
// Action space
// ---------------------------------------------------------------------------

struct DiscreteFactor {
  int n = 0;                        // number of actions, >= 1
  std::vector<std::string> labels;  // empty or exactly n entries
};

struct ContinuousFactor {
  int dim = 0;
  std::vector<double> low;   // componentwise, low < high
  std::vector<double> high;
};

using ActionFactor = std::variant<DiscreteFactor, ContinuousFactor>;

struct ActionSpaceSpec {
  std::vector<ActionFactor> factors;

  int factor_count() const { return static_cast<int>(factors.size()); }
  bool is_discrete(int f) const { return std::holds_alternative<DiscreteFactor>(factors[f]); }
  void validate() const;  // throws ValidationError
};

// ---------------------------------------------------------------------------
// Probed model outputs
// ---------------------------------------------------------------------------

struct DiscreteDistribution {
  std::vector<double> probs;  // >= 0, sum to 1 within 1e-6
};

// Categorical distribution over ordered support values (return units).
struct AtomDistribution {
  std::vector<double> atoms;  // strictly increasing
  std::vector<double> probs;  // >= 0, sum to 1 within 1e-6

  double mean() const;
};

// Diagonal Gaussian; used for continuous policies and distributional
// forward-model predictions.
struct GaussianSpec {
  std::vector<double> mean;
  std::vector<double> stddev;  // > 0 componentwise, same length as mean
};

using FactorPolicy = std::variant<DiscreteDistribution, GaussianSpec>;
using FactorAction = std::variant<int, std::vector<double>>;

// Per-factor action values: expected Q per action, or one return
// distribution per action. monostate marks factors (continuous ones)
// that carry no action values.
using FactorActionValues =
    std::variant<std::monostate, std::vector<double>, std::vector<AtomDistribution>>;

using EnsembleMember = std::variant<std::vector<double>, GaussianSpec>;

// K bootstrapped forward-model predictions of the next observation.
struct EnsemblePrediction {
  std::vector<EnsembleMember> members;  // K >= 2, homogeneous kind and dim

  int size() const { return static_cast<int>(members.size()); }
  bool distributional() const {
    return !members.empty() && std::holds_alternative<GaussianSpec>(members.front());
  }
};

// ---------------------------------------------------------------------------
// Interaction data
// ---------------------------------------------------------------------------

// One timestep of interaction data: the observables plus whatever model
// outputs the agent could be probed for. reward is the reward received on
// entering this step's state (0 at step 0).
struct InteractionDatapoint {
  int step = 0;
  std::vector<double> observation;
  std::vector<FactorAction> action;  // one entry per action factor
  double reward = 0.0;

  std::optional<double> value;                                  // V(s_t)
  std::optional<std::vector<FactorPolicy>> policy;              // pi(.|s_t) per factor
  std::optional<std::vector<FactorActionValues>> action_values; // Q(s_t,.) per factor
  std::optional<EnsemblePrediction> ensemble;                   // f_k(.|s_t,a_t)

  bool has_any_model_output() const {
    return value.has_value() || policy.has_value() || action_values.has_value() ||
           ensemble.has_value();
  }
};

using MetaValue = std::variant<double, std::string>;

struct Trace {
  std::string trace_id;
  std::vector<InteractionDatapoint> datapoints;  // steps 0..len-1, contiguous
  bool terminal = false;                          // episode ended naturally
  std::map<std::string, MetaValue> metadata;     // scenario seed, outcome labels, ...

  int length() const { return static_cast<int>(datapoints.size()); }
  double score() const;  // cumulative reward over the trace
};

struct RewardRange {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool degenerate() const { return !(hi > lo); }
};

struct TraceSet {
  ActionSpaceSpec action_space;
  double discount = 1.0;  // gamma in [0, 1]
  std::optional<RewardRange> reward_range;
  std::vector<Trace> traces;

  // Full invariant check over the header and every datapoint; throws
  // ValidationError naming trace/step/field on the first violation.
  void validate() const;

  // Header range when declared, otherwise the observed range (with a
  // warning, since the two can differ).
  RewardRange effective_reward_range() const;
};

// Elementwise min/max of all rewards across all traces. Throws on an
// empty TraceSet. A zero-width result is reported via RewardRange::degenerate.
RewardRange observed_reward_range(const TraceSet& ts);

}  // namespace ixdrl
