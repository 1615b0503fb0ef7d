#pragma once

#include <array>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "ixdrl/types.hpp"

namespace ixdrl {

// The seven interestingness dimensions. Every emitted value lies in [-1, 1].
enum class Dimension {
  Value = 0,
  Confidence,
  GoalConduciveness,
  Incongruity,
  Riskiness,
  Stochasticity,
  Familiarity,
};

inline constexpr int kDimensionCount = 7;

const char* dimension_name(Dimension d);
std::optional<Dimension> dimension_from_name(std::string_view name);
std::vector<Dimension> all_dimensions();

// Extremes used for min-max scaling of the value function (and, for the
// value-based Riskiness variant, of expected action values).
struct NormalizationState {
  enum class Mode { Offline, OnlineRunning };

  Mode mode = Mode::Offline;
  bool has_v = false;
  double v_min = 0.0, v_max = 0.0;
  bool has_q = false;
  double q_min = 0.0, q_max = 0.0;

  void include_v(double v);
  void include_q(double q);
  // Maps a raw value into [0, 1]; 0.5 when the range is degenerate.
  double v01(double v) const;
};

struct AnalyzeConfig {
  double rho = 100.0;          // slope scaling for Goal Conduciveness
  bool online_value = false;   // running normalization instead of two-pass
  bool td_use_previous_reward = false;  // alternative TD reward indexing
  double stochasticity_ref_scale = 1.0; // reference scale for the continuous surrogate
  std::vector<Dimension> dimensions = all_dimensions();

  bool wants(Dimension d) const;
};

// Per-timestep interestingness values, plus per-action-factor entries for
// Confidence and Riskiness.
struct InterestingnessRecord {
  std::string trace_id;
  int step = 0;
  std::array<std::optional<double>, kDimensionCount> values;
  std::map<std::pair<int, int>, double> per_factor;  // (dimension, factor) -> value

  std::optional<double> get(Dimension d) const { return values[static_cast<int>(d)]; }
  void set(Dimension d, double v) { values[static_cast<int>(d)] = v; }
};

// Dimension availability over a run (Table-style per-scenario summary):
// a dimension is available exactly when its input fields were present.
struct CoverageSummary {
  int total_records = 0;
  std::array<int, kDimensionCount> present_records{};

  bool available(Dimension d) const { return present_records[static_cast<int>(d)] > 0; }
};

struct AnalysisResult {
  std::vector<InterestingnessRecord> records;
  NormalizationState norm;
  CoverageSummary coverage;
  int factor_count = 0;
};

// Computes one record per datapoint. Offline mode runs a normalization pass
// first (min-max across all timesteps of all traces); online mode keeps
// per-trace running extremes so each record depends only on data up to its
// own timestep. Dimensions whose inputs are absent are silently skipped and
// reported in the coverage summary. Traces are processed in parallel.
AnalysisResult analyze(const TraceSet& ts, const AnalyzeConfig& cfg = {});

// Single-threaded reference; produces identical output to analyze().
AnalysisResult analyze_serial(const TraceSet& ts, const AnalyzeConfig& cfg = {});

// --- per-dimension kernels -------------------------------------------------

// Long-term importance: 2 * v01 - 1; 0 when the value range is degenerate.
double dim_value(double v, const NormalizationState& norm);

// 1 - 2 * J(pi), J = normalized entropy (evenness). Single-action factors
// are maximally certain: +1.
double dim_confidence_discrete(const DiscreteDistribution& pi);

// Continuous variant: 1 - 2 * Jc with Jc the entropy-power ratio of the
// policy to the uniform distribution over the factor's action box,
// capped at 1.
double dim_confidence_continuous(const GaussianSpec& pi, const ContinuousFactor& bounds);

// sin(atan(rho * slope)) with the order-2 backward-difference slope
// 1.5 v_t - 2 v_{t-1} + 0.5 v_{t-2} over normalized values (unit timestep).
double dim_goal_conduciveness(double v_t, double v_tm1, double v_tm2, double rho);
// Warm-up variant for t = 1: order-1 backward difference.
double dim_goal_conduciveness_order1(double v_t, double v_tm1, double rho);

// TD error (r + gamma v_t - v_{t-1}) normalized by the reward range and
// clamped to [-1, 1]; 0 when the range is degenerate.
double dim_incongruity(double r, double v_t, double v_tm1, double gamma,
                       const RewardRange& range);

// 2 (p_(1) - p_(2)) - 1 over the two largest probabilities. Ties at the
// maximum give -1.
double dim_riskiness_policy(const DiscreteDistribution& pi);

// (max Q - min Q) / (q_hi - q_lo), mapped through 2x - 1; -1 when the
// dataset-wide range is degenerate.
double dim_riskiness_value(const std::vector<double>& q, double q_lo, double q_hi);

// Leik's ordinal dispersion of one atom distribution, in [0, 1].
double leik_dispersion(const AtomDistribution& d);

// Mean over actions of 1 - 4 |D - 0.5|.
double dim_stochasticity_discrete(const std::vector<AtomDistribution>& per_action);

// Continuous surrogate: per component, CV' = sigma / (sigma + |mu| + s0)
// with s0 = ref_scale / 10, shaped by 1 - 4 |CV' - 0.5|; averaged.
double dim_stochasticity_continuous(const GaussianSpec& g, double ref_scale);

// 1 - (2/K^2) * sum of pairwise member distances (cosine for points,
// squared Hellinger for Gaussians). Result in [2/K - 1, 1].
double dim_familiarity(const EnsemblePrediction& ens);

// Cosine distance clamped to [0, 1]; zero vectors are at distance 1 from
// any non-zero vector and 0 from each other.
double cosine_distance(const std::vector<double>& a, const std::vector<double>& b);

// Squared Hellinger distance between diagonal Gaussians, in [0, 1].
double hellinger_squared(const GaussianSpec& a, const GaussianSpec& b);

// Arithmetic mean across action factors.
double aggregate_factors(const std::vector<double>& factor_values);

// --- aggregation ------------------------------------------------------------

struct DimensionProfile {
  double mean = 0.0;
  double stddev = 0.0;  // population
  int count = 0;
};

// Per-dimension mean/stddev over all records where the dimension is present
// (radar-chart data). Throws on empty input.
std::map<Dimension, DimensionProfile> interestingness_profile(
    const std::vector<InterestingnessRecord>& records);

}  // namespace ixdrl
