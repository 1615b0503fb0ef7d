#include "ixdrl/analyzers.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

namespace ixdrl {

namespace {

constexpr const char* kDimensionNames[kDimensionCount] = {
    "value",        "confidence",    "goal_conduciveness", "incongruity",
    "riskiness",    "stochasticity", "familiarity"};

int idx(Dimension d) { return static_cast<int>(d); }

}  // namespace

const char* dimension_name(Dimension d) { return kDimensionNames[idx(d)]; }

std::optional<Dimension> dimension_from_name(std::string_view name) {
  for (int i = 0; i < kDimensionCount; ++i) {
    if (name == kDimensionNames[i]) return static_cast<Dimension>(i);
  }
  return std::nullopt;
}

std::vector<Dimension> all_dimensions() {
  std::vector<Dimension> out;
  out.reserve(kDimensionCount);
  for (int i = 0; i < kDimensionCount; ++i) out.push_back(static_cast<Dimension>(i));
  return out;
}

bool AnalyzeConfig::wants(Dimension d) const {
  for (Dimension x : dimensions)
    if (x == d) return true;
  return false;
}

void NormalizationState::include_v(double v) {
  if (!has_v) {
    v_min = v_max = v;
    has_v = true;
  } else {
    v_min = std::min(v_min, v);
    v_max = std::max(v_max, v);
  }
}

void NormalizationState::include_q(double q) {
  if (!has_q) {
    q_min = q_max = q;
    has_q = true;
  } else {
    q_min = std::min(q_min, q);
    q_max = std::max(q_max, q);
  }
}

double NormalizationState::v01(double v) const {
  if (!has_v || !(v_max > v_min)) return 0.5;
  return clamp01((v - v_min) / (v_max - v_min));
}

// ---------------------------------------------------------------------------
// Dimension kernels
// ---------------------------------------------------------------------------

double dim_value(double v, const NormalizationState& norm) {
  return clamp_unit(2.0 * norm.v01(v) - 1.0);
}

double dim_confidence_discrete(const DiscreteDistribution& pi) {
  const std::size_t n = pi.probs.size();
  if (n <= 1) return 1.0;  // a forced action is maximally certain
  double entropy = 0.0;
  for (double p : pi.probs) {
    if (p > 0.0) entropy -= p * std::log(p);
  }
  const double evenness = entropy / std::log(static_cast<double>(n));
  return clamp_unit(1.0 - 2.0 * evenness);
}

double dim_confidence_continuous(const GaussianSpec& pi, const ContinuousFactor& bounds) {
  // Entropy power of a diagonal Gaussian relative to the uniform
  // distribution over the action box: prod_i sigma_i sqrt(2 pi e) / prod_i
  // (high_i - low_i). The ratio is capped at 1 so the dispersion index
  // stays in [0, 1].
  static const double kGaussWidth = std::sqrt(2.0 * M_PI * M_E);
  double log_ratio = 0.0;
  for (std::size_t i = 0; i < pi.stddev.size(); ++i) {
    if (!(pi.stddev[i] > 0.0))
      throw ValidationError("dim_confidence_continuous: stddev must be positive");
    log_ratio += std::log(pi.stddev[i] * kGaussWidth) - std::log(bounds.high[i] - bounds.low[i]);
  }
  const double dispersion = std::min(1.0, std::exp(log_ratio));
  return clamp_unit(1.0 - 2.0 * dispersion);
}

namespace {
double slope_to_angle(double slope, double rho) {
  // sin(atan(x)) == x / sqrt(1 + x^2), kept in closed form for stability at
  // large |x|.
  const double x = rho * slope;
  return x / std::sqrt(1.0 + x * x);
}
}  // namespace

double dim_goal_conduciveness(double v_t, double v_tm1, double v_tm2, double rho) {
  const double slope = 1.5 * v_t - 2.0 * v_tm1 + 0.5 * v_tm2;
  return slope_to_angle(slope, rho);
}

double dim_goal_conduciveness_order1(double v_t, double v_tm1, double rho) {
  return slope_to_angle(v_t - v_tm1, rho);
}

double dim_incongruity(double r, double v_t, double v_tm1, double gamma,
                       const RewardRange& range) {
  if (range.degenerate()) return 0.0;
  const double td = r + gamma * v_t - v_tm1;
  return clamp_unit(td / range.width());
}

double dim_riskiness_policy(const DiscreteDistribution& pi) {
  double first = -1.0, second = -1.0;
  for (double p : pi.probs) {
    if (p > first) {
      second = first;
      first = p;
    } else if (p > second) {
      second = p;
    }
  }
  return clamp_unit(2.0 * (first - second) - 1.0);
}

double dim_riskiness_value(const std::vector<double>& q, double q_lo, double q_hi) {
  if (!(q_hi > q_lo)) return -1.0;  // no risk spread anywhere in the dataset
  double lo = q[0], hi = q[0];
  for (double v : q) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return clamp_unit(2.0 * (hi - lo) / (q_hi - q_lo) - 1.0);
}

double leik_dispersion(const AtomDistribution& d) {
  const std::size_t k = d.probs.size();
  if (k < 2) return 0.0;
  double cum = 0.0, sum_d = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    cum += d.probs[i];
    sum_d += std::min(clamp01(cum), 1.0 - clamp01(cum));
  }
  return clamp01(2.0 * sum_d / static_cast<double>(k - 1));
}

double dim_stochasticity_discrete(const std::vector<AtomDistribution>& per_action) {
  double total = 0.0;
  for (const auto& dist : per_action)
    total += 1.0 - 4.0 * std::abs(leik_dispersion(dist) - 0.5);
  return clamp_unit(total / static_cast<double>(per_action.size()));
}

double dim_stochasticity_continuous(const GaussianSpec& g, double ref_scale) {
  if (!(ref_scale > 0.0))
    throw ValidationError("dim_stochasticity_continuous: reference scale undefined");
  const double s0 = ref_scale / 10.0;
  double total = 0.0;
  for (std::size_t i = 0; i < g.mean.size(); ++i) {
    const double cv = g.stddev[i] / (g.stddev[i] + std::abs(g.mean[i]) + s0);
    total += 1.0 - 4.0 * std::abs(cv - 0.5);
  }
  return clamp_unit(total / static_cast<double>(g.mean.size()));
}

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 && nb == 0.0) return 0.0;
  if (na == 0.0 || nb == 0.0) return 1.0;
  return clamp01(1.0 - dot / (std::sqrt(na) * std::sqrt(nb)));
}

double hellinger_squared(const GaussianSpec& a, const GaussianSpec& b) {
  // Closed form for diagonal Gaussians: 1 - prod_i sqrt(2 s_a s_b /
  // (s_a^2 + s_b^2)) * exp(-(mu_a - mu_b)^2 / (4 (s_a^2 + s_b^2))).
  double log_bc = 0.0;
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    const double va = a.stddev[i] * a.stddev[i];
    const double vb = b.stddev[i] * b.stddev[i];
    const double dm = a.mean[i] - b.mean[i];
    log_bc += 0.5 * std::log(2.0 * a.stddev[i] * b.stddev[i] / (va + vb));
    log_bc -= dm * dm / (4.0 * (va + vb));
  }
  return clamp01(1.0 - std::exp(log_bc));
}

double dim_familiarity(const EnsemblePrediction& ens) {
  const int k = ens.size();
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      double d = 0.0;
      if (ens.distributional()) {
        d = hellinger_squared(std::get<GaussianSpec>(ens.members[i]),
                              std::get<GaussianSpec>(ens.members[j]));
      } else {
        d = cosine_distance(std::get<std::vector<double>>(ens.members[i]),
                            std::get<std::vector<double>>(ens.members[j]));
      }
      sum += 2.0 * d;  // ordered pairs (i,j) and (j,i); diagonal adds 0
    }
  }
  return clamp_unit(1.0 - 2.0 / (static_cast<double>(k) * k) * sum);
}

double aggregate_factors(const std::vector<double>& factor_values) {
  if (factor_values.empty())
    throw ValidationError("aggregate_factors: at least one factor value required");
  const double sum = std::accumulate(factor_values.begin(), factor_values.end(), 0.0);
  return sum / static_cast<double>(factor_values.size());
}

// ---------------------------------------------------------------------------
// Per-trace analysis
// ---------------------------------------------------------------------------

namespace {

std::vector<double> reduce_to_means(const FactorActionValues& fav) {
  if (const auto* vals = std::get_if<std::vector<double>>(&fav)) return *vals;
  std::vector<double> out;
  if (const auto* dists = std::get_if<std::vector<AtomDistribution>>(&fav)) {
    out.reserve(dists->size());
    for (const auto& d : *dists) out.push_back(d.mean());
  }
  return out;
}

void scan_datapoint_extremes(const InteractionDatapoint& dp, NormalizationState& norm) {
  if (dp.value) norm.include_v(*dp.value);
  if (dp.action_values) {
    for (const auto& fav : *dp.action_values) {
      for (double q : reduce_to_means(fav)) norm.include_q(q);
    }
  }
}

// Analyzes one trace. In online mode `norm` starts empty and accumulates
// per step; in offline mode it already holds the dataset extremes.
void analyze_trace(const Trace& trace, const TraceSet& ts, const AnalyzeConfig& cfg,
                   NormalizationState norm, const RewardRange& declared_range,
                   std::vector<InterestingnessRecord>& out) {
  const bool online = cfg.online_value;
  const auto& as = ts.action_space;
  RewardRange running_range{0.0, 0.0};
  bool running_range_init = false;

  for (std::size_t t = 0; t < trace.datapoints.size(); ++t) {
    const auto& dp = trace.datapoints[t];
    InterestingnessRecord rec;
    rec.trace_id = trace.trace_id;
    rec.step = dp.step;

    if (online) {
      scan_datapoint_extremes(dp, norm);
      if (!running_range_init) {
        running_range = RewardRange{dp.reward, dp.reward};
        running_range_init = true;
      } else {
        running_range.lo = std::min(running_range.lo, dp.reward);
        running_range.hi = std::max(running_range.hi, dp.reward);
      }
    }
    const RewardRange& reward_range =
        ts.reward_range ? declared_range : (online ? running_range : declared_range);

    if (cfg.wants(Dimension::Value) && dp.value) {
      rec.set(Dimension::Value, dim_value(*dp.value, norm));
    }

    if (cfg.wants(Dimension::Confidence) && dp.policy) {
      std::vector<double> per_factor;
      for (int f = 0; f < as.factor_count(); ++f) {
        double c = 0.0;
        if (const auto* dd = std::get_if<DiscreteDistribution>(&(*dp.policy)[f]))
          c = dim_confidence_discrete(*dd);
        else
          c = dim_confidence_continuous(std::get<GaussianSpec>((*dp.policy)[f]),
                                        std::get<ContinuousFactor>(as.factors[f]));
        per_factor.push_back(c);
        rec.per_factor[{idx(Dimension::Confidence), f}] = c;
      }
      rec.set(Dimension::Confidence, aggregate_factors(per_factor));
    }

    if (cfg.wants(Dimension::GoalConduciveness) && t >= 1 && dp.value) {
      const auto& prev = trace.datapoints[t - 1];
      if (prev.value) {
        const double v_t = norm.v01(*dp.value);
        const double v_tm1 = norm.v01(*prev.value);
        if (t >= 2 && trace.datapoints[t - 2].value) {
          const double v_tm2 = norm.v01(*trace.datapoints[t - 2].value);
          rec.set(Dimension::GoalConduciveness,
                  dim_goal_conduciveness(v_t, v_tm1, v_tm2, cfg.rho));
        } else {
          rec.set(Dimension::GoalConduciveness,
                  dim_goal_conduciveness_order1(v_t, v_tm1, cfg.rho));
        }
      }
    }

    if (cfg.wants(Dimension::Incongruity) && t >= 1 && dp.value) {
      const auto& prev = trace.datapoints[t - 1];
      if (prev.value) {
        const double r = cfg.td_use_previous_reward ? prev.reward : dp.reward;
        rec.set(Dimension::Incongruity,
                dim_incongruity(r, *dp.value, *prev.value, ts.discount, reward_range));
      }
    }

    if (cfg.wants(Dimension::Riskiness)) {
      std::vector<double> per_factor;
      for (int f = 0; f < as.factor_count(); ++f) {
        std::optional<double> risk;
        if (dp.policy && as.is_discrete(f)) {
          const auto& dd = std::get<DiscreteDistribution>((*dp.policy)[f]);
          if (dd.probs.size() >= 2) risk = dim_riskiness_policy(dd);
        } else if (dp.action_values) {
          const auto q = reduce_to_means((*dp.action_values)[f]);
          if (q.size() >= 2) risk = dim_riskiness_value(q, norm.q_min, norm.q_max);
        }
        if (risk) {
          per_factor.push_back(*risk);
          rec.per_factor[{idx(Dimension::Riskiness), f}] = *risk;
        }
      }
      if (!per_factor.empty())
        rec.set(Dimension::Riskiness, aggregate_factors(per_factor));
    }

    if (cfg.wants(Dimension::Stochasticity)) {
      std::vector<double> per_factor;
      if (dp.action_values) {
        for (const auto& fav : *dp.action_values) {
          if (const auto* dists = std::get_if<std::vector<AtomDistribution>>(&fav)) {
            if (!dists->empty()) per_factor.push_back(dim_stochasticity_discrete(*dists));
          }
        }
      }
      if (!per_factor.empty()) {
        rec.set(Dimension::Stochasticity, aggregate_factors(per_factor));
      } else if (dp.ensemble && dp.ensemble->distributional()) {
        double total = 0.0;
        for (const auto& m : dp.ensemble->members)
          total += dim_stochasticity_continuous(std::get<GaussianSpec>(m),
                                                cfg.stochasticity_ref_scale);
        rec.set(Dimension::Stochasticity, clamp_unit(total / dp.ensemble->size()));
      }
    }

    if (cfg.wants(Dimension::Familiarity) && dp.ensemble) {
      rec.set(Dimension::Familiarity, dim_familiarity(*dp.ensemble));
    }

    out.push_back(std::move(rec));
  }
}

AnalysisResult analyze_impl(const TraceSet& ts, const AnalyzeConfig& cfg, bool parallel) {
  if (cfg.dimensions.empty())
    throw ValidationError("analyze: configured dimension list is empty");

  AnalysisResult result;
  result.factor_count = ts.action_space.factor_count();
  result.norm.mode = cfg.online_value ? NormalizationState::Mode::OnlineRunning
                                      : NormalizationState::Mode::Offline;

  RewardRange declared_range{0.0, 0.0};
  if (ts.reward_range) {
    declared_range = *ts.reward_range;
  } else if (!cfg.online_value) {
    declared_range = ts.effective_reward_range();
  }
  if (!cfg.online_value && declared_range.degenerate() && cfg.wants(Dimension::Incongruity))
    warn("reward range is degenerate; incongruity is 0 everywhere");

  // Phase 1 (offline only): dataset-wide extremes for min-max scaling.
  if (!cfg.online_value) {
    NormalizationState& norm = result.norm;
#pragma omp parallel if (parallel)
    {
      NormalizationState local;
#pragma omp for nowait
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(ts.traces.size()); ++i) {
        for (const auto& dp : ts.traces[i].datapoints) scan_datapoint_extremes(dp, local);
      }
#pragma omp critical
      {
        if (local.has_v) {
          norm.include_v(local.v_min);
          norm.include_v(local.v_max);
        }
        if (local.has_q) {
          norm.include_q(local.q_min);
          norm.include_q(local.q_max);
        }
      }
    }
  }

  // Phase 2: pure per-timestep map, independent across traces.
  std::vector<std::vector<InterestingnessRecord>> per_trace(ts.traces.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(ts.traces.size()); ++i) {
    NormalizationState norm = result.norm;  // online mode: starts empty per trace
    analyze_trace(ts.traces[i], ts, cfg, norm, declared_range, per_trace[i]);
  }

  for (auto& recs : per_trace) {
    for (auto& rec : recs) {
      ++result.coverage.total_records;
      for (int d = 0; d < kDimensionCount; ++d) {
        if (rec.values[d]) ++result.coverage.present_records[d];
      }
      result.records.push_back(std::move(rec));
    }
  }
  return result;
}

}  // namespace

AnalysisResult analyze(const TraceSet& ts, const AnalyzeConfig& cfg) {
  return analyze_impl(ts, cfg, true);
}

AnalysisResult analyze_serial(const TraceSet& ts, const AnalyzeConfig& cfg) {
  return analyze_impl(ts, cfg, false);
}

std::map<Dimension, DimensionProfile> interestingness_profile(
    const std::vector<InterestingnessRecord>& records) {
  if (records.empty())
    throw ValidationError("interestingness_profile: no records");
  std::map<Dimension, DimensionProfile> out;
  for (int d = 0; d < kDimensionCount; ++d) {
    double sum = 0.0;
    int count = 0;
    for (const auto& rec : records) {
      if (rec.values[d]) {
        sum += *rec.values[d];
        ++count;
      }
    }
    if (count == 0) continue;
    const double mean = sum / count;
    double ss = 0.0;
    for (const auto& rec : records) {
      if (rec.values[d]) {
        const double dev = *rec.values[d] - mean;
        ss += dev * dev;
      }
    }
    out[static_cast<Dimension>(d)] = DimensionProfile{mean, std::sqrt(ss / count), count};
  }
  return out;
}

}  // namespace ixdrl
