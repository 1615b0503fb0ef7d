#include "ixdrl/rollout.hpp"

#include <cmath>
#include <sstream>

#include "ixdrl/rng.hpp"

namespace ixdrl {

namespace {

// Zero-padded so lexicographic and numeric order agree.
std::string make_trace_id(const std::string& prefix, int index) {
  std::ostringstream padded;
  padded << prefix;
  for (std::size_t n = std::to_string(index).size(); n < 5; ++n) padded << '0';
  padded << index;
  return padded.str();
}

bool same_action_space(const ActionSpaceSpec& a, const ActionSpaceSpec& b) {
  if (a.factor_count() != b.factor_count()) return false;
  for (int f = 0; f < a.factor_count(); ++f) {
    if (a.is_discrete(f) != b.is_discrete(f)) return false;
    if (a.is_discrete(f)) {
      if (std::get<DiscreteFactor>(a.factors[f]).n != std::get<DiscreteFactor>(b.factors[f]).n)
        return false;
    } else if (std::get<ContinuousFactor>(a.factors[f]).dim !=
               std::get<ContinuousFactor>(b.factors[f]).dim) {
      return false;
    }
  }
  return true;
}

InteractionDatapoint probe_gridworld(const GridworldSpec& env, const ToyAgentBundle& agent,
                                     int s, int step, double reward, int action,
                                     const ProbeOptions& probe) {
  InteractionDatapoint dp;
  dp.step = step;
  dp.observation = {static_cast<double>(env.x_of(s)), static_cast<double>(env.y_of(s))};
  dp.action = {FactorAction{action}};
  dp.reward = reward;
  if (probe.value) dp.value = agent.value[s];
  if (probe.policy) dp.policy = std::vector<FactorPolicy>{agent.policy_at(s)};
  if (probe.action_values) {
    std::vector<AtomDistribution> dists;
    dists.reserve(agent.n_actions);
    for (int a = 0; a < agent.n_actions; ++a) dists.push_back(agent.q_dist_at(s, a));
    dp.action_values = std::vector<FactorActionValues>{std::move(dists)};
  }
  if (probe.ensemble) {
    EnsemblePrediction ens;
    for (std::size_t k = 0; k < agent.ensemble.size(); ++k)
      ens.members.emplace_back(agent.predict_obs(static_cast<int>(k), s, action, env));
    dp.ensemble = std::move(ens);
  }
  return dp;
}

Trace rollout_one_gridworld(const GridworldSpec& env, const ToyAgentBundle& agent,
                            std::uint64_t seed, int index, const RolloutOptions& opts) {
  Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(index));
  Trace trace;
  trace.trace_id = make_trace_id(opts.trace_prefix, index);

  const auto starts = env.start_distribution();
  std::vector<double> start_w;
  for (const auto& [_, w] : starts) start_w.push_back(w);
  int s = starts[rng.categorical(start_w)].first;

  double reward = 0.0;
  for (int t = 0; t <= env.max_steps; ++t) {
    const int action = rng.categorical(agent.policy_at(s).probs);
    trace.datapoints.push_back(probe_gridworld(env, agent, s, t, reward, action, opts.probe));
    if (env.is_goal(s)) {
      trace.terminal = true;
      break;
    }
    if (t == env.max_steps) break;
    int intended = action;
    if (env.p_slip > 0.0 && rng.uniform() < env.p_slip)
      intended = rng.uniform_int(GridworldSpec::kNumActions);
    const int s_next = env.move(s, intended);
    reward = env.cell_reward(s_next);
    s = s_next;
  }

  trace.metadata["score"] = trace.score();
  trace.metadata["outcome"] = std::string(trace.terminal ? "goal" : "timeout");
  return trace;
}

InteractionDatapoint probe_lineworld(const LineWorldSpec& env, const LineAgentBundle& agent,
                                     double pos, int step, double reward,
                                     const std::vector<double>& forces, double u,
                                     const ProbeOptions& probe) {
  const int c = env.cell_of(pos);
  InteractionDatapoint dp;
  dp.step = step;
  dp.observation = {pos};
  for (double f : forces) dp.action.emplace_back(std::vector<double>{f});
  dp.reward = reward;
  if (probe.value) dp.value = agent.value[c];
  if (probe.policy) {
    std::vector<FactorPolicy> pol;
    for (int f = 0; f < env.n_factors; ++f) pol.emplace_back(agent.policy[c]);
    dp.policy = std::move(pol);
  }
  if (probe.ensemble) {
    EnsemblePrediction ens;
    const int bin = agent.bin_of(u);
    for (const auto& member : agent.ensemble)
      ens.members.emplace_back(member[c * agent.n_bins + bin]);
    dp.ensemble = std::move(ens);
  }
  return dp;
}

Trace rollout_one_lineworld(const LineWorldSpec& env, const LineAgentBundle& agent,
                            std::uint64_t seed, int index, const RolloutOptions& opts) {
  Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(index));
  Trace trace;
  trace.trace_id = make_trace_id(opts.trace_prefix, index);

  double pos = env.start_pos;
  double reward = 0.0;
  for (int t = 0; t <= env.max_steps; ++t) {
    const int c = env.cell_of(pos);
    std::vector<double> forces(env.n_factors);
    double u = 0.0;
    for (int f = 0; f < env.n_factors; ++f) {
      forces[f] = std::clamp(rng.normal(agent.policy[c].mean[0], agent.policy[c].stddev[0]),
                             -1.0, 1.0);
      u += forces[f];
    }
    u /= env.n_factors;
    trace.datapoints.push_back(probe_lineworld(env, agent, pos, t, reward, forces, u,
                                               opts.probe));
    if (env.is_goal_cell(c)) {
      trace.terminal = true;
      break;
    }
    if (t == env.max_steps) break;
    double next = pos + u * env.move_scale + rng.normal(0.0, env.noise_std);
    next = std::clamp(next, 0.0, env.length);
    reward = env.is_goal_cell(env.cell_of(next)) ? env.goal_reward : 0.0;
    pos = next;
  }

  trace.metadata["score"] = trace.score();
  trace.metadata["outcome"] = std::string(trace.terminal ? "goal" : "timeout");
  return trace;
}

RewardRange gridworld_reward_range(const GridworldSpec& env) {
  RewardRange r{0.0, 0.0};  // step-0 reward is always 0
  for (const auto& g : env.goals) {
    r.lo = std::min(r.lo, g.reward);
    r.hi = std::max(r.hi, g.reward);
  }
  for (const auto& h : env.hazards) {
    r.lo = std::min(r.lo, h.reward);
    r.hi = std::max(r.hi, h.reward);
  }
  return r;
}

}  // namespace

TraceSet rollout(const GridworldSpec& env, const ToyAgentBundle& agent, int n_traces,
                 std::uint64_t seed, const RolloutOptions& opts) {
  env.validate();
  if (n_traces < 1) throw ValidationError("rollout: n_traces must be >= 1");

  TraceSet ts;
  ts.action_space = env.action_space();
  ts.discount = env.discount;
  ts.reward_range = gridworld_reward_range(env);
  ts.traces.resize(n_traces);

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n_traces; ++i)
    ts.traces[i] = rollout_one_gridworld(env, agent, seed, i, opts);
  return ts;
}

TraceSet rollout(const LineWorldSpec& env, const LineAgentBundle& agent, int n_traces,
                 std::uint64_t seed, const RolloutOptions& opts) {
  env.validate();
  if (n_traces < 1) throw ValidationError("rollout: n_traces must be >= 1");

  TraceSet ts;
  ts.action_space = env.action_space();
  ts.discount = env.discount;
  ts.reward_range = RewardRange{std::min(0.0, env.goal_reward), std::max(0.0, env.goal_reward)};
  ts.traces.resize(n_traces);

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n_traces; ++i)
    ts.traces[i] = rollout_one_lineworld(env, agent, seed, i, opts);
  return ts;
}

TraceSet make_regime_mixture(const MixtureSpec& mix, int n_traces, std::uint64_t seed,
                             const RolloutOptions& opts) {
  mix.validate();
  if (n_traces < 1) throw ValidationError("make_regime_mixture: n_traces must be >= 1");

  // Proportional trace counts, remainder to the earliest regimes.
  const int R = static_cast<int>(mix.components.size());
  std::vector<int> counts(R, 0);
  int assigned = 0;
  for (int r = 0; r < R; ++r) {
    counts[r] = static_cast<int>(std::floor(mix.components[r].weight * n_traces));
    assigned += counts[r];
  }
  for (int r = 0; assigned < n_traces; r = (r + 1) % R) {
    if (mix.components[r].weight > 0.0) {
      ++counts[r];
      ++assigned;
    }
  }

  TraceSet out;
  bool first = true;
  int next_index = 0;
  for (int r = 0; r < R; ++r) {
    if (counts[r] == 0) continue;
    RolloutOptions part_opts = opts;
    part_opts.trace_prefix = opts.trace_prefix;
    TraceSet part;
    if (const auto* g = std::get_if<GridworldSpec>(&mix.components[r].env)) {
      const auto agent = train_toy_agent(*g, opts.agent_episodes, seed ^ (0x5EEDULL * (r + 1)));
      part = rollout(*g, agent, counts[r], seed ^ (0x70ACE5ULL * (r + 1)), part_opts);
    } else {
      const auto& l = std::get<LineWorldSpec>(mix.components[r].env);
      const auto agent = train_line_agent(l, opts.agent_episodes, seed ^ (0x5EEDULL * (r + 1)));
      part = rollout(l, agent, counts[r], seed ^ (0x70ACE5ULL * (r + 1)), part_opts);
    }

    if (first) {
      out.action_space = part.action_space;
      out.discount = part.discount;
      out.reward_range = part.reward_range;
      first = false;
    } else {
      if (!same_action_space(out.action_space, part.action_space))
        throw ValidationError("make_regime_mixture: components disagree on action space");
      if (out.discount != part.discount)
        throw ValidationError("make_regime_mixture: components disagree on discount");
      out.reward_range->lo = std::min(out.reward_range->lo, part.reward_range->lo);
      out.reward_range->hi = std::max(out.reward_range->hi, part.reward_range->hi);
    }

    for (auto& trace : part.traces) {
      trace.trace_id = make_trace_id(opts.trace_prefix, next_index++);
      trace.metadata["regime"] = static_cast<double>(r);
      out.traces.push_back(std::move(trace));
    }
  }
  out.validate();
  return out;
}

TraceSet rollout_env(const EnvSpec& spec, int n_traces, std::uint64_t seed,
                     const RolloutOptions& opts) {
  if (const auto* g = std::get_if<GridworldSpec>(&spec.env)) {
    const auto agent = train_toy_agent(*g, opts.agent_episodes, seed);
    return rollout(*g, agent, n_traces, seed + 1, opts);
  }
  if (const auto* l = std::get_if<LineWorldSpec>(&spec.env)) {
    const auto agent = train_line_agent(*l, opts.agent_episodes, seed);
    return rollout(*l, agent, n_traces, seed + 1, opts);
  }
  return make_regime_mixture(std::get<MixtureSpec>(spec.env), n_traces, seed, opts);
}

}  // namespace ixdrl
