#include "ixdrl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ixdrl/rng.hpp"

namespace ixdrl {

namespace {

// True next-state distribution of the gridworld under slip dynamics.
std::vector<std::pair<int, double>> true_transition(const GridworldSpec& env, int s, int a) {
  std::map<int, double> probs;
  if (env.is_goal(s)) {
    probs[s] = 1.0;  // terminal states absorb
  } else {
    probs[env.move(s, a)] += 1.0 - env.p_slip;
    for (int d = 0; d < GridworldSpec::kNumActions; ++d)
      probs[env.move(s, d)] += env.p_slip / GridworldSpec::kNumActions;
  }
  return {probs.begin(), probs.end()};
}

DiscreteDistribution softmax_policy(const std::vector<double>& q, int s, int n_actions,
                                    double tau) {
  DiscreteDistribution pi;
  pi.probs.resize(n_actions);
  const double* qs = q.data() + static_cast<std::size_t>(s) * n_actions;
  if (tau <= 0.0) {
    // Exact argmax limit; ties share the mass.
    const double best = *std::max_element(qs, qs + n_actions);
    int ties = 0;
    for (int a = 0; a < n_actions; ++a)
      if (qs[a] == best) ++ties;
    for (int a = 0; a < n_actions; ++a) pi.probs[a] = qs[a] == best ? 1.0 / ties : 0.0;
    return pi;
  }
  const double best = *std::max_element(qs, qs + n_actions);
  double total = 0.0;
  for (int a = 0; a < n_actions; ++a) {
    pi.probs[a] = std::exp((qs[a] - best) / tau);
    total += pi.probs[a];
  }
  for (double& p : pi.probs) p /= total;
  return pi;
}

// Projects mass at `z` onto the fixed atom grid (two nearest atoms).
void project_onto_atoms(double z, double p, const std::vector<double>& atoms,
                        std::vector<double>& out) {
  const int k = static_cast<int>(atoms.size());
  const double lo = atoms.front(), hi = atoms.back();
  const double zc = std::clamp(z, lo, hi);
  const double pos = (zc - lo) / (hi - lo) * (k - 1);
  const int l = static_cast<int>(std::floor(pos));
  const int u = std::min(l + 1, k - 1);
  const double frac = pos - l;
  out[l] += p * (1.0 - frac);
  if (u != l) out[u] += p * frac;
}

struct LoggedTransition {
  int s, a, s_next;
};

TabularTransitionModel fit_model(const std::vector<LoggedTransition>& log, int n_states,
                                 int n_actions) {
  TabularTransitionModel m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.next.resize(static_cast<std::size_t>(n_states) * n_actions);
  std::vector<std::map<int, int>> counts(m.next.size());
  for (const auto& tr : log) counts[tr.s * n_actions + tr.a][tr.s_next] += 1;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    int total = 0;
    for (const auto& [_, c] : counts[i]) total += c;
    if (total == 0) continue;
    for (const auto& [s_next, c] : counts[i])
      m.next[i].emplace_back(s_next, static_cast<double>(c) / total);
  }
  return m;
}

}  // namespace

std::vector<double> ToyAgentBundle::predict_obs(int member, int s, int a,
                                                const GridworldSpec& env) const {
  const auto* trans = &ensemble[member].at(s, a);
  if (trans->empty()) trans = &pooled_model.at(s, a);
  double ex = 0.0, ey = 0.0;
  if (trans->empty()) {
    ex = env.x_of(s);
    ey = env.y_of(s);  // never-visited pair: predict staying put
  } else {
    for (const auto& [s_next, p] : *trans) {
      ex += p * env.x_of(s_next);
      ey += p * env.y_of(s_next);
    }
  }
  return {ex, ey};
}

ToyAgentBundle train_toy_agent(const GridworldSpec& env, int episodes, std::uint64_t seed,
                               const AgentParams& params) {
  env.validate();
  if (episodes < 1) throw ValidationError("train_toy_agent: episodes must be >= 1");

  ToyAgentBundle agent;
  agent.n_states = env.n_states();
  agent.n_actions = GridworldSpec::kNumActions;
  const int S = agent.n_states;
  const int A = agent.n_actions;

  // Cache the true dynamics; rewards are attached to the entered cell.
  std::vector<std::vector<std::pair<int, double>>> dyn(static_cast<std::size_t>(S) * A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) dyn[s * A + a] = true_transition(env, s, a);

  auto transition_reward = [&](int s, int s_next) {
    return env.is_goal(s) ? 0.0 : env.cell_reward(s_next);
  };

  // Value iteration to a fixed point of the optimality equation.
  agent.value.assign(S, 0.0);
  agent.q.assign(static_cast<std::size_t>(S) * A, 0.0);
  for (int sweep = 0; sweep < params.vi_max_sweeps; ++sweep) {
    double delta = 0.0;
    for (int s = 0; s < S; ++s) {
      if (env.is_goal(s)) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < A; ++a) {
        double q = 0.0;
        for (const auto& [s_next, p] : dyn[s * A + a])
          q += p * (transition_reward(s, s_next) + env.discount * agent.value[s_next]);
        agent.q[s * A + a] = q;
        best = std::max(best, q);
      }
      delta = std::max(delta, std::abs(best - agent.value[s]));
      agent.value[s] = best;
    }
    if (delta < params.vi_tol) break;
  }

  agent.policy.resize(S);
  for (int s = 0; s < S; ++s) agent.policy[s] = softmax_policy(agent.q, s, A, params.tau);

  // Reachability: a positive-reward goal should be visible from the start.
  double best_start_v = -std::numeric_limits<double>::infinity();
  for (const auto& [s, p] : env.start_distribution()) {
    (void)p;
    best_start_v = std::max(best_start_v, agent.value[s]);
  }
  if (best_start_v <= 0.0) {
    agent.goal_reachable = false;
    warn("train_toy_agent: no positive-value path from the start distribution");
  }

  // Categorical Q: distributional Bellman backup onto fixed atoms, greedy
  // bootstrap action at the successor state.
  double atom_lo = params.atom_lo, atom_hi = params.atom_hi;
  if (!(atom_hi > atom_lo)) {
    double r_lo = 0.0, r_hi = 0.0;
    for (const auto& g : env.goals) {
      r_lo = std::min(r_lo, g.reward);
      r_hi = std::max(r_hi, g.reward);
    }
    for (const auto& h : env.hazards) {
      r_lo = std::min(r_lo, h.reward);
      r_hi = std::max(r_hi, h.reward);
    }
    const double horizon = env.discount < 1.0 ? 1.0 / (1.0 - env.discount) : env.max_steps;
    atom_lo = std::min(r_lo * horizon, -1e-6);
    atom_hi = std::max(r_hi * horizon, 1e-6);
  }
  std::vector<double> atoms(params.n_atoms);
  for (int i = 0; i < params.n_atoms; ++i)
    atoms[i] = atom_lo + (atom_hi - atom_lo) * i / (params.n_atoms - 1);

  std::vector<std::vector<double>> zp(static_cast<std::size_t>(S) * A,
                                      std::vector<double>(params.n_atoms, 0.0));
  for (auto& p : zp) p[0] = 1.0;  // start from a point mass at the lowest atom
  std::vector<std::vector<double>> znew = zp;
  for (int sweep = 0; sweep < 400; ++sweep) {
    double change = 0.0;
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        auto& out = znew[s * A + a];
        std::fill(out.begin(), out.end(), 0.0);
        if (env.is_goal(s)) {
          project_onto_atoms(0.0, 1.0, atoms, out);
        } else {
          for (const auto& [s_next, p] : dyn[s * A + a]) {
            const double r = transition_reward(s, s_next);
            int a_greedy = 0;
            for (int b = 1; b < A; ++b)
              if (agent.q[s_next * A + b] > agent.q[s_next * A + a_greedy]) a_greedy = b;
            const auto& z_next = zp[s_next * A + a_greedy];
            for (int i = 0; i < params.n_atoms; ++i) {
              if (z_next[i] > 0.0)
                project_onto_atoms(r + env.discount * atoms[i], p * z_next[i], atoms, out);
            }
          }
        }
        for (int i = 0; i < params.n_atoms; ++i)
          change = std::max(change, std::abs(out[i] - zp[s * A + a][i]));
      }
    }
    zp.swap(znew);
    if (change < 1e-12) break;
  }
  agent.q_dist.resize(static_cast<std::size_t>(S) * A);
  for (std::size_t i = 0; i < zp.size(); ++i) {
    agent.q_dist[i].atoms = atoms;
    agent.q_dist[i].probs = zp[i];
    // Normalize away projection round-off.
    double sum = 0.0;
    for (double p : agent.q_dist[i].probs) sum += p;
    for (double& p : agent.q_dist[i].probs) p /= sum;
  }

  // Log softmax-policy episodes, then bootstrap K transition models.
  Rng rng = Rng::stream(seed, 0xA6E57ULL);
  std::vector<LoggedTransition> log;
  const auto starts = env.start_distribution();
  std::vector<double> start_weights;
  for (const auto& [_, w] : starts) start_weights.push_back(w);
  for (int ep = 0; ep < episodes; ++ep) {
    int s = starts[rng.categorical(start_weights)].first;
    for (int t = 0; t < env.max_steps && !env.is_goal(s); ++t) {
      const int a = rng.categorical(agent.policy[s].probs);
      const auto& trans = dyn[s * A + a];
      std::vector<double> w;
      for (const auto& [_, p] : trans) w.push_back(p);
      const int s_next = trans[rng.categorical(w)].first;
      log.push_back({s, a, s_next});
      s = s_next;
    }
  }

  agent.pooled_model = fit_model(log, S, A);
  for (int k = 0; k < params.ensemble_k; ++k) {
    Rng boot = Rng::stream(seed, 0xB007ULL + k);
    std::vector<LoggedTransition> resample;
    resample.reserve(log.size());
    for (std::size_t i = 0; i < log.size(); ++i)
      resample.push_back(log[boot.uniform_int(static_cast<int>(log.size()))]);
    agent.ensemble.push_back(fit_model(resample, S, A));
  }

  return agent;
}

// ---------------------------------------------------------------------------
// Line world
// ---------------------------------------------------------------------------

int LineAgentBundle::bin_of(double u) const {
  int best = 0;
  double best_d = std::abs(u - bin_centers[0]);
  for (int b = 1; b < n_bins; ++b) {
    const double d = std::abs(u - bin_centers[b]);
    if (d < best_d) {
      best_d = d;
      best = b;
    }
  }
  return best;
}

LineAgentBundle train_line_agent(const LineWorldSpec& env, int episodes, std::uint64_t seed,
                                 const LineAgentParams& params) {
  env.validate();
  if (episodes < 1) throw ValidationError("train_line_agent: episodes must be >= 1");

  LineAgentBundle agent;
  agent.n_cells = env.n_cells;
  agent.n_factors = env.n_factors;
  agent.n_bins = params.n_bins;
  agent.bin_centers.resize(params.n_bins);
  for (int b = 0; b < params.n_bins; ++b)
    agent.bin_centers[b] = -1.0 + 2.0 * b / (params.n_bins - 1);

  const int C = env.n_cells;
  const int B = params.n_bins;

  // Deterministic surrogate dynamics on the cell grid (noise enters at
  // rollout time); enough for a usable, deliberately imperfect agent.
  auto next_cell = [&](int c, double u) {
    const double pos = env.pos_of(c) + u * env.move_scale;
    return env.cell_of(pos);
  };

  std::vector<double> v(C, 0.0), q(static_cast<std::size_t>(C) * B, 0.0);
  for (int sweep = 0; sweep < params.vi_sweeps; ++sweep) {
    double delta = 0.0;
    for (int c = 0; c < C; ++c) {
      if (env.is_goal_cell(c)) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (int b = 0; b < B; ++b) {
        const int cn = next_cell(c, agent.bin_centers[b]);
        const double r = env.is_goal_cell(cn) ? env.goal_reward : 0.0;
        const double val = r + env.discount * v[cn];
        q[c * B + b] = val;
        best = std::max(best, val);
      }
      delta = std::max(delta, std::abs(best - v[c]));
      v[c] = best;
    }
    if (delta < 1e-12) break;
  }
  agent.value = v;
  if (v[env.cell_of(env.start_pos)] <= 0.0) {
    agent.goal_reachable = false;
    warn("train_line_agent: start cell has no positive value");
  }

  // Gaussian policy per cell: moment-match the softmax over force bins.
  agent.policy.resize(C);
  for (int c = 0; c < C; ++c) {
    std::vector<double> w(B);
    const double best = *std::max_element(q.begin() + c * B, q.begin() + (c + 1) * B);
    double total = 0.0;
    for (int b = 0; b < B; ++b) {
      w[b] = std::exp((q[c * B + b] - best) / std::max(params.tau, 1e-9));
      total += w[b];
    }
    double mu = 0.0;
    for (int b = 0; b < B; ++b) mu += w[b] / total * agent.bin_centers[b];
    double var = 0.0;
    for (int b = 0; b < B; ++b) {
      const double d = agent.bin_centers[b] - mu;
      var += w[b] / total * d * d;
    }
    agent.policy[c] = GaussianSpec{{mu}, {std::max(std::sqrt(var), params.min_policy_std)}};
  }

  // Log noisy episodes and bootstrap K Gaussian next-position models.
  struct LineTransition {
    int cell, bin;
    double next_pos;
  };
  Rng rng = Rng::stream(seed, 0x11FE5ULL);
  std::vector<LineTransition> log;
  for (int ep = 0; ep < episodes; ++ep) {
    double pos = env.start_pos;
    for (int t = 0; t < env.max_steps; ++t) {
      const int c = env.cell_of(pos);
      if (env.is_goal_cell(c)) break;
      double u = 0.0;
      for (int f = 0; f < env.n_factors; ++f)
        u += rng.normal(agent.policy[c].mean[0], agent.policy[c].stddev[0]);
      u = std::clamp(u / env.n_factors, -1.0, 1.0);
      double next = pos + u * env.move_scale + rng.normal(0.0, env.noise_std);
      next = std::clamp(next, 0.0, env.length);
      log.push_back({c, agent.bin_of(u), next});
      pos = next;
    }
  }

  auto fit_gaussians = [&](const std::vector<LineTransition>& data) {
    std::vector<GaussianSpec> model(static_cast<std::size_t>(C) * B);
    std::vector<double> sum(model.size(), 0.0), sumsq(model.size(), 0.0);
    std::vector<int> n(model.size(), 0);
    for (const auto& tr : data) {
      const int i = tr.cell * B + tr.bin;
      sum[i] += tr.next_pos;
      sumsq[i] += tr.next_pos * tr.next_pos;
      ++n[i];
    }
    for (std::size_t i = 0; i < model.size(); ++i) {
      if (n[i] == 0) continue;  // filled from the pooled model by the caller
      const double mu = sum[i] / n[i];
      const double var = std::max(sumsq[i] / n[i] - mu * mu, 0.0);
      model[i] = GaussianSpec{{mu}, {std::max(std::sqrt(var), params.min_model_std)}};
    }
    return model;
  };

  const auto pooled = fit_gaussians(log);
  auto fallback = [&](std::vector<GaussianSpec>& model) {
    for (int c = 0; c < C; ++c) {
      for (int b = 0; b < B; ++b) {
        auto& g = model[c * B + b];
        if (!g.mean.empty()) continue;
        const auto& pg = pooled[c * B + b];
        if (!pg.mean.empty()) {
          g = pg;
        } else {
          // Never-visited: predict the deterministic surrogate move.
          g = GaussianSpec{{env.pos_of(next_cell(c, agent.bin_centers[b]))},
                           {std::max(env.noise_std, params.min_model_std)}};
        }
      }
    }
  };

  for (int k = 0; k < params.ensemble_k; ++k) {
    Rng boot = Rng::stream(seed, 0x1B007ULL + k);
    std::vector<LineTransition> resample;
    resample.reserve(log.size());
    for (std::size_t i = 0; i < log.size(); ++i)
      resample.push_back(log[boot.uniform_int(static_cast<int>(log.size()))]);
    auto model = fit_gaussians(resample);
    fallback(model);
    agent.ensemble.push_back(std::move(model));
  }

  return agent;
}

}  // namespace ixdrl
