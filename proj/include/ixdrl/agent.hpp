#pragma once

#include <cstdint>
#include <vector>

#include "ixdrl/env.hpp"
#include "ixdrl/types.hpp"

namespace ixdrl {

// Tabular transition model estimated from (bootstrap-resampled) logged
// transitions. Unseen (s, a) pairs fall back to the pooled model, and to a
// self-loop when the pooled log has no data either, so members only differ
// where their resamples differ.
struct TabularTransitionModel {
  int n_states = 0;
  int n_actions = 0;
  // next-state probabilities per (s, a), sparse: (state, prob) pairs
  std::vector<std::vector<std::pair<int, double>>> next;

  const std::vector<std::pair<int, double>>& at(int s, int a) const {
    return next[s * n_actions + a];
  }
};

struct AgentParams {
  double tau = 0.5;       // softmax temperature; 0 = exact argmax
  int n_atoms = 51;       // categorical return support size
  double atom_lo = 0.0;   // support interval; equal bounds = derive from task
  double atom_hi = 0.0;
  int ensemble_k = 5;
  double vi_tol = 1e-12;
  int vi_max_sweeps = 100000;
};

// One concrete instance of each model family: softmax policy over tabular Q,
// state-value table, categorical Q distributions, and a bootstrapped ensemble
// of forward models.
struct ToyAgentBundle {
  int n_states = 0;
  int n_actions = 0;
  std::vector<DiscreteDistribution> policy;          // per state
  std::vector<double> value;                         // V per state
  std::vector<double> q;                             // Q per (s * A + a)
  std::vector<AtomDistribution> q_dist;              // per (s * A + a)
  std::vector<TabularTransitionModel> ensemble;      // K members
  TabularTransitionModel pooled_model;
  bool goal_reachable = true;

  const DiscreteDistribution& policy_at(int s) const { return policy[s]; }
  double q_at(int s, int a) const { return q[s * n_actions + a]; }
  const AtomDistribution& q_dist_at(int s, int a) const { return q_dist[s * n_actions + a]; }
  // Expected next observation under ensemble member k.
  std::vector<double> predict_obs(int member, int s, int a, const GridworldSpec& env) const;
};

// Value-iterates the true dynamics to a Bellman residual below vi_tol, builds
// the softmax policy and a categorical distributional backup on fixed atoms,
// then fits K bootstrap-resampled transition models from `episodes` logged
// softmax-policy episodes. Deterministic given the seed.
ToyAgentBundle train_toy_agent(const GridworldSpec& env, int episodes, std::uint64_t seed,
                               const AgentParams& params = {});

// Continuous-control counterpart over discretized line-world cells: Gaussian
// policy per action factor (moment-matched to a softmax over discretized
// forces), V table, and a bootstrapped ensemble of Gaussian next-position
// predictors.
struct LineAgentBundle {
  int n_cells = 0;
  int n_factors = 0;
  std::vector<double> value;                  // per cell
  std::vector<GaussianSpec> policy;           // per cell, 1-D; shared by factors
  // per member, per (cell * n_bins + bin): predicted next-position Gaussian
  int n_bins = 0;
  std::vector<double> bin_centers;
  std::vector<std::vector<GaussianSpec>> ensemble;
  bool goal_reachable = true;

  int bin_of(double u) const;
};

struct LineAgentParams {
  double tau = 0.3;
  int n_bins = 11;
  int ensemble_k = 5;
  double min_policy_std = 0.05;
  double min_model_std = 0.02;
  int vi_sweeps = 2000;
};

LineAgentBundle train_line_agent(const LineWorldSpec& env, int episodes, std::uint64_t seed,
                                 const LineAgentParams& params = {});

}  // namespace ixdrl
