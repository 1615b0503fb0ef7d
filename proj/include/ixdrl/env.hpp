#pragma once

#include <string>
#include <variant>
#include <vector>

#include "ixdrl/types.hpp"

namespace ixdrl {

// Desk-scale tabular gridworld. Goal cells are terminal; hazard cells give a
// penalty and are not. Moves slip to a uniformly random direction with
// probability p_slip; bumping the border leaves the agent in place.
struct GridworldSpec {
  struct Cell {
    int x = 0, y = 0;
    double reward = 0.0;
  };

  int width = 0, height = 0;
  std::vector<Cell> goals;    // at least one; terminal
  std::vector<Cell> hazards;  // penalties, non-terminal
  double p_slip = 0.0;
  int max_steps = 1;
  double discount = 0.95;
  std::vector<std::pair<int, double>> start;  // (state, prob); empty = cell (0, 0)

  static constexpr int kNumActions = 4;  // up, right, down, left

  int n_states() const { return width * height; }
  int state_of(int x, int y) const { return y * width + x; }
  int x_of(int s) const { return s % width; }
  int y_of(int s) const { return s / width; }
  bool is_goal(int s) const;
  double cell_reward(int s) const;  // goal reward, hazard penalty or 0
  int move(int s, int a) const;     // deterministic move, border-clamped

  void validate() const;
  ActionSpaceSpec action_space() const;
  std::vector<std::pair<int, double>> start_distribution() const;
};

// 1-D continuous-control world: the agent pushes a point mass along [0, length]
// toward the right end. The action is factored into n_factors forces in
// [-1, 1]; their mean (scaled) moves the agent, with Gaussian motion noise.
// State tables are discretized over n_cells positions.
struct LineWorldSpec {
  double length = 10.0;
  int n_cells = 21;
  int n_factors = 3;
  double goal_reward = 1.0;
  double move_scale = 1.0;
  double noise_std = 0.25;
  int max_steps = 60;
  double discount = 0.95;
  double start_pos = 0.0;

  int cell_of(double pos) const;
  double pos_of(int cell) const;
  bool is_goal_cell(int cell) const { return cell == n_cells - 1; }

  void validate() const;
  ActionSpaceSpec action_space() const;
};

struct EnvSpec;

// Weighted mixture of environments; used to plant ground-truth regimes.
struct MixtureSpec {
  struct Component {
    double weight = 0.0;
    std::variant<GridworldSpec, LineWorldSpec> env;
  };
  std::vector<Component> components;

  void validate() const;
};

struct EnvSpec {
  std::variant<GridworldSpec, LineWorldSpec, MixtureSpec> env;

  bool is_mixture() const { return std::holds_alternative<MixtureSpec>(env); }
  void validate() const;
};

// Env specs are stored as single JSON documents; see docs/trace_format.md.
EnvSpec load_env_spec(const std::string& path);
EnvSpec parse_env_spec(const std::string& json_text);
std::string env_spec_to_json(const EnvSpec& spec);

}  // namespace ixdrl
