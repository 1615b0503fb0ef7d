#include "ixdrl/env.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ixdrl {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Gridworld
// ---------------------------------------------------------------------------

bool GridworldSpec::is_goal(int s) const {
  for (const auto& g : goals)
    if (state_of(g.x, g.y) == s) return true;
  return false;
}

double GridworldSpec::cell_reward(int s) const {
  for (const auto& g : goals)
    if (state_of(g.x, g.y) == s) return g.reward;
  for (const auto& h : hazards)
    if (state_of(h.x, h.y) == s) return h.reward;
  return 0.0;
}

int GridworldSpec::move(int s, int a) const {
  static constexpr int dx[kNumActions] = {0, 1, 0, -1};
  static constexpr int dy[kNumActions] = {-1, 0, 1, 0};
  const int nx = x_of(s) + dx[a];
  const int ny = y_of(s) + dy[a];
  if (nx < 0 || nx >= width || ny < 0 || ny >= height) return s;
  return state_of(nx, ny);
}

void GridworldSpec::validate() const {
  if (width < 1 || height < 1) throw ValidationError("gridworld: width and height must be >= 1");
  if (goals.empty()) throw ValidationError("gridworld: at least one terminal goal is required");
  if (!(p_slip >= 0.0 && p_slip <= 1.0))
    throw ValidationError("gridworld: p_slip must lie in [0, 1]");
  if (max_steps < 1) throw ValidationError("gridworld: max_steps must be >= 1");
  if (!(discount >= 0.0 && discount <= 1.0))
    throw ValidationError("gridworld: discount must lie in [0, 1]");
  auto check_cell = [&](const Cell& c, const char* kind) {
    if (c.x < 0 || c.x >= width || c.y < 0 || c.y >= height)
      throw ValidationError(std::string("gridworld: ") + kind + " cell out of bounds");
  };
  for (const auto& g : goals) check_cell(g, "goal");
  for (const auto& h : hazards) check_cell(h, "hazard");
  double p = 0.0;
  for (const auto& [s, w] : start) {
    if (s < 0 || s >= n_states()) throw ValidationError("gridworld: start state out of range");
    if (w < 0.0) throw ValidationError("gridworld: start probability negative");
    p += w;
  }
  if (!start.empty() && std::abs(p - 1.0) > 1e-9)
    throw ValidationError("gridworld: start distribution must sum to 1");
}

ActionSpaceSpec GridworldSpec::action_space() const {
  DiscreteFactor f;
  f.n = kNumActions;
  f.labels = {"up", "right", "down", "left"};
  return ActionSpaceSpec{{f}};
}

std::vector<std::pair<int, double>> GridworldSpec::start_distribution() const {
  if (!start.empty()) return start;
  return {{state_of(0, 0), 1.0}};
}

// ---------------------------------------------------------------------------
// Line world
// ---------------------------------------------------------------------------

int LineWorldSpec::cell_of(double pos) const {
  const double clamped = std::clamp(pos, 0.0, length);
  const int c = static_cast<int>(std::lround(clamped / length * (n_cells - 1)));
  return std::clamp(c, 0, n_cells - 1);
}

double LineWorldSpec::pos_of(int cell) const {
  return static_cast<double>(cell) / (n_cells - 1) * length;
}

void LineWorldSpec::validate() const {
  if (!(length > 0.0)) throw ValidationError("lineworld: length must be positive");
  if (n_cells < 2) throw ValidationError("lineworld: n_cells must be >= 2");
  if (n_factors < 1) throw ValidationError("lineworld: n_factors must be >= 1");
  if (max_steps < 1) throw ValidationError("lineworld: max_steps must be >= 1");
  if (!(noise_std >= 0.0)) throw ValidationError("lineworld: noise_std must be >= 0");
  if (!(discount >= 0.0 && discount <= 1.0))
    throw ValidationError("lineworld: discount must lie in [0, 1]");
  if (!(start_pos >= 0.0 && start_pos <= length))
    throw ValidationError("lineworld: start_pos outside [0, length]");
}

ActionSpaceSpec LineWorldSpec::action_space() const {
  ActionSpaceSpec as;
  for (int f = 0; f < n_factors; ++f) {
    ContinuousFactor c;
    c.dim = 1;
    c.low = {-1.0};
    c.high = {1.0};
    as.factors.emplace_back(std::move(c));
  }
  return as;
}

// ---------------------------------------------------------------------------
// Mixture + spec I/O
// ---------------------------------------------------------------------------

void MixtureSpec::validate() const {
  if (components.empty()) throw ValidationError("mixture: component list is empty");
  double total = 0.0;
  for (const auto& c : components) {
    if (c.weight < 0.0) throw ValidationError("mixture: negative weight");
    total += c.weight;
    std::visit([](const auto& e) { e.validate(); }, c.env);
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ValidationError("mixture: weights must sum to 1");
}

void EnvSpec::validate() const {
  std::visit([](const auto& e) { e.validate(); }, env);
}

namespace {

json gridworld_to_json(const GridworldSpec& g) {
  json j;
  j["width"] = g.width;
  j["height"] = g.height;
  json goals = json::array();
  for (const auto& c : g.goals) goals.push_back({{"x", c.x}, {"y", c.y}, {"reward", c.reward}});
  j["goals"] = std::move(goals);
  if (!g.hazards.empty()) {
    json hz = json::array();
    for (const auto& c : g.hazards) hz.push_back({{"x", c.x}, {"y", c.y}, {"reward", c.reward}});
    j["hazards"] = std::move(hz);
  }
  j["p_slip"] = g.p_slip;
  j["max_steps"] = g.max_steps;
  j["discount"] = g.discount;
  if (!g.start.empty()) {
    json st = json::array();
    for (const auto& [s, p] : g.start) st.push_back({{"state", s}, {"prob", p}});
    j["start"] = std::move(st);
  }
  return j;
}

GridworldSpec gridworld_from_json(const json& j) {
  GridworldSpec g;
  g.width = j.value("width", 0);
  g.height = j.value("height", 0);
  for (const auto& jc : j.value("goals", json::array()))
    g.goals.push_back({jc.value("x", 0), jc.value("y", 0), jc.value("reward", 0.0)});
  for (const auto& jc : j.value("hazards", json::array()))
    g.hazards.push_back({jc.value("x", 0), jc.value("y", 0), jc.value("reward", 0.0)});
  g.p_slip = j.value("p_slip", 0.0);
  g.max_steps = j.value("max_steps", 1);
  g.discount = j.value("discount", 0.95);
  for (const auto& js : j.value("start", json::array()))
    g.start.emplace_back(js.value("state", 0), js.value("prob", 0.0));
  return g;
}

json lineworld_to_json(const LineWorldSpec& l) {
  return json{{"length", l.length},         {"n_cells", l.n_cells},
              {"n_factors", l.n_factors},   {"goal_reward", l.goal_reward},
              {"move_scale", l.move_scale}, {"noise_std", l.noise_std},
              {"max_steps", l.max_steps},   {"discount", l.discount},
              {"start_pos", l.start_pos}};
}

LineWorldSpec lineworld_from_json(const json& j) {
  LineWorldSpec l;
  l.length = j.value("length", 10.0);
  l.n_cells = j.value("n_cells", 21);
  l.n_factors = j.value("n_factors", 3);
  l.goal_reward = j.value("goal_reward", 1.0);
  l.move_scale = j.value("move_scale", 1.0);
  l.noise_std = j.value("noise_std", 0.25);
  l.max_steps = j.value("max_steps", 60);
  l.discount = j.value("discount", 0.95);
  l.start_pos = j.value("start_pos", 0.0);
  return l;
}

std::variant<GridworldSpec, LineWorldSpec> base_env_from_json(const json& j) {
  if (j.contains("gridworld")) return gridworld_from_json(j["gridworld"]);
  if (j.contains("lineworld")) return lineworld_from_json(j["lineworld"]);
  throw ValidationError("env spec: expected gridworld or lineworld object");
}

}  // namespace

EnvSpec parse_env_spec(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ValidationError("env spec: not a JSON object");

  EnvSpec spec;
  if (j.contains("mixture")) {
    MixtureSpec mix;
    for (const auto& jc : j["mixture"].value("components", json::array())) {
      MixtureSpec::Component c;
      c.weight = jc.value("weight", 0.0);
      c.env = base_env_from_json(jc);
      mix.components.push_back(std::move(c));
    }
    spec.env = std::move(mix);
  } else {
    auto base = base_env_from_json(j);
    if (auto* g = std::get_if<GridworldSpec>(&base))
      spec.env = std::move(*g);
    else
      spec.env = std::move(std::get<LineWorldSpec>(base));
  }
  spec.validate();
  return spec;
}

EnvSpec load_env_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StageError("cannot open env spec: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_env_spec(ss.str());
}

std::string env_spec_to_json(const EnvSpec& spec) {
  json j;
  if (const auto* g = std::get_if<GridworldSpec>(&spec.env)) {
    j["gridworld"] = gridworld_to_json(*g);
  } else if (const auto* l = std::get_if<LineWorldSpec>(&spec.env)) {
    j["lineworld"] = lineworld_to_json(*l);
  } else {
    const auto& mix = std::get<MixtureSpec>(spec.env);
    json comps = json::array();
    for (const auto& c : mix.components) {
      json jc;
      jc["weight"] = c.weight;
      if (const auto* g = std::get_if<GridworldSpec>(&c.env))
        jc["gridworld"] = gridworld_to_json(*g);
      else
        jc["lineworld"] = lineworld_to_json(std::get<LineWorldSpec>(c.env));
      comps.push_back(std::move(jc));
    }
    j["mixture"] = {{"components", std::move(comps)}};
  }
  return j.dump(2) + "\n";
}

}  // namespace ixdrl
