#include "ixdrl/trace_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ixdrl {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

// --- serialization -------------------------------------------------------

json action_space_to_json(const ActionSpaceSpec& as) {
  json factors = json::array();
  for (const auto& f : as.factors) {
    if (const auto* d = std::get_if<DiscreteFactor>(&f)) {
      json jf = {{"type", "discrete"}, {"n", d->n}};
      if (!d->labels.empty()) jf["labels"] = d->labels;
      factors.push_back(std::move(jf));
    } else {
      const auto& c = std::get<ContinuousFactor>(f);
      factors.push_back({{"type", "continuous"}, {"dim", c.dim},
                         {"low", c.low}, {"high", c.high}});
    }
  }
  return {{"factors", std::move(factors)}};
}

json gaussian_to_json(const GaussianSpec& g) {
  return {{"mean", g.mean}, {"std", g.stddev}};
}

json datapoint_to_json(const Trace& trace, const InteractionDatapoint& dp, bool first,
                       bool last) {
  json j;
  j["trace_id"] = trace.trace_id;
  j["step"] = dp.step;
  j["obs"] = dp.observation;
  json actions = json::array();
  for (const auto& a : dp.action) {
    if (const auto* idx = std::get_if<int>(&a))
      actions.push_back(*idx);
    else
      actions.push_back(std::get<std::vector<double>>(a));
  }
  j["action"] = std::move(actions);
  j["reward"] = dp.reward;
  if (dp.value) j["value"] = *dp.value;
  if (dp.policy) {
    json pol = json::array();
    for (const auto& fp : *dp.policy) {
      if (const auto* dd = std::get_if<DiscreteDistribution>(&fp))
        pol.push_back({{"probs", dd->probs}});
      else
        pol.push_back(gaussian_to_json(std::get<GaussianSpec>(fp)));
    }
    j["policy"] = std::move(pol);
  }
  if (dp.action_values) {
    json qs = json::array();
    for (const auto& fav : *dp.action_values) {
      if (std::holds_alternative<std::monostate>(fav)) {
        qs.push_back(nullptr);
      } else if (const auto* vals = std::get_if<std::vector<double>>(&fav)) {
        qs.push_back({{"values", *vals}});
      } else {
        json dists = json::array();
        for (const auto& ad : std::get<std::vector<AtomDistribution>>(fav))
          dists.push_back({{"atoms", ad.atoms}, {"probs", ad.probs}});
        qs.push_back({{"dists", std::move(dists)}});
      }
    }
    j["q"] = std::move(qs);
  }
  if (dp.ensemble) {
    json members = json::array();
    for (const auto& m : dp.ensemble->members) {
      if (const auto* pt = std::get_if<std::vector<double>>(&m))
        members.push_back({{"point", *pt}});
      else
        members.push_back(gaussian_to_json(std::get<GaussianSpec>(m)));
    }
    j["ensemble"] = {{"members", std::move(members)}};
  }
  if (first && !trace.metadata.empty()) {
    json meta;
    for (const auto& [k, v] : trace.metadata) {
      if (const auto* num = std::get_if<double>(&v))
        meta[k] = *num;
      else
        meta[k] = std::get<std::string>(v);
    }
    j["meta"] = std::move(meta);
  }
  if (last) j["terminal"] = trace.terminal;
  return j;
}

// --- parsing --------------------------------------------------------------

[[noreturn]] void parse_fail(int line_no, const std::string& what) {
  throw ValidationError("line " + std::to_string(line_no) + ": " + what);
}

double require_number(const json& j, const char* field, int line_no) {
  if (!j.contains(field) || !j[field].is_number())
    parse_fail(line_no, std::string("missing or non-numeric field ") + field);
  return j[field].get<double>();
}

std::vector<double> require_vector(const json& j, int line_no, const char* field) {
  if (!j.is_array()) parse_fail(line_no, std::string(field) + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number()) parse_fail(line_no, std::string(field) + " must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

GaussianSpec parse_gaussian(const json& j, int line_no, const char* field) {
  GaussianSpec g;
  if (!j.contains("mean") || !j.contains("std"))
    parse_fail(line_no, std::string(field) + " gaussian needs mean and std");
  g.mean = require_vector(j["mean"], line_no, field);
  g.stddev = require_vector(j["std"], line_no, field);
  return g;
}

ActionSpaceSpec parse_action_space(const json& j, int line_no) {
  if (!j.is_object() || !j.contains("factors") || !j["factors"].is_array())
    parse_fail(line_no, "header action_space must contain a factors array");
  ActionSpaceSpec as;
  for (const auto& jf : j["factors"]) {
    const std::string type = jf.value("type", "");
    if (type == "discrete") {
      DiscreteFactor d;
      d.n = jf.value("n", 0);
      if (jf.contains("labels")) d.labels = jf["labels"].get<std::vector<std::string>>();
      as.factors.emplace_back(std::move(d));
    } else if (type == "continuous") {
      ContinuousFactor c;
      c.dim = jf.value("dim", 0);
      c.low = require_vector(jf.at("low"), line_no, "action_space.low");
      c.high = require_vector(jf.at("high"), line_no, "action_space.high");
      as.factors.emplace_back(std::move(c));
    } else {
      parse_fail(line_no, "action_space factor type must be discrete or continuous");
    }
  }
  return as;
}

InteractionDatapoint parse_datapoint(const json& j, const ActionSpaceSpec& as, int line_no) {
  InteractionDatapoint dp;
  if (!j.contains("step") || !j["step"].is_number_integer())
    parse_fail(line_no, "missing or non-integer field step");
  dp.step = j["step"].get<int>();
  if (!j.contains("obs")) parse_fail(line_no, "missing field obs");
  dp.observation = require_vector(j["obs"], line_no, "obs");
  dp.reward = require_number(j, "reward", line_no);

  if (!j.contains("action") || !j["action"].is_array())
    parse_fail(line_no, "missing or malformed field action");
  for (const auto& ja : j["action"]) {
    if (ja.is_number_integer())
      dp.action.emplace_back(ja.get<int>());
    else
      dp.action.emplace_back(require_vector(ja, line_no, "action"));
  }

  if (j.contains("value")) {
    if (!j["value"].is_number()) parse_fail(line_no, "field value must be a number");
    dp.value = j["value"].get<double>();
  }

  if (j.contains("policy")) {
    if (!j["policy"].is_array()) parse_fail(line_no, "field policy must be an array");
    std::vector<FactorPolicy> pol;
    for (const auto& jp : j["policy"]) {
      if (jp.contains("probs"))
        pol.emplace_back(DiscreteDistribution{require_vector(jp["probs"], line_no, "policy.probs")});
      else
        pol.emplace_back(parse_gaussian(jp, line_no, "policy"));
    }
    dp.policy = std::move(pol);
  }

  if (j.contains("q")) {
    if (!j["q"].is_array()) parse_fail(line_no, "field q must be an array");
    std::vector<FactorActionValues> qs;
    for (const auto& jq : j["q"]) {
      if (jq.is_null()) {
        qs.emplace_back(std::monostate{});
      } else if (jq.contains("values")) {
        qs.emplace_back(require_vector(jq["values"], line_no, "q.values"));
      } else if (jq.contains("dists")) {
        std::vector<AtomDistribution> dists;
        for (const auto& jd : jq["dists"]) {
          AtomDistribution ad;
          ad.atoms = require_vector(jd.at("atoms"), line_no, "q.dists.atoms");
          ad.probs = require_vector(jd.at("probs"), line_no, "q.dists.probs");
          dists.push_back(std::move(ad));
        }
        qs.emplace_back(std::move(dists));
      } else {
        parse_fail(line_no, "q entry must be null or carry values/dists");
      }
    }
    dp.action_values = std::move(qs);
  }

  if (j.contains("ensemble")) {
    const auto& je = j["ensemble"];
    if (!je.contains("members") || !je["members"].is_array())
      parse_fail(line_no, "ensemble must carry a members array");
    EnsemblePrediction ens;
    for (const auto& jm : je["members"]) {
      if (jm.contains("point"))
        ens.members.emplace_back(require_vector(jm["point"], line_no, "ensemble.point"));
      else
        ens.members.emplace_back(parse_gaussian(jm, line_no, "ensemble"));
    }
    dp.ensemble = std::move(ens);
  }

  (void)as;
  return dp;
}

}  // namespace

TraceSet load_traceset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trace file: " + path);

  std::string line;
  int line_no = 0;

  if (!std::getline(in, line)) throw ValidationError(path + ": empty file, header expected");
  ++line_no;

  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object())
    parse_fail(line_no, "header is not a JSON object");
  if (header.value("schema", -1) != kSchemaVersion)
    parse_fail(line_no, "unsupported or missing schema version");

  TraceSet ts;
  if (!header.contains("action_space")) parse_fail(line_no, "header missing action_space");
  ts.action_space = parse_action_space(header["action_space"], line_no);
  ts.discount = require_number(header, "discount", line_no);
  if (header.contains("reward_range")) {
    const auto& rr = header["reward_range"];
    if (!rr.is_array() || rr.size() != 2 || !rr[0].is_number() || !rr[1].is_number())
      parse_fail(line_no, "reward_range must be [min, max]");
    ts.reward_range = RewardRange{rr[0].get<double>(), rr[1].get<double>()};
  }

  Trace* current = nullptr;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) parse_fail(line_no, "malformed JSON datapoint");
    if (!j.contains("trace_id") || !j["trace_id"].is_string())
      parse_fail(line_no, "datapoint missing trace_id");
    const std::string trace_id = j["trace_id"].get<std::string>();

    if (!current || current->trace_id != trace_id) {
      for (const auto& t : ts.traces) {
        if (t.trace_id == trace_id)
          parse_fail(line_no, "trace " + trace_id + " appears in non-contiguous blocks");
      }
      ts.traces.emplace_back();
      current = &ts.traces.back();
      current->trace_id = trace_id;
    }

    if (j.contains("meta")) {
      if (!j["meta"].is_object()) parse_fail(line_no, "meta must be an object");
      for (const auto& [k, v] : j["meta"].items()) {
        if (v.is_number())
          current->metadata[k] = v.get<double>();
        else if (v.is_string())
          current->metadata[k] = v.get<std::string>();
        else
          parse_fail(line_no, "meta values must be numbers or strings");
      }
    }
    if (j.contains("terminal")) {
      if (!j["terminal"].is_boolean()) parse_fail(line_no, "terminal must be a boolean");
      current->terminal = j["terminal"].get<bool>();
    }

    current->datapoints.push_back(parse_datapoint(j, ts.action_space, line_no));
  }

  ts.validate();
  return ts;
}

void save_traceset(const TraceSet& ts, const std::string& path) {
  std::ostringstream out;
  json header;
  header["schema"] = kSchemaVersion;
  header["action_space"] = action_space_to_json(ts.action_space);
  header["discount"] = ts.discount;
  if (ts.reward_range)
    header["reward_range"] = {ts.reward_range->lo, ts.reward_range->hi};
  out << header.dump() << '\n';

  for (const auto& trace : ts.traces) {
    for (std::size_t t = 0; t < trace.datapoints.size(); ++t) {
      const bool first = t == 0;
      const bool last = t + 1 == trace.datapoints.size();
      out << datapoint_to_json(trace, trace.datapoints[t], first, last).dump() << '\n';
    }
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw StageError("cannot open file for writing: " + path);
  f << out.str();
  if (!f) throw StageError("write failed: " + path);
}

}  // namespace ixdrl
