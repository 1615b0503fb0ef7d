#include "ixdrl/types.hpp"

#include <cmath>
#include <sstream>

namespace ixdrl {

namespace {

constexpr double kProbSumTol = 1e-6;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

std::string dp_context(const std::string& trace_id, int step, const std::string& field) {
  std::ostringstream os;
  os << "trace " << trace_id << " step " << step << " field " << field;
  return os.str();
}

void check_discrete_distribution(const DiscreteDistribution& d, const std::string& where) {
  if (d.probs.empty()) fail(where, "distribution has no entries");
  double sum = 0.0;
  for (std::size_t i = 0; i < d.probs.size(); ++i) {
    if (!(d.probs[i] >= 0.0)) fail(where, "probability " + std::to_string(i) + " is negative");
    sum += d.probs[i];
  }
  if (std::abs(sum - 1.0) > kProbSumTol)
    fail(where, "probabilities sum to " + std::to_string(sum) + ", expected 1");
}

void check_atom_distribution(const AtomDistribution& d, const std::string& where) {
  if (d.atoms.empty()) fail(where, "distribution has no atoms");
  if (d.atoms.size() != d.probs.size()) fail(where, "atoms and probs lengths differ");
  for (std::size_t i = 1; i < d.atoms.size(); ++i) {
    if (!(d.atoms[i] > d.atoms[i - 1])) fail(where, "atoms are not strictly increasing");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < d.probs.size(); ++i) {
    if (!(d.probs[i] >= 0.0)) fail(where, "probability " + std::to_string(i) + " is negative");
    sum += d.probs[i];
  }
  if (std::abs(sum - 1.0) > kProbSumTol)
    fail(where, "probabilities sum to " + std::to_string(sum) + ", expected 1");
}

void check_gaussian(const GaussianSpec& g, const std::string& where) {
  if (g.mean.empty()) fail(where, "gaussian has no components");
  if (g.mean.size() != g.stddev.size()) fail(where, "mean and stddev lengths differ");
  for (std::size_t i = 0; i < g.stddev.size(); ++i) {
    if (!(g.stddev[i] > 0.0)) fail(where, "stddev " + std::to_string(i) + " is not positive");
  }
}

}  // namespace

double AtomDistribution::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) m += atoms[i] * probs[i];
  return m;
}

double Trace::score() const {
  double s = 0.0;
  for (const auto& dp : datapoints) s += dp.reward;
  return s;
}

void ActionSpaceSpec::validate() const {
  if (factors.empty()) fail("action_space", "at least one factor is required");
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const std::string where = "action_space factor " + std::to_string(f);
    if (const auto* d = std::get_if<DiscreteFactor>(&factors[f])) {
      if (d->n < 1) fail(where, "discrete factor needs n >= 1");
      if (!d->labels.empty() && static_cast<int>(d->labels.size()) != d->n)
        fail(where, "label count does not match n");
    } else {
      const auto& c = std::get<ContinuousFactor>(factors[f]);
      if (c.dim < 1) fail(where, "continuous factor needs dim >= 1");
      if (static_cast<int>(c.low.size()) != c.dim || static_cast<int>(c.high.size()) != c.dim)
        fail(where, "bounds length does not match dim");
      for (int i = 0; i < c.dim; ++i) {
        if (!(c.low[i] < c.high[i])) fail(where, "lower bound must be < upper bound");
        if (!std::isfinite(c.low[i]) || !std::isfinite(c.high[i]))
          fail(where, "bounds must be finite");
      }
    }
  }
}

void TraceSet::validate() const {
  action_space.validate();
  if (!(discount >= 0.0 && discount <= 1.0)) fail("header", "discount must lie in [0, 1]");
  if (reward_range && !(reward_range->lo <= reward_range->hi))
    fail("header", "reward_range min exceeds max");

  const int n_factors = action_space.factor_count();
  for (const auto& trace : traces) {
    if (trace.datapoints.empty()) fail("trace " + trace.trace_id, "trace has no datapoints");
    for (std::size_t t = 0; t < trace.datapoints.size(); ++t) {
      const auto& dp = trace.datapoints[t];
      const int step = dp.step;
      if (step != static_cast<int>(t))
        fail(dp_context(trace.trace_id, step, "step"),
             "steps must be contiguous from 0 (expected " + std::to_string(t) + ")");

      if (!dp.has_any_model_output())
        fail(dp_context(trace.trace_id, step, "value/policy/action_values/ensemble"),
             "at least one model output is required");

      if (reward_range &&
          (dp.reward < reward_range->lo - 1e-12 || dp.reward > reward_range->hi + 1e-12))
        fail(dp_context(trace.trace_id, step, "reward"),
             "reward outside declared reward_range");

      // Per-factor arity and kind checks.
      if (static_cast<int>(dp.action.size()) != n_factors)
        fail(dp_context(trace.trace_id, step, "action"),
             "expected one entry per action factor");
      for (int f = 0; f < n_factors; ++f) {
        const std::string where = dp_context(trace.trace_id, step,
                                             "action[" + std::to_string(f) + "]");
        if (const auto* df = std::get_if<DiscreteFactor>(&action_space.factors[f])) {
          const auto* idx = std::get_if<int>(&dp.action[f]);
          if (!idx) fail(where, "discrete factor requires an action index");
          if (*idx < 0 || *idx >= df->n) fail(where, "action index out of range");
        } else {
          const auto& cf = std::get<ContinuousFactor>(action_space.factors[f]);
          const auto* vec = std::get_if<std::vector<double>>(&dp.action[f]);
          if (!vec) fail(where, "continuous factor requires an action vector");
          if (static_cast<int>(vec->size()) != cf.dim) fail(where, "action dim mismatch");
        }
      }

      if (dp.policy) {
        if (static_cast<int>(dp.policy->size()) != n_factors)
          fail(dp_context(trace.trace_id, step, "policy"),
               "expected one entry per action factor");
        for (int f = 0; f < n_factors; ++f) {
          const std::string where = dp_context(trace.trace_id, step,
                                               "policy[" + std::to_string(f) + "]");
          if (const auto* df = std::get_if<DiscreteFactor>(&action_space.factors[f])) {
            const auto* dd = std::get_if<DiscreteDistribution>(&(*dp.policy)[f]);
            if (!dd) fail(where, "discrete factor requires a discrete policy");
            if (static_cast<int>(dd->probs.size()) != df->n)
              fail(where, "policy length does not match factor action count");
            check_discrete_distribution(*dd, where);
          } else {
            const auto& cf = std::get<ContinuousFactor>(action_space.factors[f]);
            const auto* g = std::get_if<GaussianSpec>(&(*dp.policy)[f]);
            if (!g) fail(where, "continuous factor requires a gaussian policy");
            if (static_cast<int>(g->mean.size()) != cf.dim) fail(where, "policy dim mismatch");
            check_gaussian(*g, where);
          }
        }
      }

      if (dp.action_values) {
        if (static_cast<int>(dp.action_values->size()) != n_factors)
          fail(dp_context(trace.trace_id, step, "action_values"),
               "expected one entry per action factor");
        for (int f = 0; f < n_factors; ++f) {
          const std::string where = dp_context(trace.trace_id, step,
                                               "action_values[" + std::to_string(f) + "]");
          const auto& fav = (*dp.action_values)[f];
          if (const auto* df = std::get_if<DiscreteFactor>(&action_space.factors[f])) {
            if (const auto* vals = std::get_if<std::vector<double>>(&fav)) {
              if (static_cast<int>(vals->size()) != df->n)
                fail(where, "value count does not match factor action count");
              for (double v : *vals)
                if (!std::isfinite(v)) fail(where, "action value is not finite");
            } else if (const auto* dists = std::get_if<std::vector<AtomDistribution>>(&fav)) {
              if (static_cast<int>(dists->size()) != df->n)
                fail(where, "distribution count does not match factor action count");
              for (std::size_t a = 0; a < dists->size(); ++a)
                check_atom_distribution((*dists)[a],
                                        where + " action " + std::to_string(a));
            }
            // monostate is allowed: factor carries no action values.
          } else if (!std::holds_alternative<std::monostate>(fav)) {
            fail(where, "continuous factors cannot carry per-action values");
          }
        }
      }

      if (dp.ensemble) {
        const std::string where = dp_context(trace.trace_id, step, "ensemble");
        const auto& ens = *dp.ensemble;
        if (ens.size() < 2) fail(where, "ensemble needs K >= 2 members");
        const bool dist = ens.distributional();
        std::size_t dim = 0;
        for (int k = 0; k < ens.size(); ++k) {
          const std::string mwhere = where + " member " + std::to_string(k);
          if (const auto* pt = std::get_if<std::vector<double>>(&ens.members[k])) {
            if (dist) fail(mwhere, "members mix point and distributional predictions");
            if (k == 0) dim = pt->size();
            if (pt->empty()) fail(mwhere, "empty prediction vector");
            if (pt->size() != dim) fail(mwhere, "member dimensionality mismatch");
          } else {
            const auto& g = std::get<GaussianSpec>(ens.members[k]);
            if (!dist) fail(mwhere, "members mix point and distributional predictions");
            if (k == 0) dim = g.mean.size();
            if (g.mean.size() != dim) fail(mwhere, "member dimensionality mismatch");
            check_gaussian(g, mwhere);
          }
        }
      }
    }
  }
}

RewardRange TraceSet::effective_reward_range() const {
  if (reward_range) return *reward_range;
  warn("no reward_range declared in header; falling back to the observed range");
  return observed_reward_range(*this);
}

RewardRange observed_reward_range(const TraceSet& ts) {
  bool any = false;
  RewardRange r{0.0, 0.0};
  for (const auto& trace : ts.traces) {
    for (const auto& dp : trace.datapoints) {
      if (!any) {
        r.lo = r.hi = dp.reward;
        any = true;
      } else {
        r.lo = std::min(r.lo, dp.reward);
        r.hi = std::max(r.hi, dp.reward);
      }
    }
  }
  if (!any) throw ValidationError("observed_reward_range: TraceSet has no datapoints");
  if (r.degenerate()) warn("observed reward range is degenerate (all rewards equal)");
  return r;
}

}  // namespace ixdrl
