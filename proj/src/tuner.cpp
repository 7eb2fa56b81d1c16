#include "automl/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>

#include "automl/error.hpp"

namespace automl {
namespace {

std::string config_key(const HyperParamConfig& config) {
  std::string key;
  for (const auto& [name, value] : config) {
    key += name;
    key += '=';
    if (const auto* d = std::get_if<double>(&value)) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.12g", *d);
      key += buf;
    } else {
      key += format_value(value);
    }
    key += ';';
  }
  return key;
}

struct Evaluation {
  double metric = 0.0;
  bool feasible = false;
  TrainingLog log;
  HyperParamConfig suggestion;  // only from follow-up queries
};

// Feasible beats infeasible, then higher metric.
bool better(const Evaluation& a, const Evaluation& b) {
  if (a.feasible != b.feasible) return a.feasible;
  return a.metric > b.metric;
}

bool same_rank(const Evaluation& a, const Evaluation& b) { return a.feasible == b.feasible && a.metric == b.metric; }

std::optional<double> static_value(const Constraint& c, const HyperParamConfig& config) {
  const auto it = config.find(c.metric);
  if (it == config.end()) return std::nullopt;
  return numeric_value(it->second);
}

class Search {
 public:
  Search(const DataCard& data, const ModelCard& model, Backend& backend, const std::vector<Constraint>& constraints,
         int budget)
      : data_(data), model_(model), backend_(backend), constraints_(constraints), budget_(budget) {
    for (const auto& c : constraints_) requests_.push_back(UserRequest::of_constraint(c));
  }

  bool exhausted() const { return result_.queries_used >= budget_; }
  bool visited(const HyperParamConfig& c) const { return cache_.count(config_key(c)) > 0; }

  bool statically_excluded(const HyperParamConfig& config) const {
    for (const auto& c : constraints_) {
      if (const auto v = static_value(c, config); v && !c.satisfied_by(*v)) return true;
    }
    return false;
  }

  // nullopt when the budget is spent before the query.
  std::optional<Evaluation> evaluate(const HyperParamConfig& config) {
    if (const auto it = cache_.find(config_key(config)); it != cache_.end()) return it->second;
    if (exhausted()) return std::nullopt;
    const auto prompt = compose_prompt(data_, with_defaults(model_, config), requests_);
    return record(config, parse_response(backend_.complete(prompt)));
  }

  // Asks the backend to revise `center` given its predicted log; the reply's
  // config and log become one more trial.
  struct Suggestion {
    HyperParamConfig config;
    Evaluation eval;
    bool fresh = false;  // not visited before this query
  };

  std::optional<Suggestion> consult(const HyperParamConfig& center, const Evaluation& at_center) {
    if (exhausted()) return std::nullopt;
    const auto prompt = compose_prompt(data_, with_defaults(model_, center), requests_);
    const auto followup = compose_followup(prompt, at_center.log, UserRequest::note("maximize " + metric_name()));
    const auto response = parse_response(backend_.complete(followup));
    auto suggested = default_config(model_.arch_hparams);
    for (const auto& [k, v] : coerce_config(response.hyperparameters, model_.arch_hparams)) {
      if (model_.arch_hparams.at(k).flexibility == Flexibility::tunable) suggested[k] = v;
    }
    if (!validate_config(suggested, model_.arch_hparams).ok()) suggested = center;
    const bool fresh = !visited(suggested);
    auto eval = record(suggested, response);
    return Suggestion{std::move(suggested), std::move(eval), fresh};
  }

  TuneResult& result() { return result_; }
  bool found_feasible() const { return have_best_; }

 private:
  std::string metric_name() const { return data_.eval_metrics.empty() ? "val_metric" : data_.eval_metrics.front(); }

  Evaluation record(const HyperParamConfig& config, const BackendResponse& response) {
    Evaluation e;
    e.log = response.predicted_log;
    e.metric = e.log.final_entry().val_metric;
    e.feasible = feasible(config, response);
    ++result_.queries_used;
    result_.trajectory.push_back({config, e.metric, e.feasible});
    if (e.feasible && (!have_best_ || e.metric > result_.best_final_metric)) {
      have_best_ = true;
      result_.best_config = config;
      result_.best_final_metric = e.metric;
      result_.best_log = e.log;
    }
    cache_.insert_or_assign(config_key(config), e);
    return e;
  }

  bool feasible(const HyperParamConfig& config, const BackendResponse& response) const {
    const auto estimates = architecture_estimates(response);
    const auto& last = response.predicted_log.final_entry();
    for (const auto& c : constraints_) {
      std::optional<double> observed = static_value(c, config);
      if (!observed) {
        if (c.metric == "train_loss") observed = last.train_loss;
        else if (c.metric == "val_loss") observed = last.val_loss;
        else if (c.metric == "val_metric" || c.metric == canonical_token(metric_name())) observed = last.val_metric;
        else if (const auto it = estimates.find(c.metric); it != estimates.end()) observed = it->second;
      }
      if (!observed || !c.satisfied_by(*observed)) return false;
    }
    return true;
  }

  const DataCard& data_;
  const ModelCard& model_;
  Backend& backend_;
  const std::vector<Constraint>& constraints_;
  std::vector<UserRequest> requests_;
  int budget_;
  TuneResult result_;
  bool have_best_ = false;
  std::map<std::string, Evaluation> cache_;
};

HyperParamConfig seed_center(const Recommendation& seed, const ModelCard& model) {
  auto center = default_config(model.arch_hparams);
  for (const auto& [k, v] : coerce_config(seed.config, model.arch_hparams)) center[k] = v;
  const auto report = validate_config(center, model.arch_hparams);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw Error(ErrorCode::PreconditionViolation, "seed config invalid: " + v.key + ": " + v.reason, v.key);
  }
  return center;
}

}  // namespace

std::vector<HyperParamConfig> propose_candidates(const HyperParamConfig& center, const HyperParamSpace& space) {
  std::vector<HyperParamConfig> out{center};
  const auto push_if_moved = [&](const std::string& name, ParamValue v) {
    if (v == center.at(name)) return;
    auto c = center;
    c[name] = std::move(v);
    out.push_back(std::move(c));
  };
  for (const auto& [name, spec] : space) {
    if (spec.flexibility != Flexibility::tunable || !center.count(name)) continue;
    const auto& value = center.at(name);
    switch (spec.kind) {
      case ParamKind::continuous_log: {
        const double x = numeric_value(value).value_or(spec.min);
        const double f = std::pow(10.0, kLogStep);
        push_if_moved(name, std::clamp(x / f, spec.min, spec.max));
        push_if_moved(name, std::clamp(x * f, spec.min, spec.max));
        break;
      }
      case ParamKind::continuous_linear: {
        const double x = numeric_value(value).value_or(spec.min);
        const double step = kLinearStep * (spec.max - spec.min);
        push_if_moved(name, std::clamp(x - step, spec.min, spec.max));
        push_if_moved(name, std::clamp(x + step, spec.min, spec.max));
        break;
      }
      case ParamKind::integer: {
        const auto x = static_cast<std::int64_t>(numeric_value(value).value_or(spec.min));
        if (static_cast<double>(x - 1) >= spec.min) push_if_moved(name, x - 1);
        if (static_cast<double>(x + 1) <= spec.max) push_if_moved(name, x + 1);
        break;
      }
      case ParamKind::categorical:
        for (const auto& cat : spec.categories) push_if_moved(name, cat);
        break;
    }
  }
  return out;
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::budget: return "budget";
    case StopReason::converged: return "converged";
    case StopReason::all_filtered: return "all_filtered";
  }
  return "converged";
}

json to_json(const TuneResult& r) {
  json trajectory = json::array();
  for (const auto& t : r.trajectory) {
    trajectory.push_back({{"config", config_to_json(t.config)}, {"final_metric", t.final_metric}, {"feasible", t.feasible}});
  }
  return json{{"best_config", config_to_json(r.best_config)},
              {"best_final_metric", r.best_final_metric},
              {"trajectory", std::move(trajectory)},
              {"queries_used", r.queries_used},
              {"stop_reason", std::string(to_string(r.stop_reason))}};
}

TuneResult tune(const Recommendation& seed, const DataCard& data, const ModelCard& model, Backend& backend,
                const std::vector<Constraint>& constraints, int budget) {
  if (budget < 1) throw Error(ErrorCode::PreconditionViolation, "budget must be at least 1");
  Search search(data, model, backend, constraints, budget);
  auto& result = search.result();

  const auto finish = [&](StopReason reason) {
    if (!search.found_feasible()) {
      throw Error(ErrorCode::AllCandidatesFiltered,
                  "no evaluated configuration satisfies every constraint (" + std::to_string(result.queries_used) +
                      " queries)");
    }
    result.stop_reason = reason;
    return std::move(result);
  };

  auto center = seed_center(seed, model);
  std::optional<Evaluation> at_center;
  if (!search.statically_excluded(center)) at_center = search.evaluate(center);

  while (true) {
    if (search.exhausted()) return finish(StopReason::budget);

    std::optional<std::pair<HyperParamConfig, Evaluation>> best_move;
    std::optional<std::pair<HyperParamConfig, Evaluation>> plateau_move;
    const auto consider = [&](const HyperParamConfig& config, const Evaluation& e) {
      if (!best_move || better(e, best_move->second)) best_move.emplace(config, e);
    };

    if (at_center) {
      if (auto s = search.consult(center, *at_center)) {
        consider(s->config, s->eval);
        // Plateau: follow a fresh backend suggestion of equal rank.
        if (s->fresh && same_rank(s->eval, *at_center)) plateau_move.emplace(s->config, s->eval);
      }
    }

    bool cut_short = false;
    const auto candidates = propose_candidates(center, model.arch_hparams);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
      if (search.statically_excluded(candidates[i])) continue;
      const auto e = search.evaluate(candidates[i]);
      if (!e) {
        cut_short = true;
        break;
      }
      consider(candidates[i], *e);
    }

    if (best_move && (!at_center || better(best_move->second, *at_center))) {
      center = best_move->first;
      at_center = best_move->second;
    } else if (plateau_move) {
      center = plateau_move->first;
      at_center = plateau_move->second;
    } else {
      return finish(cut_short ? StopReason::budget : StopReason::converged);
    }
  }
}

double predicted_metric(const DataCard& data, const ModelCard& model, Backend& backend,
                        const HyperParamConfig& config) {
  const auto response = parse_response(backend.complete(compose_prompt(data, with_defaults(model, config))));
  return response.predicted_log.final_entry().val_metric;
}

std::vector<ParamValue> log_grid(double lo, double hi, int n) {
  std::vector<ParamValue> out;
  if (n <= 0) return out;
  if (n == 1) return {lo};
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < n; ++i) out.emplace_back(std::pow(10.0, a + (b - a) * i / (n - 1)));
  return out;
}

std::vector<ParamValue> linear_grid(double lo, double hi, int n) {
  std::vector<ParamValue> out;
  if (n <= 0) return out;
  if (n == 1) return {lo};
  for (int i = 0; i < n; ++i) out.emplace_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

std::pair<HyperParamConfig, double> grid_search_oracle(const HyperParamSpace& space,
                                                       const std::function<double(const HyperParamConfig&)>& evaluate,
                                                       const GridSpec& grid) {
  if (grid.axes.empty()) throw Error(ErrorCode::EmptyGrid, "grid has no axes");
  for (const auto& [name, points] : grid.axes) {
    if (points.empty()) throw Error(ErrorCode::EmptyGrid, "axis '" + name + "' has no points", name);
  }

  const auto base = default_config(space);
  std::vector<std::size_t> index(grid.axes.size(), 0);
  std::optional<std::pair<HyperParamConfig, double>> best;
  while (true) {
    auto config = base;
    for (std::size_t a = 0; a < grid.axes.size(); ++a) config[grid.axes[a].first] = grid.axes[a].second[index[a]];
    const double v = evaluate(config);
    if (!best || v > best->second) best.emplace(std::move(config), v);

    // Odometer with the last axis fastest.
    std::size_t a = grid.axes.size();
    while (a > 0) {
      --a;
      if (++index[a] < grid.axes[a].second.size()) break;
      index[a] = 0;
      if (a == 0) return *best;
    }
  }
}

}  // namespace automl
