#include "automl/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "automl/error.hpp"

namespace automl {
namespace {

std::string lower(std::string s) {
  for (auto& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

double clamp_to(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

ParamValue blend_one(const std::string& name, const HyperParamSpec& spec, const NeighborSet& neighbors) {
  std::vector<const ParamValue*> values;
  values.reserve(neighbors.entries.size());
  for (const auto& n : neighbors.entries) {
    const auto it = n.record.config.find(name);
    if (it == n.record.config.end()) {
      throw Error(ErrorCode::IncompatibleConfigs,
                  "neighbor '" + n.record.data_card.name + "' has no value for '" + name + "'", name);
    }
    values.push_back(&it->second);
  }

  if (spec.kind == ParamKind::categorical) {
    std::map<std::string, double> votes;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto* s = std::get_if<std::string>(values[i]);
      if (!s) throw Error(ErrorCode::IncompatibleConfigs, "non-categorical value for '" + name + "'", name);
      votes[*s] += neighbors.entries[i].weight;
    }
    auto best = votes.begin();
    for (auto it = votes.begin(); it != votes.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    return best->first;
  }

  std::vector<double> xs;
  xs.reserve(values.size());
  for (const auto* v : values) {
    const auto x = numeric_value(*v);
    if (!x) throw Error(ErrorCode::IncompatibleConfigs, "non-numeric value for '" + name + "'", name);
    xs.push_back(*x);
  }
  const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  const double lo = *lo_it;
  const double hi = *hi_it;

  if (spec.kind == ParamKind::integer) {
    double mean = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) mean += neighbors.entries[i].weight * xs[i];
    const double rounded = std::nearbyint(clamp_to(mean, lo, hi));
    return static_cast<std::int64_t>(clamp_to(rounded, spec.min, spec.max));
  }

  // Unanimous values are returned as stored.
  if (lo == hi) return lo;
  double blended = 0.0;
  if (spec.kind == ParamKind::continuous_log) {
    double log_mean = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) log_mean += neighbors.entries[i].weight * std::log(xs[i]);
    blended = std::exp(log_mean);
  } else {
    for (std::size_t i = 0; i < xs.size(); ++i) blended += neighbors.entries[i].weight * xs[i];
  }
  return clamp_to(clamp_to(blended, lo, hi), spec.min, spec.max);
}

}  // namespace

NeighborSet rank_neighbors(std::vector<ScoredRecord> scored, int k, double tau) {
  if (k < 1) throw Error(ErrorCode::PreconditionViolation, "k must be at least 1");
  if (!(tau >= 0.0 && tau < 1.0)) throw Error(ErrorCode::PreconditionViolation, "tau must lie in [0, 1)");

  std::erase_if(scored, [&](const ScoredRecord& s) { return !(s.similarity >= tau) || s.similarity <= 0.0; });
  std::stable_sort(scored.begin(), scored.end(), [](const ScoredRecord& a, const ScoredRecord& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return lower(a.record.data_card.name) < lower(b.record.data_card.name);
  });
  if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));
  if (scored.empty()) {
    throw Error(ErrorCode::NoNeighbors, "no registry dataset reaches similarity " + format_number(tau));
  }

  double total = 0.0;
  for (const auto& s : scored) total += s.similarity;
  NeighborSet set{{}, k, tau};
  set.entries.reserve(scored.size());
  for (auto& s : scored) {
    const double w = s.similarity / total;
    set.entries.push_back({std::move(s.record), s.similarity, w});
  }
  return set;
}

NeighborSet select_neighbors(const DataCard& card, const Registry& registry, const std::string& model_card_name,
                             const Embedder& embedder, int k, double tau) {
  const auto target = embedder.embed(card_text(card));
  std::vector<ScoredRecord> scored;
  for (auto& record : query_records(registry, model_card_name)) {
    const double s = similarity(target, embedder.embed(card_text(record.data_card)));
    scored.push_back({std::move(record), s});
  }
  return rank_neighbors(std::move(scored), k, tau);
}

HyperParamConfig blend_configs(const NeighborSet& neighbors, const HyperParamSpace& space) {
  if (neighbors.empty()) throw Error(ErrorCode::NoNeighbors, "cannot blend an empty neighbor set");
  HyperParamConfig out;
  for (const auto& [name, spec] : space) out.emplace(name, blend_one(name, spec, neighbors));
  return out;
}

std::string_view to_string(RecommendationSource s) {
  switch (s) {
    case RecommendationSource::transfer: return "transfer";
    case RecommendationSource::backend: return "backend";
    case RecommendationSource::default_config: return "default";
  }
  return "default";
}

json to_json(const Recommendation& r) {
  json neighbors = json::array();
  for (const auto& [dataset, weight] : r.neighbor_summary) neighbors.push_back({{"dataset", dataset}, {"weight", weight}});
  return json{{"config", config_to_json(r.config)},
              {"source", std::string(to_string(r.source))},
              {"neighbor_summary", std::move(neighbors)},
              {"rationale", r.rationale}};
}

Recommendation default_recommendation(const ModelCard& model, std::string rationale) {
  return {default_config(model.arch_hparams), RecommendationSource::default_config, {}, std::move(rationale)};
}

Recommendation recommend(const DataCard& card, const ModelCard& model, const Registry& registry,
                         const Embedder& embedder, int k, double tau) {
  NeighborSet neighbors;
  try {
    neighbors = select_neighbors(card, registry, model.name, embedder, k, tau);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoNeighbors) throw;
    return default_recommendation(model, "no registry dataset for " + model.name + " reaches similarity " +
                                             format_number(tau) + "; using model card defaults");
  }
  // Records written before a parameter joined the card fall back to its default.
  const auto defaults = default_config(model.arch_hparams);
  for (auto& n : neighbors.entries) {
    auto filled = defaults;
    for (const auto& [key, value] : coerce_config(n.record.config, model.arch_hparams)) filled[key] = value;
    n.record.config = std::move(filled);
  }

  Recommendation r;
  r.config = blend_configs(neighbors, model.arch_hparams);
  r.source = RecommendationSource::transfer;
  std::string rationale = "blended from";
  for (const auto& n : neighbors.entries) {
    r.neighbor_summary.emplace_back(n.record.data_card.name, n.weight);
    char sim[32];
    std::snprintf(sim, sizeof sim, "%.3f", n.similarity);
    rationale += " " + n.record.data_card.name + " (similarity " + sim + ")";
  }
  r.rationale = std::move(rationale);
  return r;
}

std::string model_text(const ModelCard& model) { return model.description + " " + model.structure; }

std::size_t argmax_model(const std::vector<ModelCard>& models, const std::vector<double>& scores) {
  if (models.empty() || models.size() != scores.size()) {
    throw Error(ErrorCode::PreconditionViolation, "need one score per model card and at least one card");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < models.size(); ++i) {
    if (scores[i] > scores[best] || (scores[i] == scores[best] && models[i].name < models[best].name)) best = i;
  }
  return best;
}

ModelCard assign_model(const DataCard& card, const std::vector<ModelCard>& models, const Embedder& embedder) {
  const auto target = embedder.embed(card_text(card));
  std::vector<double> scores;
  scores.reserve(models.size());
  for (const auto& m : models) scores.push_back(similarity(target, embedder.embed(model_text(m))));
  return models[argmax_model(models, scores)];
}

}  // namespace automl
