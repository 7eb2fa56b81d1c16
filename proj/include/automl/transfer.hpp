#pragma once

// Similarity-weighted hyperparameter transfer from tuned registry datasets to
// an unseen data card, plus in-context model assignment.

#include <string>
#include <utility>
#include <vector>

#include "automl/cards.hpp"
#include "automl/encoder.hpp"
#include "automl/registry.hpp"

namespace automl {

inline constexpr int kDefaultNeighbors = 3;
inline constexpr double kDefaultThreshold = 0.05;

struct Neighbor {
  TuningRecord record;
  double similarity = 0.0;
  double weight = 0.0;
};

struct NeighborSet {
  std::vector<Neighbor> entries;
  int k = kDefaultNeighbors;
  double tau = kDefaultThreshold;

  bool empty() const { return entries.empty(); }
};

struct ScoredRecord {
  TuningRecord record;
  double similarity = 0.0;
};

/// Threshold, rank (similarity descending, dataset name ascending), truncate
/// to k and normalize. Throws NoNeighbors when nothing with positive
/// similarity survives the threshold.
NeighborSet rank_neighbors(std::vector<ScoredRecord> scored, int k, double tau);

NeighborSet select_neighbors(const DataCard& card, const Registry& registry, const std::string& model_card_name,
                             const Embedder& embedder, int k = kDefaultNeighbors, double tau = kDefaultThreshold);

/// Kind-aware weighted blend: geometric mean for log kinds, arithmetic mean
/// for linear kinds, banker's-rounded mean for integers, weighted vote for
/// categoricals.
HyperParamConfig blend_configs(const NeighborSet& neighbors, const HyperParamSpace& space);

enum class RecommendationSource { transfer, backend, default_config };

std::string_view to_string(RecommendationSource s);

struct Recommendation {
  HyperParamConfig config;
  RecommendationSource source = RecommendationSource::default_config;
  std::vector<std::pair<std::string, double>> neighbor_summary;  // (dataset, weight)
  std::string rationale;

  bool operator==(const Recommendation&) const = default;
};

json to_json(const Recommendation& r);

Recommendation default_recommendation(const ModelCard& model, std::string rationale);

/// Falls back to the model card defaults when no neighbor qualifies.
Recommendation recommend(const DataCard& card, const ModelCard& model, const Registry& registry,
                         const Embedder& embedder, int k = kDefaultNeighbors, double tau = kDefaultThreshold);

/// Text a model card is embedded under for assignment: description, then structure.
std::string model_text(const ModelCard& model);

/// Index of the highest score; ties go to the smaller model name.
std::size_t argmax_model(const std::vector<ModelCard>& models, const std::vector<double>& scores);

ModelCard assign_model(const DataCard& card, const std::vector<ModelCard>& models, const Embedder& embedder);

}  // namespace automl
