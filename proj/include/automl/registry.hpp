#pragma once

// Registry of previously tuned (dataset, model) pairs: the source material the
// transfer step blends from. One best record per pair; replacements must not
// regress the stored metric.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "automl/cards.hpp"

namespace automl {

enum class Provenance { grid_search, manual, backend };

std::string_view to_string(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view token);

struct Metric {
  std::string name;
  double value = 0.0;
  bool operator==(const Metric&) const = default;
};

struct TuningRecord {
  DataCard data_card;
  std::string model_card_name;
  HyperParamConfig config;
  Metric best_metric;
  Provenance provenance = Provenance::manual;
  std::int64_t created_at = 0;  // UTC seconds

  bool operator==(const TuningRecord&) const = default;
};

struct Registry {
  std::vector<TuningRecord> records;
  std::map<std::string, ModelCard> model_cards;

  bool operator==(const Registry&) const = default;
};

/// Registers (or replaces) a model card by name.
Registry add_model_card(Registry registry, ModelCard card);

/// Inserts `record`, replacing any record for the same (dataset, model) pair.
/// Dataset names compare case-insensitively. All metrics are higher-is-better.
Registry add_record(Registry registry, TuningRecord record);

/// Records for one model card, ordered by dataset name ascending.
std::vector<TuningRecord> query_records(const Registry& registry, std::string_view model_card_name);

json to_json(const TuningRecord& record);
TuningRecord record_from_json(const json& j, const std::string& path = {});
json to_json(const Registry& registry);
Registry registry_from_json(const json& j);

/// Reads `registry.json` + `registry.sha256` from `dir`. A missing or empty
/// directory yields an empty registry.
Registry load_registry(const std::filesystem::path& dir);

/// Writes both files via temp-file-then-rename.
void save_registry(const Registry& registry, const std::filesystem::path& dir);

std::string sha256_hex(std::string_view bytes);

}  // namespace automl
