#pragma once

// Data cards, model cards and typed hyperparameter spaces.
//
// Cards arrive as strict JSON documents. Parsing canonicalizes every field:
// whitespace trimmed and collapsed, enum tokens and class labels lowercased.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace automl {

using json = nlohmann::json;

enum class InputType { image, text, tabular };
enum class ParamKind { continuous_linear, continuous_log, integer, categorical };
enum class Flexibility { fixed, tunable };

std::string_view to_string(InputType t);
std::string_view to_string(ParamKind k);
std::string_view to_string(Flexibility f);
std::optional<InputType> parse_input_type(std::string_view token);
std::optional<ParamKind> parse_param_kind(std::string_view token);
std::optional<Flexibility> parse_flexibility(std::string_view token);

/// Either an explicit class list or a prose description of the outputs.
using LabelSpace = std::variant<std::vector<std::string>, std::string>;

/// Integer kinds hold int64; continuous kinds hold double (int64 is accepted
/// and widened); categorical kinds hold the category string.
using ParamValue = std::variant<std::int64_t, double, std::string>;

struct DataCard {
  std::string name;
  InputType input_type = InputType::image;
  LabelSpace label_space;
  std::optional<std::int64_t> scale;
  std::string task_description;
  std::vector<std::string> eval_metrics;

  bool operator==(const DataCard&) const = default;
};

struct HyperParamSpec {
  std::string name;
  ParamKind kind = ParamKind::continuous_linear;
  double min = 0.0;  // numeric kinds
  double max = 0.0;
  std::vector<std::string> categories;  // categorical kind
  ParamValue default_value;
  Flexibility flexibility = Flexibility::tunable;

  bool is_numeric() const { return kind != ParamKind::categorical; }
  bool operator==(const HyperParamSpec&) const = default;
};

/// Keyed by hyperparameter name; iteration order is name-ascending.
using HyperParamSpace = std::map<std::string, HyperParamSpec>;
using HyperParamConfig = std::map<std::string, ParamValue>;

struct ModelCard {
  std::string name;
  std::string structure;
  std::string description;
  HyperParamSpace arch_hparams;

  bool operator==(const ModelCard&) const = default;
};

struct Violation {
  std::string key;
  std::string reason;
  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// --- canonicalization -------------------------------------------------------

/// Trims and collapses every whitespace run to one space.
std::string canonical_text(std::string_view s);
/// canonical_text, then ASCII lowercase.
std::string canonical_token(std::string_view s);
/// Lowercase snake-case identifier: [a-z_][a-z0-9_]*.
bool is_identifier(std::string_view s);

DataCard canonicalize(DataCard card);
ModelCard canonicalize(ModelCard card);

// --- documents --------------------------------------------------------------

DataCard parse_data_card(std::string_view document);
ModelCard parse_model_card(std::string_view document);

/// Same rules as the document parsers, over an already-parsed JSON value.
/// `path` prefixes field paths in errors.
DataCard data_card_from_json(const json& j, const std::string& path = {});
ModelCard model_card_from_json(const json& j, const std::string& path = {});

json to_json(const DataCard& card);
json to_json(const ModelCard& card);
json to_json(const HyperParamSpec& spec);
std::string serialize(const DataCard& card);
std::string serialize(const ModelCard& card);

// --- configs ----------------------------------------------------------------

json to_json(const ParamValue& v);
json config_to_json(const HyperParamConfig& config);
HyperParamConfig config_from_json(const json& j, const std::string& path = {});

/// Shortest decimal form that reads back to the same double.
std::string format_number(double v);
std::string format_value(const ParamValue& v);
/// Numeric view of an int64 or double value; nullopt for strings.
std::optional<double> numeric_value(const ParamValue& v);

ValidationReport validate_config(const HyperParamConfig& config, const HyperParamSpace& space);

/// Converts values to the representation their spec's kind uses (int64 widened
/// to double for continuous kinds, integral doubles narrowed for integers).
/// Keys without a spec are dropped.
HyperParamConfig coerce_config(const HyperParamConfig& config, const HyperParamSpace& space);

HyperParamConfig default_config(const HyperParamSpace& space);

/// The model card with every default replaced by the matching config value.
ModelCard with_defaults(ModelCard model, const HyperParamConfig& config);

}  // namespace automl
