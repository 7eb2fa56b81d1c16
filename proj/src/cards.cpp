#include "automl/cards.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <set>

#include "automl/error.hpp"

namespace automl {
namespace {

std::string join_path(const std::string& prefix, std::string_view key) {
  if (prefix.empty()) return std::string(key);
  return prefix + "." + std::string(key);
}

std::string index_path(const std::string& prefix, std::size_t i) {
  return prefix + "[" + std::to_string(i) + "]";
}

[[noreturn]] void schema_error(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::SchemaViolation, message, field);
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

void check_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> required,
                std::initializer_list<std::string_view> optional = {}) {
  if (!j.is_object()) schema_error(path, "expected an object");
  for (const auto& [key, _] : j.items()) {
    const bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                       std::find(optional.begin(), optional.end(), key) != optional.end();
    if (!known) schema_error(join_path(path, key), "unknown field '" + key + "'");
  }
  for (auto key : required) {
    if (!j.contains(key)) schema_error(join_path(path, key), "missing field '" + std::string(key) + "'");
  }
}

const std::string& require_string(const json& j, const std::string& path) {
  if (!j.is_string()) schema_error(path, "expected a string");
  return j.get_ref<const std::string&>();
}

double require_number(const json& j, const std::string& path) {
  if (!j.is_number()) schema_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema_error(path, "expected a finite number");
  return v;
}

bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

json parse_json(std::string_view document) {
  try {
    return json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedDocument, e.what());
  }
}

// Checks a canonical data card's invariants, reporting the first failure.
void check_data_card(const DataCard& card, const std::string& path) {
  if (card.name.empty()) schema_error(join_path(path, "name"), "name must be non-empty");
  const std::string labels_path = join_path(path, "label_space");
  if (const auto* classes = std::get_if<std::vector<std::string>>(&card.label_space)) {
    if (classes->empty()) throw Error(ErrorCode::EmptyLabelSpace, "label space has no classes", labels_path);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < classes->size(); ++i) {
      const auto& label = (*classes)[i];
      if (label.empty()) {
        throw Error(ErrorCode::EmptyLabelSpace, "empty class label", index_path(labels_path, i));
      }
      if (!seen.insert(label).second) {
        throw Error(ErrorCode::EmptyLabelSpace, "class label '" + label + "' collides after canonicalization",
                    index_path(labels_path, i));
      }
    }
  } else if (std::get<std::string>(card.label_space).empty()) {
    throw Error(ErrorCode::EmptyLabelSpace, "label space description is empty", labels_path);
  }
  if (card.scale && *card.scale <= 0) schema_error(join_path(path, "scale"), "scale must be positive");
  const std::string metrics_path = join_path(path, "eval_metrics");
  if (card.eval_metrics.empty()) schema_error(metrics_path, "at least one evaluation metric is required");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < card.eval_metrics.size(); ++i) {
    if (card.eval_metrics[i].empty()) schema_error(index_path(metrics_path, i), "empty metric name");
    if (!seen.insert(card.eval_metrics[i]).second) {
      schema_error(index_path(metrics_path, i), "duplicate metric '" + card.eval_metrics[i] + "'");
    }
  }
}

bool value_in_domain(const HyperParamSpec& spec, const ParamValue& v) {
  if (spec.kind == ParamKind::categorical) {
    const auto* s = std::get_if<std::string>(&v);
    return s && std::find(spec.categories.begin(), spec.categories.end(), *s) != spec.categories.end();
  }
  const auto x = numeric_value(v);
  return x && *x >= spec.min && *x <= spec.max;
}

HyperParamSpec spec_from_json(const std::string& name, const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "domain", "default", "flexibility"});
  HyperParamSpec spec;
  spec.name = name;

  const auto kind = parse_param_kind(canonical_token(require_string(j["kind"], join_path(path, "kind"))));
  if (!kind) schema_error(join_path(path, "kind"), "unknown hyperparameter kind");
  spec.kind = *kind;

  const auto flex =
      parse_flexibility(canonical_token(require_string(j["flexibility"], join_path(path, "flexibility"))));
  if (!flex) schema_error(join_path(path, "flexibility"), "flexibility must be 'fixed' or 'tunable'");
  spec.flexibility = *flex;

  const std::string domain_path = join_path(path, "domain");
  const json& domain = j["domain"];
  if (!domain.is_array()) schema_error(domain_path, "domain must be an array");
  const std::string default_path = join_path(path, "default");
  const json& def = j["default"];

  if (spec.kind == ParamKind::categorical) {
    if (domain.empty()) schema_error(domain_path, "categorical domain must be non-empty");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < domain.size(); ++i) {
      auto category = canonical_text(require_string(domain[i], index_path(domain_path, i)));
      if (category.empty()) schema_error(index_path(domain_path, i), "empty category");
      if (!seen.insert(category).second) schema_error(index_path(domain_path, i), "duplicate category");
      spec.categories.push_back(std::move(category));
    }
    spec.default_value = canonical_text(require_string(def, default_path));
  } else {
    if (domain.size() != 2) schema_error(domain_path, "numeric domain must be [min, max]");
    spec.min = require_number(domain[0], index_path(domain_path, 0));
    spec.max = require_number(domain[1], index_path(domain_path, 1));
    if (!(spec.min < spec.max)) schema_error(domain_path, "domain requires min < max");
    if (spec.kind == ParamKind::continuous_log && spec.min <= 0.0) {
      schema_error(domain_path, "continuous_log domain requires min > 0");
    }
    if (spec.kind == ParamKind::integer) {
      if (!is_integral(spec.min) || !is_integral(spec.max)) schema_error(domain_path, "integer domain bounds");
      if (!def.is_number_integer()) schema_error(default_path, "integer default must be an integer");
      spec.default_value = def.get<std::int64_t>();
    } else {
      spec.default_value = require_number(def, default_path);
    }
  }
  if (!value_in_domain(spec, spec.default_value)) {
    throw Error(ErrorCode::DefaultOutOfDomain,
                "default " + format_value(spec.default_value) + " lies outside the domain of '" + name + "'",
                default_path);
  }
  return spec;
}

}  // namespace

std::string_view to_string(InputType t) {
  switch (t) {
    case InputType::image: return "image";
    case InputType::text: return "text";
    case InputType::tabular: return "tabular";
  }
  return "image";
}

std::string_view to_string(ParamKind k) {
  switch (k) {
    case ParamKind::continuous_linear: return "continuous_linear";
    case ParamKind::continuous_log: return "continuous_log";
    case ParamKind::integer: return "integer";
    case ParamKind::categorical: return "categorical";
  }
  return "continuous_linear";
}

std::string_view to_string(Flexibility f) { return f == Flexibility::fixed ? "fixed" : "tunable"; }

std::optional<InputType> parse_input_type(std::string_view token) {
  for (auto t : {InputType::image, InputType::text, InputType::tabular}) {
    if (to_string(t) == token) return t;
  }
  return std::nullopt;
}

std::optional<ParamKind> parse_param_kind(std::string_view token) {
  for (auto k : {ParamKind::continuous_linear, ParamKind::continuous_log, ParamKind::integer,
                 ParamKind::categorical}) {
    if (to_string(k) == token) return k;
  }
  return std::nullopt;
}

std::optional<Flexibility> parse_flexibility(std::string_view token) {
  if (token == "fixed") return Flexibility::fixed;
  if (token == "tunable") return Flexibility::tunable;
  return std::nullopt;
}

std::string canonical_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string canonical_token(std::string_view s) {
  std::string out = canonical_text(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
  });
  return out;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  const auto head = s.front();
  if (!((head >= 'a' && head <= 'z') || head == '_')) return false;
  return std::all_of(s.begin() + 1, s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

DataCard canonicalize(DataCard card) {
  card.name = canonical_text(card.name);
  if (auto* classes = std::get_if<std::vector<std::string>>(&card.label_space)) {
    for (auto& label : *classes) label = canonical_token(label);
  } else {
    auto& prose = std::get<std::string>(card.label_space);
    prose = canonical_text(prose);
  }
  card.task_description = canonical_text(card.task_description);
  for (auto& metric : card.eval_metrics) metric = canonical_text(metric);
  return card;
}

ModelCard canonicalize(ModelCard card) {
  card.name = canonical_text(card.name);
  card.structure = canonical_text(card.structure);
  card.description = canonical_text(card.description);
  HyperParamSpace space;
  for (auto& [key, spec] : card.arch_hparams) {
    auto name = canonical_token(key);
    spec.name = name;
    for (auto& category : spec.categories) category = canonical_text(category);
    if (auto* s = std::get_if<std::string>(&spec.default_value)) *s = canonical_text(*s);
    space.insert_or_assign(std::move(name), std::move(spec));
  }
  card.arch_hparams = std::move(space);
  return card;
}

DataCard data_card_from_json(const json& j, const std::string& path) {
  check_keys(j, path, {"name", "input_type", "label_space", "task_description", "eval_metrics"}, {"scale"});
  DataCard card;
  card.name = require_string(j["name"], join_path(path, "name"));

  const auto type_path = join_path(path, "input_type");
  const auto type = parse_input_type(canonical_token(require_string(j["input_type"], type_path)));
  if (!type) schema_error(type_path, "input_type must be one of image, text, tabular");
  card.input_type = *type;

  const auto labels_path = join_path(path, "label_space");
  const json& labels = j["label_space"];
  if (labels.is_string()) {
    card.label_space = labels.get<std::string>();
  } else if (labels.is_array()) {
    std::vector<std::string> classes;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      classes.push_back(require_string(labels[i], index_path(labels_path, i)));
    }
    card.label_space = std::move(classes);
  } else {
    schema_error(labels_path, "label_space must be a string or an array of strings");
  }

  if (j.contains("scale")) {
    const auto scale_path = join_path(path, "scale");
    if (!j["scale"].is_number_integer()) schema_error(scale_path, "scale must be an integer");
    card.scale = j["scale"].get<std::int64_t>();
  }
  card.task_description = require_string(j["task_description"], join_path(path, "task_description"));

  const auto metrics_path = join_path(path, "eval_metrics");
  const json& metrics = j["eval_metrics"];
  if (!metrics.is_array()) schema_error(metrics_path, "eval_metrics must be an array");
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    card.eval_metrics.push_back(require_string(metrics[i], index_path(metrics_path, i)));
  }

  card = canonicalize(std::move(card));
  check_data_card(card, path);
  return card;
}

ModelCard model_card_from_json(const json& j, const std::string& path) {
  check_keys(j, path, {"name", "structure", "description", "arch_hparams"});
  ModelCard card;
  card.name = canonical_text(require_string(j["name"], join_path(path, "name")));
  if (card.name.empty()) schema_error(join_path(path, "name"), "name must be non-empty");
  card.structure = canonical_text(require_string(j["structure"], join_path(path, "structure")));
  card.description = canonical_text(require_string(j["description"], join_path(path, "description")));

  const auto hp_path = join_path(path, "arch_hparams");
  const json& hparams = j["arch_hparams"];
  if (!hparams.is_object()) schema_error(hp_path, "arch_hparams must be an object");
  for (const auto& [raw_name, body] : hparams.items()) {
    const auto name = canonical_token(raw_name);
    const auto spec_path = join_path(hp_path, raw_name);
    if (!is_identifier(name)) schema_error(spec_path, "hyperparameter names must be snake_case identifiers");
    if (card.arch_hparams.contains(name)) schema_error(spec_path, "duplicate hyperparameter '" + name + "'");
    card.arch_hparams.emplace(name, spec_from_json(name, body, spec_path));
  }
  return card;
}

DataCard parse_data_card(std::string_view document) { return data_card_from_json(parse_json(document)); }

ModelCard parse_model_card(std::string_view document) { return model_card_from_json(parse_json(document)); }

json to_json(const DataCard& card) {
  json j = json::object();
  j["name"] = card.name;
  j["input_type"] = std::string(to_string(card.input_type));
  if (const auto* classes = std::get_if<std::vector<std::string>>(&card.label_space)) {
    j["label_space"] = *classes;
  } else {
    j["label_space"] = std::get<std::string>(card.label_space);
  }
  if (card.scale) j["scale"] = *card.scale;
  j["task_description"] = card.task_description;
  j["eval_metrics"] = card.eval_metrics;
  return j;
}

json to_json(const HyperParamSpec& spec) {
  json j = json::object();
  j["kind"] = std::string(to_string(spec.kind));
  if (spec.kind == ParamKind::categorical) {
    j["domain"] = spec.categories;
  } else if (spec.kind == ParamKind::integer) {
    j["domain"] = {static_cast<std::int64_t>(spec.min), static_cast<std::int64_t>(spec.max)};
  } else {
    j["domain"] = {spec.min, spec.max};
  }
  j["default"] = to_json(spec.default_value);
  j["flexibility"] = std::string(to_string(spec.flexibility));
  return j;
}

json to_json(const ModelCard& card) {
  json j = json::object();
  j["name"] = card.name;
  j["structure"] = card.structure;
  j["description"] = card.description;
  json hparams = json::object();
  for (const auto& [name, spec] : card.arch_hparams) hparams[name] = to_json(spec);
  j["arch_hparams"] = std::move(hparams);
  return j;
}

std::string serialize(const DataCard& card) { return to_json(card).dump(2) + "\n"; }
std::string serialize(const ModelCard& card) { return to_json(card).dump(2) + "\n"; }

json to_json(const ParamValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

json config_to_json(const HyperParamConfig& config) {
  json j = json::object();
  for (const auto& [key, value] : config) j[key] = to_json(value);
  return j;
}

HyperParamConfig config_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) schema_error(path, "config must be an object");
  HyperParamConfig config;
  for (const auto& [key, value] : j.items()) {
    const auto value_path = join_path(path, key);
    if (value.is_number_integer()) {
      config.emplace(key, value.get<std::int64_t>());
    } else if (value.is_number_float()) {
      config.emplace(key, value.get<double>());
    } else if (value.is_string()) {
      config.emplace(key, value.get<std::string>());
    } else {
      schema_error(value_path, "config values must be numbers or strings");
    }
  }
  return config;
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), end);
}

std::string format_value(const ParamValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
  return std::get<std::string>(v);
}

std::optional<double> numeric_value(const ParamValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::nullopt;
}

ValidationReport validate_config(const HyperParamConfig& config, const HyperParamSpace& space) {
  ValidationReport report;
  for (const auto& [key, value] : config) {
    const auto it = space.find(key);
    if (it == space.end()) {
      report.violations.push_back({key, "no such hyperparameter"});
      continue;
    }
    const auto& spec = it->second;
    switch (spec.kind) {
      case ParamKind::categorical:
        if (!std::holds_alternative<std::string>(value)) {
          report.violations.push_back({key, "kind mismatch: expected a category string"});
        } else if (!value_in_domain(spec, value)) {
          report.violations.push_back({key, "'" + std::get<std::string>(value) + "' is not an allowed category"});
        }
        break;
      case ParamKind::integer:
        if (!std::holds_alternative<std::int64_t>(value)) {
          report.violations.push_back({key, "kind mismatch: expected an integer"});
        } else if (!value_in_domain(spec, value)) {
          report.violations.push_back({key, format_value(value) + " outside [" + format_number(spec.min) + ", " +
                                                format_number(spec.max) + "]"});
        }
        break;
      case ParamKind::continuous_linear:
      case ParamKind::continuous_log:
        if (!numeric_value(value)) {
          report.violations.push_back({key, "kind mismatch: expected a number"});
        } else if (!std::isfinite(*numeric_value(value))) {
          report.violations.push_back({key, "value is not finite"});
        } else if (!value_in_domain(spec, value)) {
          report.violations.push_back({key, format_value(value) + " outside [" + format_number(spec.min) + ", " +
                                                format_number(spec.max) + "]"});
        }
        break;
    }
  }
  return report;
}

HyperParamConfig coerce_config(const HyperParamConfig& config, const HyperParamSpace& space) {
  HyperParamConfig out;
  for (const auto& [key, value] : config) {
    const auto it = space.find(key);
    if (it == space.end()) continue;
    ParamValue v = value;
    switch (it->second.kind) {
      case ParamKind::continuous_linear:
      case ParamKind::continuous_log:
        if (const auto* i = std::get_if<std::int64_t>(&value)) v = static_cast<double>(*i);
        break;
      case ParamKind::integer:
        if (const auto* d = std::get_if<double>(&value); d && is_integral(*d)) v = static_cast<std::int64_t>(*d);
        break;
      case ParamKind::categorical:
        break;
    }
    out.emplace(key, std::move(v));
  }
  return out;
}

HyperParamConfig default_config(const HyperParamSpace& space) {
  HyperParamConfig config;
  for (const auto& [name, spec] : space) config.emplace(name, spec.default_value);
  return config;
}

ModelCard with_defaults(ModelCard model, const HyperParamConfig& config) {
  for (const auto& [key, value] : coerce_config(config, model.arch_hparams)) {
    model.arch_hparams.at(key).default_value = value;
  }
  return model;
}

}  // namespace automl
