#include "automl/registry.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "automl/error.hpp"

namespace automl {
namespace {

constexpr const char* kRegistryFile = "registry.json";
constexpr const char* kChecksumFile = "registry.sha256";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
  });
  return out;
}

bool same_key(const TuningRecord& a, const TuningRecord& b) {
  return a.model_card_name == b.model_card_name && lower(a.data_card.name) == lower(b.data_card.name);
}

bool dataset_less(const TuningRecord& a, const TuningRecord& b) {
  const auto la = lower(a.data_card.name);
  const auto lb = lower(b.data_card.name);
  if (la != lb) return la < lb;
  return a.model_card_name < b.model_card_name;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomically(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::grid_search: return "grid_search";
    case Provenance::manual: return "manual";
    case Provenance::backend: return "backend";
  }
  return "manual";
}

std::optional<Provenance> parse_provenance(std::string_view token) {
  for (auto p : {Provenance::grid_search, Provenance::manual, Provenance::backend}) {
    if (to_string(p) == token) return p;
  }
  return std::nullopt;
}

Registry add_model_card(Registry registry, ModelCard card) {
  auto name = card.name;
  registry.model_cards.insert_or_assign(std::move(name), std::move(card));
  return registry;
}

Registry add_record(Registry registry, TuningRecord record) {
  const auto model = registry.model_cards.find(record.model_card_name);
  if (model == registry.model_cards.end()) {
    throw Error(ErrorCode::UnknownModelCard, "no model card named '" + record.model_card_name + "'",
                "model_card_name");
  }
  const auto report = validate_config(record.config, model->second.arch_hparams);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw Error(ErrorCode::InvalidRecord, "config violates model card space: " + v.key + ": " + v.reason,
                "config." + v.key);
  }
  const auto& metrics = record.data_card.eval_metrics;
  if (std::find(metrics.begin(), metrics.end(), record.best_metric.name) == metrics.end()) {
    throw Error(ErrorCode::InvalidRecord,
                "best metric '" + record.best_metric.name + "' is not one of the data card's eval metrics",
                "best_metric.name");
  }
  if (!std::isfinite(record.best_metric.value)) {
    throw Error(ErrorCode::InvalidRecord, "best metric value is not finite", "best_metric.value");
  }

  auto& records = registry.records;
  const auto existing =
      std::find_if(records.begin(), records.end(), [&](const TuningRecord& r) { return same_key(r, record); });
  if (existing != records.end()) {
    if (record.best_metric.value < existing->best_metric.value) {
      throw Error(ErrorCode::RegressionRejected,
                  "stored " + existing->best_metric.name + " " + format_number(existing->best_metric.value) +
                      " beats new " + format_number(record.best_metric.value));
    }
    *existing = std::move(record);
  } else {
    records.push_back(std::move(record));
  }
  std::sort(records.begin(), records.end(), dataset_less);
  return registry;
}

std::vector<TuningRecord> query_records(const Registry& registry, std::string_view model_card_name) {
  std::vector<TuningRecord> out;
  for (const auto& r : registry.records) {
    if (r.model_card_name == model_card_name) out.push_back(r);
  }
  std::sort(out.begin(), out.end(), dataset_less);
  return out;
}

json to_json(const TuningRecord& record) {
  return json{{"data_card", to_json(record.data_card)},
              {"model_card_name", record.model_card_name},
              {"config", config_to_json(record.config)},
              {"best_metric", {{"name", record.best_metric.name}, {"value", record.best_metric.value}}},
              {"provenance", std::string(to_string(record.provenance))},
              {"created_at", record.created_at}};
}

TuningRecord record_from_json(const json& j, const std::string& path) {
  const auto at = [&](std::string_view key) { return path.empty() ? std::string(key) : path + "." + std::string(key); };
  if (!j.is_object()) throw Error(ErrorCode::SchemaViolation, "record must be an object", path);
  for (const auto& [key, _] : j.items()) {
    if (key != "data_card" && key != "model_card_name" && key != "config" && key != "best_metric" &&
        key != "provenance" && key != "created_at") {
      throw Error(ErrorCode::SchemaViolation, "unknown field '" + key + "'", at(key));
    }
  }
  for (auto key : {"data_card", "model_card_name", "config", "best_metric", "provenance", "created_at"}) {
    if (!j.contains(key)) throw Error(ErrorCode::SchemaViolation, std::string("missing field '") + key + "'", at(key));
  }
  TuningRecord r;
  r.data_card = data_card_from_json(j["data_card"], at("data_card"));
  if (!j["model_card_name"].is_string()) {
    throw Error(ErrorCode::SchemaViolation, "expected a string", at("model_card_name"));
  }
  r.model_card_name = canonical_text(j["model_card_name"].get<std::string>());
  r.config = config_from_json(j["config"], at("config"));
  const json& metric = j["best_metric"];
  if (!metric.is_object() || metric.size() != 2 || !metric.contains("name") || !metric.contains("value") ||
      !metric["name"].is_string() || !metric["value"].is_number()) {
    throw Error(ErrorCode::SchemaViolation, "best_metric must be {name, value}", at("best_metric"));
  }
  r.best_metric = {canonical_text(metric["name"].get<std::string>()), metric["value"].get<double>()};
  const auto provenance =
      j["provenance"].is_string() ? parse_provenance(j["provenance"].get<std::string>()) : std::nullopt;
  if (!provenance) throw Error(ErrorCode::SchemaViolation, "unknown provenance", at("provenance"));
  r.provenance = *provenance;
  if (!j["created_at"].is_number_integer()) {
    throw Error(ErrorCode::SchemaViolation, "created_at must be integer seconds", at("created_at"));
  }
  r.created_at = j["created_at"].get<std::int64_t>();
  return r;
}

json to_json(const Registry& registry) {
  json records = json::array();
  for (const auto& r : registry.records) records.push_back(to_json(r));
  json cards = json::object();
  for (const auto& [name, card] : registry.model_cards) cards[name] = to_json(card);
  return json{{"records", std::move(records)}, {"model_cards", std::move(cards)}};
}

Registry registry_from_json(const json& j) {
  if (!j.is_object() || !j.contains("records") || !j.contains("model_cards") || j.size() != 2 ||
      !j["records"].is_array() || !j["model_cards"].is_object()) {
    throw Error(ErrorCode::SchemaViolation, "registry must be {records: [...], model_cards: {...}}");
  }
  Registry registry;
  for (const auto& [name, card] : j["model_cards"].items()) {
    auto parsed = model_card_from_json(card, "model_cards." + name);
    if (parsed.name != name) {
      throw Error(ErrorCode::SchemaViolation, "model card key does not match its name", "model_cards." + name);
    }
    registry.model_cards.emplace(name, std::move(parsed));
  }
  const json& records = j["records"];
  for (std::size_t i = 0; i < records.size(); ++i) {
    registry = add_record(std::move(registry), record_from_json(records[i], "records[" + std::to_string(i) + "]"));
  }
  return registry;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1) {
    throw Error(ErrorCode::IoFailure, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

Registry load_registry(const std::filesystem::path& dir) {
  const auto data_path = dir / kRegistryFile;
  const auto sum_path = dir / kChecksumFile;
  std::error_code ec;
  if (!std::filesystem::exists(data_path, ec)) {
    if (std::filesystem::exists(sum_path, ec)) {
      throw Error(ErrorCode::CorruptRegistry, "checksum present but " + data_path.string() + " is missing");
    }
    return {};
  }
  if (!std::filesystem::exists(sum_path, ec)) {
    throw Error(ErrorCode::CorruptRegistry, "missing " + sum_path.string());
  }
  const auto bytes = read_file(data_path);
  const auto sum_line = read_file(sum_path);
  const auto expected = sum_line.substr(0, sum_line.find_first_of(" \n"));
  if (expected != sha256_hex(bytes)) {
    throw Error(ErrorCode::CorruptRegistry, "checksum mismatch for " + data_path.string());
  }
  try {
    return registry_from_json(json::parse(bytes));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptRegistry, std::string("unreadable registry: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptRegistry, std::string("invalid registry: ") + e.what(), e.field());
  }
}

void save_registry(const Registry& registry, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  const auto bytes = to_json(registry).dump(2) + "\n";
  write_atomically(dir / kRegistryFile, bytes);
  write_atomically(dir / kChecksumFile, sha256_hex(bytes) + "  " + kRegistryFile + "\n");
}

}  // namespace automl
