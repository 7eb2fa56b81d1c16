#pragma once

// Session-oriented HTTP API over the pipeline. ServiceCore holds all the
// behavior and speaks JSON in, (status, JSON) out; bind_routes() attaches it
// to a cpp-httplib server.
//
// Endpoints:
//   POST /v1/sessions                  -> 201 {id, state}
//   POST /v1/sessions/{id}/cards       {data_card, model_card} -> {state, prompt}
//   POST /v1/sessions/{id}/recommend   {backend?, k?, tau?, budget?}
//        -> {state, prompt, recommendation, predicted_log, tune_result}
//   POST /v1/sessions/{id}/requests    {text} -> {state, request, prompt, recommendation, predicted_log, tune_result}
//   GET  /v1/sessions/{id}
//   GET  /v1/registry/records
//   POST /v1/registry/records          {record, model_card?} -> 201 {record}
//   GET  /v1/health                    -> {status: "ok"}
// Errors: {"error": {"code", "message", "field"?}}.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "automl/composer.hpp"
#include "automl/encoder.hpp"
#include "automl/error.hpp"
#include "automl/oracle.hpp"
#include "automl/registry.hpp"
#include "automl/transfer.hpp"
#include "automl/tuner.hpp"

namespace httplib {
class Server;
}

namespace automl {

enum class SessionState { empty, cards_set, recommended };
std::string_view to_string(SessionState s);

struct HistoryEntry {
  std::optional<UserRequest> request;  // absent for the first recommendation
  Recommendation recommendation;
  TrainingLog predicted_log;
  TuneResult tune_result;
};

struct Session {
  std::string id;
  SessionState state = SessionState::empty;
  std::optional<DataCard> data_card;
  std::optional<ModelCard> model_card;
  std::optional<PromptParagraph> prompt;
  std::vector<Constraint> constraints;
  std::string backend = "mock";
  int k = kDefaultNeighbors;
  double tau = kDefaultThreshold;
  int budget = kDefaultBudget;
  std::vector<HistoryEntry> history;
  std::int64_t created_at = 0;
};

struct Reply {
  int status = 200;
  json body;
};

/// HTTP status class for a library error.
int http_status(ErrorCode code);
json error_body(const Error& e);

json to_json(const PromptParagraph& p);
json to_json(const TrainingLog& log);

/// 32 lowercase hex digits from std::random_device.
std::string new_session_id();

class ServiceCore {
 public:
  using BackendFactory = std::function<std::unique_ptr<Backend>(const std::string& choice, int budget)>;

  /// Mock for "mock", HttpBackend::from_env for "http".
  static std::unique_ptr<Backend> default_backend(const std::string& choice, int budget);

  /// With `registry_dir` set, registry writes are persisted there.
  explicit ServiceCore(Registry registry, std::optional<std::filesystem::path> registry_dir = std::nullopt,
                       std::shared_ptr<const Embedder> embedder = std::make_shared<HashEmbedder>(),
                       BackendFactory backends = &ServiceCore::default_backend);

  Reply create_session();
  Reply submit_cards(const std::string& id, const json& body);
  Reply recommend(const std::string& id, const json& body);
  Reply post_request(const std::string& id, const json& body);
  Reply get_session(const std::string& id);
  Reply list_records();
  Reply add_record(const json& body);
  Reply health() const;

  /// Parses `body_text` and dispatches by method and path; used by the
  /// httplib wiring and handy for tests.
  Reply handle(const std::string& method, const std::string& path, const std::string& body_text);

  std::size_t session_count() const;

 private:
  struct Slot {
    std::mutex busy;
    Session session;
  };

  std::shared_ptr<Slot> find(const std::string& id) const;
  Registry registry_snapshot() const;
  template <typename F>
  Reply with_session(const std::string& id, F&& f);

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  mutable std::shared_mutex registry_mutex_;
  Registry registry_;
  std::optional<std::filesystem::path> registry_dir_;
  std::shared_ptr<const Embedder> embedder_;
  BackendFactory backends_;
};

/// Registers every endpoint; `static_dir`, when set, is mounted at "/".
void bind_routes(httplib::Server& server, ServiceCore& core,
                 const std::optional<std::filesystem::path>& static_dir = std::nullopt);

/// Blocks serving on host:port until the server stops.
void serve(ServiceCore& core, const std::string& host, int port,
           const std::optional<std::filesystem::path>& static_dir = std::nullopt);

}  // namespace automl
