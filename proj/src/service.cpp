#include "automl/service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <regex>

// Must follow the Eigen includes (resolv.h `_res` macro).
#include <httplib.h>

namespace automl {
namespace {

Reply ok(json body, int status = 200) { return {status, std::move(body)}; }

Reply fail(const Error& e) { return {http_status(e.code()), error_body(e)}; }

json to_json(const UserRequest& r) { return json{{"kind", std::string(to_string(r.kind))}, {"payload", r.payload()}}; }

json constraints_json(const std::vector<Constraint>& cs) {
  json out = json::array();
  for (const auto& c : cs) out.push_back(format_constraint(c));
  return out;
}

json entry_json(const HistoryEntry& h) {
  return json{{"request", h.request ? to_json(*h.request) : json(nullptr)},
              {"recommendation", to_json(h.recommendation)},
              {"predicted_log", to_json(h.predicted_log)},
              {"tune_result", to_json(h.tune_result)}};
}

const json& require_object(const json& body) {
  if (!body.is_object()) throw Error(ErrorCode::SchemaViolation, "request body must be an object");
  return body;
}

void reject_unknown(const json& body, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, _] : body.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::SchemaViolation, "unknown field '" + key + "'", key);
    }
  }
}

std::int64_t now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// Options shared by /recommend and /requests; absent keys keep the session's values.
void read_options(const json& body, Session& s) {
  if (body.contains("backend")) {
    if (!body["backend"].is_string() || (body["backend"] != "mock" && body["backend"] != "http")) {
      throw Error(ErrorCode::SchemaViolation, "backend must be \"mock\" or \"http\"", "backend");
    }
    s.backend = body["backend"].get<std::string>();
  }
  if (body.contains("k")) {
    if (!body["k"].is_number_integer() || body["k"].get<std::int64_t>() < 1) {
      throw Error(ErrorCode::SchemaViolation, "k must be a positive integer", "k");
    }
    s.k = body["k"].get<int>();
  }
  if (body.contains("tau")) {
    if (!body["tau"].is_number() || body["tau"].get<double>() < 0.0 || body["tau"].get<double>() >= 1.0) {
      throw Error(ErrorCode::SchemaViolation, "tau must be a number in [0, 1)", "tau");
    }
    s.tau = body["tau"].get<double>();
  }
  if (body.contains("budget")) {
    if (!body["budget"].is_number_integer() || body["budget"].get<std::int64_t>() < 1) {
      throw Error(ErrorCode::SchemaViolation, "budget must be a positive integer", "budget");
    }
    s.budget = body["budget"].get<int>();
  }
}

std::vector<UserRequest> constraint_requests(const std::vector<Constraint>& cs) {
  std::vector<UserRequest> out;
  for (const auto& c : cs) out.push_back(UserRequest::of_constraint(c));
  return out;
}

}  // namespace

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::empty: return "empty";
    case SessionState::cards_set: return "cards_set";
    case SessionState::recommended: return "recommended";
  }
  return "empty";
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession: return 404;
    case ErrorCode::WrongState:
    case ErrorCode::Busy:
    case ErrorCode::RegressionRejected: return 409;
    case ErrorCode::AllCandidatesFiltered: return 422;
    case ErrorCode::EndpointUnreachable:
    case ErrorCode::AuthFailure:
    case ErrorCode::BudgetExceeded:
    case ErrorCode::BackendError:
    case ErrorCode::MissingSection:
    case ErrorCode::EmptyHyperparameters:
    case ErrorCode::BadLogLine:
    case ErrorCode::NonMonotoneEpochs:
    case ErrorCode::EmptyLog: return 502;
    case ErrorCode::IoFailure:
    case ErrorCode::CorruptRegistry:
    case ErrorCode::DivergedTraining: return 500;
    default: return 400;
  }
}

json error_body(const Error& e) {
  json err{{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
  if (!e.field().empty()) err["field"] = e.field();
  return json{{"error", std::move(err)}};
}

json to_json(const PromptParagraph& p) {
  json spans = json::array();
  for (const auto& s : p.spans) spans.push_back({{"field", s.field}, {"begin", s.begin}, {"end", s.end}});
  return json{{"text", p.text}, {"spans", std::move(spans)}};
}

json to_json(const TrainingLog& log) {
  json out = json::array();
  for (const auto& e : log.entries) {
    out.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"val_metric", e.val_metric}});
  }
  return out;
}

std::string new_session_id() {
  static thread_local std::random_device device;
  char buf[33];
  for (int i = 0; i < 4; ++i) std::snprintf(buf + 8 * i, 9, "%08x", static_cast<unsigned>(device()));
  return std::string(buf, 32);
}

std::unique_ptr<Backend> ServiceCore::default_backend(const std::string& choice, int budget) {
  if (choice == "http") return HttpBackend::from_env(budget);
  return std::make_unique<MockBackend>();
}

ServiceCore::ServiceCore(Registry registry, std::optional<std::filesystem::path> registry_dir,
                         std::shared_ptr<const Embedder> embedder, BackendFactory backends)
    : registry_(std::move(registry)),
      registry_dir_(std::move(registry_dir)),
      embedder_(std::move(embedder)),
      backends_(std::move(backends)) {}

std::shared_ptr<ServiceCore::Slot> ServiceCore::find(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no session '" + id + "'");
  return it->second;
}

Registry ServiceCore::registry_snapshot() const {
  std::shared_lock lock(registry_mutex_);
  return registry_;
}

std::size_t ServiceCore::session_count() const {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.size();
}

template <typename F>
Reply ServiceCore::with_session(const std::string& id, F&& f) {
  try {
    const auto slot = find(id);
    std::unique_lock lock(slot->busy, std::try_to_lock);
    if (!lock.owns_lock()) throw Error(ErrorCode::Busy, "session '" + id + "' is handling another request");
    // Steps run on a draft that is committed only on success.
    Session draft = slot->session;
    auto reply = f(draft);
    slot->session = std::move(draft);
    return reply;
  } catch (const Error& e) {
    return fail(e);
  }
}

Reply ServiceCore::create_session() {
  auto slot = std::make_shared<Slot>();
  slot->session.created_at = now_seconds();
  std::lock_guard lock(sessions_mutex_);
  std::string id;
  do {
    id = new_session_id();
  } while (sessions_.count(id));
  slot->session.id = id;
  sessions_.emplace(id, std::move(slot));
  return ok({{"id", id}, {"state", "empty"}}, 201);
}

Reply ServiceCore::submit_cards(const std::string& id, const json& body) {
  return with_session(id, [&](Session& s) {
    if (s.state == SessionState::recommended) {
      throw Error(ErrorCode::WrongState, "cards are fixed once a recommendation exists");
    }
    require_object(body);
    reject_unknown(body, {"data_card", "model_card"});
    if (!body.contains("data_card")) throw Error(ErrorCode::SchemaViolation, "missing field 'data_card'", "data_card");
    if (!body.contains("model_card")) {
      throw Error(ErrorCode::SchemaViolation, "missing field 'model_card'", "model_card");
    }
    s.data_card = data_card_from_json(body["data_card"], "data_card");
    s.model_card = model_card_from_json(body["model_card"], "model_card");
    s.prompt = compose_prompt(*s.data_card, *s.model_card);
    s.constraints.clear();
    s.state = SessionState::cards_set;
    return ok({{"state", std::string(to_string(s.state))}, {"prompt", to_json(*s.prompt)}});
  });
}

Reply ServiceCore::recommend(const std::string& id, const json& body) {
  return with_session(id, [&](Session& s) {
    if (s.state == SessionState::empty) throw Error(ErrorCode::WrongState, "submit cards before asking to recommend");
    require_object(body);
    reject_unknown(body, {"backend", "k", "tau", "budget"});
    read_options(body, s);

    const auto registry = registry_snapshot();
    const auto seed = automl::recommend(*s.data_card, *s.model_card, registry, *embedder_, s.k, s.tau);
    const auto backend = backends_(s.backend, s.budget);
    auto tuned = tune(seed, *s.data_card, *s.model_card, *backend, s.constraints, s.budget);

    HistoryEntry entry;
    entry.recommendation = seed;
    entry.recommendation.config = tuned.best_config;
    entry.recommendation.rationale += "; tuned over " + std::to_string(tuned.queries_used) + " predicted logs";
    entry.predicted_log = tuned.best_log;
    entry.tune_result = std::move(tuned);
    s.prompt = compose_prompt(*s.data_card, *s.model_card, constraint_requests(s.constraints));
    s.history.push_back(std::move(entry));
    s.state = SessionState::recommended;

    const auto& h = s.history.back();
    return ok({{"state", std::string(to_string(s.state))},
               {"prompt", to_json(*s.prompt)},
               {"recommendation", to_json(h.recommendation)},
               {"predicted_log", to_json(h.predicted_log)},
               {"tune_result", to_json(h.tune_result)}});
  });
}

Reply ServiceCore::post_request(const std::string& id, const json& body) {
  return with_session(id, [&](Session& s) {
    if (s.state != SessionState::recommended) {
      throw Error(ErrorCode::WrongState, "additional requests need a recommendation first");
    }
    require_object(body);
    reject_unknown(body, {"text", "backend", "budget"});
    if (!body.contains("text") || !body["text"].is_string() || canonical_text(body["text"].get<std::string>()).empty()) {
      throw Error(ErrorCode::SchemaViolation, "text must be a non-empty string", "text");
    }
    read_options(body, s);

    const auto request = classify_request(body["text"].get<std::string>());
    if (request.kind == RequestKind::constraint) s.constraints.push_back(request.constraint);

    const auto& last = s.history.back();
    const auto followup = compose_followup(*s.prompt, last.predicted_log, request);
    // Budget plus the follow-up query.
    const auto backend = backends_(s.backend, s.budget + 1);
    const auto response = parse_response(backend->complete(followup));

    Recommendation seed = last.recommendation;
    seed.source = RecommendationSource::backend;
    for (const auto& [k, v] : coerce_config(response.hyperparameters, s.model_card->arch_hparams)) {
      if (s.model_card->arch_hparams.at(k).flexibility == Flexibility::tunable) seed.config[k] = v;
    }
    if (!validate_config(seed.config, s.model_card->arch_hparams).ok()) seed.config = last.recommendation.config;
    auto tuned = tune(seed, *s.data_card, *s.model_card, *backend, s.constraints, s.budget);

    HistoryEntry entry;
    entry.request = request;
    entry.recommendation = seed;
    entry.recommendation.config = tuned.best_config;
    entry.recommendation.rationale = "revised for " + std::string(to_string(request.kind)) + " '" +
                                     request.payload() + "'; tuned over " + std::to_string(tuned.queries_used) +
                                     " predicted logs";
    entry.predicted_log = tuned.best_log;
    entry.tune_result = std::move(tuned);
    s.prompt = followup;
    s.history.push_back(std::move(entry));

    const auto& h = s.history.back();
    return ok({{"state", std::string(to_string(s.state))},
               {"request", to_json(request)},
               {"prompt", to_json(*s.prompt)},
               {"recommendation", to_json(h.recommendation)},
               {"predicted_log", to_json(h.predicted_log)},
               {"tune_result", to_json(h.tune_result)}});
  });
}

Reply ServiceCore::get_session(const std::string& id) {
  return with_session(id, [&](Session& s) {
    json history = json::array();
    for (const auto& h : s.history) history.push_back(entry_json(h));
    return ok({{"id", s.id},
               {"state", std::string(to_string(s.state))},
               {"data_card", s.data_card ? to_json(*s.data_card) : json(nullptr)},
               {"model_card", s.model_card ? to_json(*s.model_card) : json(nullptr)},
               {"prompt", s.prompt ? to_json(*s.prompt) : json(nullptr)},
               {"constraints", constraints_json(s.constraints)},
               {"backend", s.backend},
               {"history", std::move(history)},
               {"created_at", s.created_at}});
  });
}

Reply ServiceCore::list_records() { return ok(to_json(registry_snapshot())); }

Reply ServiceCore::add_record(const json& body) {
  try {
    require_object(body);
    reject_unknown(body, {"record", "model_card"});
    if (!body.contains("record")) throw Error(ErrorCode::SchemaViolation, "missing field 'record'", "record");
    auto record = record_from_json(body["record"], "record");
    std::unique_lock lock(registry_mutex_);
    Registry next = registry_;
    if (body.contains("model_card")) next = add_model_card(std::move(next), model_card_from_json(body["model_card"], "model_card"));
    next = automl::add_record(std::move(next), record);
    if (registry_dir_) save_registry(next, *registry_dir_);
    registry_ = std::move(next);
    return ok({{"record", to_json(record)}}, 201);
  } catch (const Error& e) {
    return fail(e);
  }
}

Reply ServiceCore::health() const { return ok({{"status", "ok"}}); }

Reply ServiceCore::handle(const std::string& method, const std::string& path, const std::string& body_text) {
  static const std::regex session_path(R"(^/v1/sessions/([0-9a-f]+)(/(cards|recommend|requests))?$)");
  json body = json::object();
  if (method == "POST" && !body_text.empty()) {
    try {
      body = json::parse(body_text);
    } catch (const json::exception& e) {
      return fail(Error(ErrorCode::MalformedDocument, std::string("request body is not valid JSON: ") + e.what()));
    }
  }
  const auto not_allowed = [] {
    return Reply{405, {{"error", {{"code", "MethodNotAllowed"}, {"message", "method not allowed"}}}}};
  };

  if (path == "/v1/health") return method == "GET" ? health() : not_allowed();
  if (path == "/v1/sessions") return method == "POST" ? create_session() : not_allowed();
  if (path == "/v1/registry/records") {
    if (method == "GET") return list_records();
    if (method == "POST") return add_record(body);
    return not_allowed();
  }
  std::smatch m;
  if (std::regex_match(path, m, session_path)) {
    const std::string id = m[1];
    const std::string action = m[3];
    if (action.empty()) return method == "GET" ? get_session(id) : not_allowed();
    if (method != "POST") return not_allowed();
    if (action == "cards") return submit_cards(id, body);
    if (action == "recommend") return recommend(id, body);
    return post_request(id, body);
  }
  if (path.rfind("/v1/sessions/", 0) == 0) {
    return fail(Error(ErrorCode::UnknownSession, "no session at '" + path + "'"));
  }
  return Reply{404, {{"error", {{"code", "NotFound"}, {"message", "no route for " + path}}}}};
}

void bind_routes(httplib::Server& server, ServiceCore& core, const std::optional<std::filesystem::path>& static_dir) {
  const auto dispatch = [&core](const httplib::Request& req, httplib::Response& res) {
    const auto reply = core.handle(req.method, req.path, req.body);
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };
  server.Get(R"(/v1/.*)", dispatch);
  server.Post(R"(/v1/.*)", dispatch);
  server.Put(R"(/v1/.*)", dispatch);
  server.Delete(R"(/v1/.*)", dispatch);
  if (static_dir) server.set_mount_point("/", static_dir->string());
}

void serve(ServiceCore& core, const std::string& host, int port,
           const std::optional<std::filesystem::path>& static_dir) {
  httplib::Server server;
  bind_routes(server, core, static_dir);
  if (!server.listen(host, port)) {
    throw Error(ErrorCode::IoFailure, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace automl
