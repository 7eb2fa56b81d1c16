#include "automl/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "automl/bench.hpp"
#include "automl/composer.hpp"
#include "automl/oracle.hpp"
#include "automl/registry.hpp"
#include "automl/service.hpp"
#include "automl/transfer.hpp"
#include "automl/tuner.hpp"

namespace automl {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBackend = 3;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::EndpointUnreachable:
    case ErrorCode::AuthFailure:
    case ErrorCode::BudgetExceeded:
    case ErrorCode::BackendError:
    case ErrorCode::MissingSection:
    case ErrorCode::EmptyHyperparameters:
    case ErrorCode::IoFailure:
    case ErrorCode::CorruptRegistry:
      return kExitBackend;
    default:
      return kExitDomain;
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool looks_like_model_card(const std::string& document) {
  try {
    const auto j = json::parse(document);
    return j.is_object() && j.contains("arch_hparams");
  } catch (const json::exception&) {
    return false;
  }
}

std::unique_ptr<Backend> make_backend(const std::string& choice, int budget) {
  return ServiceCore::default_backend(choice, budget);
}

Registry open_registry(const std::string& dir) { return dir.empty() ? Registry{} : load_registry(dir); }

// Transfer first; with no neighbor, the backend's reply to the plain prompt.
Recommendation recommend_with_fallback(const DataCard& data, const ModelCard& model, const Registry& registry,
                                       Backend& backend, int k, double tau) {
  const HashEmbedder embedder;
  auto rec = recommend(data, model, registry, embedder, k, tau);
  if (rec.source != RecommendationSource::default_config) return rec;
  const auto response = parse_response(backend.complete(compose_prompt(data, model)));
  auto config = default_config(model.arch_hparams);
  for (const auto& [key, value] : coerce_config(response.hyperparameters, model.arch_hparams)) config[key] = value;
  if (!validate_config(config, model.arch_hparams).ok()) return rec;
  return {std::move(config), RecommendationSource::backend, {}, "no registry neighbor; suggested by " + backend.id()};
}

struct Options {
  std::string data;
  std::string model;
  std::string registry;
  std::string backend = "mock";
  int k = kDefaultNeighbors;
  double tau = kDefaultThreshold;
  int budget = kDefaultBudget;
  std::vector<std::string> requests;
  int port = 8080;
  std::string host = "0.0.0.0";
  std::string static_dir;
  int seeds = 10;
  int n_known = 6;
  bool json_out = false;
  std::string out_path;
  std::string card_path;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"AutoML pipeline: cards, prompts, transfer, tuning, benchmark and service", "automl-gpt"};
  app.require_subcommand(1);
  Options o;

  auto* validate = app.add_subcommand("validate", "Parse and validate a data or model card");
  validate->add_option("card", o.card_path, "Card document")->required();

  auto* compose = app.add_subcommand("compose", "Print the prompt paragraph for a pair of cards");
  auto* recommend_cmd = app.add_subcommand("recommend", "Recommend a configuration by transfer");
  auto* tune_cmd = app.add_subcommand("tune", "Recommend, then tune against predicted logs");
  for (auto* cmd : {compose, recommend_cmd, tune_cmd}) {
    cmd->add_option("--data", o.data, "Data card")->required();
    cmd->add_option("--model", o.model, "Model card")->required();
  }
  compose->add_option("--request", o.requests, "Additional request (repeatable)");
  for (auto* cmd : {recommend_cmd, tune_cmd}) {
    cmd->add_option("--registry", o.registry, "Registry directory");
    cmd->add_option("--backend", o.backend, "Backend")->check(CLI::IsMember({"mock", "http"}));
    cmd->add_option("--k", o.k, "Neighbor count")->check(CLI::PositiveNumber);
    cmd->add_option("--tau", o.tau, "Similarity threshold")->check(CLI::Range(0.0, 0.999999));
  }
  tune_cmd->add_option("--budget", o.budget, "Backend query budget")->check(CLI::PositiveNumber);
  tune_cmd->add_option("--request", o.requests, "Constraint or request (repeatable)");

  auto* bench = app.add_subcommand("bench", "Run the unseen-dataset benchmark");
  bench->add_option("--seeds", o.seeds, "Number of trials (seeds 1..N)")->check(CLI::PositiveNumber);
  bench->add_option("--n-known", o.n_known, "Known families per trial")->check(CLI::Range(2, 1000));
  bench->add_flag("--json", o.json_out, "Print the JSON report instead of the table");
  bench->add_option("--out", o.out_path, "Also write the JSON report here");

  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
  serve_cmd->add_option("--port", o.port, "Port")->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--host", o.host, "Bind address");
  serve_cmd->add_option("--registry", o.registry, "Registry directory");
  serve_cmd->add_option("--backend", o.backend, "Default backend")->check(CLI::IsMember({"mock", "http"}));
  serve_cmd->add_option("--static", o.static_dir, "Directory served at /");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*validate) {
      const auto document = read_text(o.card_path);
      if (looks_like_model_card(document)) {
        parse_model_card(document);
      } else {
        parse_data_card(document);
      }
      err << "ok\n";
      return kExitOk;
    }

    if (*bench) {
      std::vector<std::uint64_t> seeds;
      for (int i = 1; i <= o.seeds; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
      const auto report = run_unseen_benchmark(o.n_known, o.seeds, seeds);
      if (o.json_out) {
        out << to_json(report).dump(2) << "\n";
      } else {
        out << format_table(report);
      }
      if (!o.out_path.empty()) {
        std::ofstream file(o.out_path, std::ios::binary | std::ios::trunc);
        if (!file) throw Error(ErrorCode::IoFailure, "cannot write " + o.out_path);
        file << to_json(report).dump(2) << "\n";
      }
      return kExitOk;
    }

    if (*serve_cmd) {
      auto core = ServiceCore(
          open_registry(o.registry), o.registry.empty() ? std::nullopt : std::optional<std::filesystem::path>(o.registry));
      err << "listening on " << o.host << ":" << o.port << "\n";
      serve(core, o.host, o.port,
            o.static_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(o.static_dir));
      return kExitOk;
    }

    const auto data = parse_data_card(read_text(o.data));
    const auto model = parse_model_card(read_text(o.model));

    if (*compose) {
      std::vector<UserRequest> requests;
      for (const auto& r : o.requests) requests.push_back(classify_request(r));
      out << compose_prompt(data, model, requests).text;
      return kExitOk;
    }

    const auto registry = open_registry(o.registry);
    auto backend = make_backend(o.backend, o.budget + 1);
    const auto rec = recommend_with_fallback(data, model, registry, *backend, o.k, o.tau);

    if (*recommend_cmd) {
      out << to_json(rec).dump(2) << "\n";
      return kExitOk;
    }

    std::vector<Constraint> constraints;
    for (const auto& r : o.requests) {
      const auto req = classify_request(r);
      if (req.kind == RequestKind::constraint) {
        constraints.push_back(req.constraint);
      } else {
        err << "note: '" << req.payload() << "' is not a constraint and does not steer tuning\n";
      }
    }
    const auto tuned = tune(rec, data, model, *backend, constraints, o.budget);
    out << json{{"recommendation", to_json(rec)},
                {"tune_result", to_json(tuned)},
                {"predicted_log", to_json(tuned.best_log)}}
               .dump(2)
        << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what();
    if (!e.field().empty()) err << " (at " << e.field() << ")";
    err << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitBackend;
  }
}

}  // namespace automl
