// Acceptance run: one PASS/FAIL line per primary criterion. Exit status is
// non-zero when any criterion fails.

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "automl/bench.hpp"
#include "automl/composer.hpp"
#include "automl/error.hpp"
#include "automl/oracle.hpp"
#include "automl/service.hpp"
#include "automl/transfer.hpp"
#include "automl/tuner.hpp"
#include "support.hpp"

using namespace automl;
using automl::testing::Generator;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

Registry fixture_registry() { return load_registry(automl::testing::fixture_path("registry")); }

bool close_rel(double a, double b, double tol) { return std::abs(a / b - 1.0) <= tol; }

void transfer_blend(Outcome& o) {
  const auto rec = recommend(automl::testing::fixture_data_card("new"), automl::testing::fixture_model_card("vit"),
                             fixture_registry(), HashEmbedder{});
  const double lr = std::get<double>(rec.config.at("learning_rate"));
  o.detail << "lr=" << format_number(lr) << " weights=" << rec.neighbor_summary.at(0).second << "/"
           << rec.neighbor_summary.at(1).second;
  o.require(rec.source == RecommendationSource::transfer, "source is transfer");
  o.require(close_rel(lr, std::pow(10.0, -4.4), 1e-9), "lr = 10^-4.4 within 1e-9 relative");
  o.require(std::get<std::int64_t>(rec.config.at("batch_size")) == 64, "batch_size carried over");
}

void unseen_benchmark(Outcome& o) {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);
  const auto report = run_unseen_benchmark(6, 10, seeds);
  const auto& m = report.mean_accuracy;
  int beats_default = 0;
  for (const auto& t : report.trials) beats_default += t.accuracy.recommended >= t.accuracy.defaults ? 1 : 0;
  char buf[256];
  std::snprintf(buf, sizeof buf, "mean rec=%.4f rand=%.4f default=%.4f nearest=%.4f win=%.2f rec>=default %d/10",
                m.recommended, m.random, m.defaults, m.nearest, report.win_rate, beats_default);
  o.detail << buf;
  o.require(m.recommended > m.random, "mean recommended > mean random");
  o.require(report.win_rate >= 0.8, "win rate vs random >= 0.8");
  o.require(beats_default >= 7, "recommended >= default in >= 7/10 trials");
}

void tuner_convergence(Outcome& o) {
  const auto vit = automl::testing::fixture_model_card("vit");
  int converged = 0, runs = 0, grid_agree = 0, max_queries = 0;
  for (const char* name : {"New", "A", "COCO"}) {
    auto data = automl::testing::fixture_data_card("new");
    data.name = name;
    const double lr_star = mock_optimum_lr(name);
    for (double lr0 : {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1}) {
      MockBackend backend;
      Recommendation seed;
      seed.config = {{"learning_rate", lr0}};
      const auto r = tune(seed, data, vit, backend, {}, kDefaultBudget);
      ++runs;
      max_queries = std::max(max_queries, r.queries_used);
      if (close_rel(std::get<double>(r.best_config.at("learning_rate")), lr_star, 1e-9) &&
          r.queries_used <= kDefaultBudget) {
        ++converged;
      }
    }
    MockBackend backend;
    const auto [best, score] = grid_search_oracle(
        vit.arch_hparams, [&](const HyperParamConfig& c) { return predicted_metric(data, vit, backend, c); },
        GridSpec{{{"learning_rate", log_grid(1e-6, 1e-1, 21)}}});
    (void)score;
    if (close_rel(std::get<double>(best.at("learning_rate")), lr_star, 1e-9)) ++grid_agree;
  }
  o.detail << converged << "/" << runs << " runs converged (max " << max_queries << " queries), grid agrees " << grid_agree
           << "/3";
  o.require(converged == runs, "every start converges to lr*");
  o.require(grid_agree == 3, "21-point grid search agrees");
}

void prompts_and_responses(Outcome& o) {
  const std::pair<const char*, const char*> pairs[] = {{"coco", "detector"}, {"nq", "dpr"}, {"adult", "xgboost"}};
  int golden = 0, parsed = 0;
  MockBackend mock;
  for (const auto& [data, model] : pairs) {
    const auto p = compose_prompt(automl::testing::fixture_data_card(data), automl::testing::fixture_model_card(model));
    if (p.text == automl::testing::read_fixture(std::string("prompts/") + data + ".txt")) ++golden;
    try {
      const auto r = parse_response(mock.complete(p));
      if (!r.data_processing.empty() && !r.architecture.empty() && !r.hyperparameters.empty() &&
          !r.predicted_log.empty() && r.warnings.empty()) {
        ++parsed;
      }
    } catch (const Error& e) {
      o.detail << " parse error: " << e.what();
    }
  }
  o.detail << golden << "/3 golden prompts, " << parsed << "/3 mock responses parse";
  o.require(golden == 3, "golden prompts");
  o.require(parsed == 3, "responses parse");
}

void round_trips(Outcome& o) {
  Generator gen(2024);
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto d = gen.data_card();
    const auto m = gen.model_card();
    const auto l = gen.log();
    const auto r = gen.registry();
    failures += parse_data_card(serialize(d)) == d ? 0 : 1;
    failures += parse_model_card(serialize(m)) == m ? 0 : 1;
    failures += parse_training_log(serialize(l)) == l ? 0 : 1;
    failures += registry_from_json(json::parse(to_json(r).dump())) == r ? 0 : 1;
    const auto back = read_prompt(compose_prompt(d, m).text);
    failures += (back.data == d && back.model == m) ? 0 : 1;
  }
  o.detail << "5000 round trips, " << failures << " mismatches";
  o.require(failures == 0, "all round trips exact");
}

void constraint_loop(Outcome& o) {
  ServiceCore core(fixture_registry());
  const auto id = core.create_session().body["id"].get<std::string>();
  const json cards = {{"data_card", json::parse(automl::testing::read_fixture("cards/coco.json"))},
                      {"model_card", json::parse(automl::testing::read_fixture("cards/detector.json"))}};
  const auto submitted = core.submit_cards(id, cards);
  const auto first = core.recommend(id, json::object());
  const auto fps = core.post_request(id, {{"text", "fps >= 10"}});
  const auto before = core.get_session(id).body;
  const auto strict = core.post_request(id, {{"text", "val_metric >= 0.99"}});
  const auto after = core.get_session(id).body;
  o.detail << "cards " << submitted.status << ", recommend " << first.status << ", fps>=10 " << fps.status
           << ", val_metric>=0.99 " << strict.status;
  o.require(submitted.status == 200 && first.status == 200, "session reaches recommended");
  o.require(fps.status == 200, "satisfiable constraint succeeds");
  if (fps.status == 200) {
    o.require(close_rel(fps.body["recommendation"]["config"]["learning_rate"].get<double>(), 1e-5, 1e-9),
              "constrained optimum is lr*");
  }
  o.require(strict.status == 422 && strict.body["error"]["code"] == "AllCandidatesFiltered", "unsatisfiable gives 422");
  o.require(before == after, "422 leaves the session unchanged");
}

void invariants(Outcome& o) {
  Generator gen(77);
  int checks = 0, failures = 0;
  const auto check = [&](bool ok) {
    ++checks;
    failures += ok ? 0 : 1;
  };

  for (int i = 0; i < 300; ++i) {
    ModelCard model;
    do {
      model = gen.model_card();
    } while (model.arch_hparams.empty());
    std::vector<ScoredRecord> scored;
    const int n = gen.uniform(1, 5);
    for (int k = 0; k < n; ++k) {
      TuningRecord r;
      r.data_card.name = "d" + std::to_string(k);
      r.config = gen.config_for(model);
      scored.push_back({r, gen.real(0.01, 1.0)});
    }
    const auto set = rank_neighbors(scored, n, 0.0);
    double total = 0;
    for (const auto& e : set.entries) total += e.weight;
    check(std::abs(total - 1.0) < 1e-12);

    const auto blended = blend_configs(set, model.arch_hparams);
    check(validate_config(blended, model.arch_hparams).ok());
    for (const auto& [name, spec] : model.arch_hparams) {
      if (!spec.is_numeric()) continue;
      double lo = INFINITY, hi = -INFINITY;
      for (const auto& s : scored) {
        lo = std::min(lo, *numeric_value(s.record.config.at(name)));
        hi = std::max(hi, *numeric_value(s.record.config.at(name)));
      }
      const double v = *numeric_value(blended.at(name));
      check(v >= lo && v <= hi);
    }

    auto same = scored;
    for (auto& s : same) s.record.config = scored.front().record.config;
    check(blend_configs(rank_neighbors(same, n, 0.0), model.arch_hparams) == scored.front().record.config);
  }

  const auto vit = automl::testing::fixture_model_card("vit");
  for (int i = 0; i < 30; ++i) {
    const auto data = gen.data_card();
    const int budget = gen.uniform(1, 40);
    MockBackend backend;
    Recommendation seed;
    seed.config = {{"learning_rate", std::pow(10.0, gen.real(-6, -1))}};
    const auto r = tune(seed, data, vit, backend, {}, budget);
    check(r.queries_used <= budget && static_cast<int>(r.trajectory.size()) == r.queries_used);
    check(r.best_final_metric >= r.trajectory.front().final_metric);
  }

  auto registry = fixture_registry();
  auto regressed = registry.records.front();
  regressed.best_metric.value -= 0.1;
  try {
    add_record(registry, regressed);
    check(false);
  } catch (const Error& e) {
    check(e.code() == ErrorCode::RegressionRejected);
  }

  const auto fresh = automl::testing::fixture_data_card("new");
  check(recommend(fresh, vit, registry, HashEmbedder{}) == recommend(fresh, vit, registry, HashEmbedder{}));

  o.detail << checks << " checks, " << failures << " failures";
  o.require(failures == 0, "all invariants hold");
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<void(Outcome&)>> criteria[] = {
      {"transfer blend of two neighbors", transfer_blend},
      {"unseen-dataset benchmark", unseen_benchmark},
      {"tuner convergence and grid agreement", tuner_convergence},
      {"golden prompts and response parsing", prompts_and_responses},
      {"serialization round trips", round_trips},
      {"constraint loop through the service", constraint_loop},
      {"transfer and tuning invariants", invariants},
  };
  int failed = 0;
  int index = 1;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    std::cout << "criterion " << index++ << " " << (o.pass ? "PASS" : "FAIL") << ": " << name << ": " << o.detail.str()
              << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
