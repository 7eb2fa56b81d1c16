#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "automl/cards.hpp"
#include "automl/registry.hpp"
#include "automl/training_log.hpp"

namespace automl::testing {

inline std::string fixture_path(const std::string& relative) { return std::string(AUTOMLGPT_FIXTURE_DIR) + "/" + relative; }

inline std::string read_fixture(const std::string& relative) {
  std::ifstream in(fixture_path(relative), std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline DataCard fixture_data_card(const std::string& name) { return parse_data_card(read_fixture("cards/" + name + ".json")); }
inline ModelCard fixture_model_card(const std::string& name) {
  return parse_model_card(read_fixture("cards/" + name + ".json"));
}

// Random instances already in canonical form.
class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin() { return uniform(0, 1) == 1; }

  std::string word() {
    static const char* syllables[] = {"ka", "lo", "mi", "nu", "pe", "ra", "si", "to", "ve", "zu", "x", "q"};
    std::string w;
    for (int i = uniform(1, 4); i > 0; --i) w += syllables[uniform(0, 11)];
    if (coin()) w += std::to_string(uniform(0, 99));
    return w;
  }

  std::string phrase(int max_words) {
    std::string s;
    for (int i = uniform(1, max_words); i > 0; --i) s += (s.empty() ? "" : " ") + word();
    return s;
  }

  std::string mixed_case(std::string s) {
    for (auto& c : s) {
      if (c >= 'a' && c <= 'z' && coin()) c = static_cast<char>(c - 'a' + 'A');
    }
    return s;
  }

  DataCard data_card() {
    DataCard c;
    c.name = mixed_case(phrase(3));
    c.input_type = static_cast<InputType>(uniform(0, 2));
    if (coin()) {
      std::vector<std::string> labels;
      for (int i = uniform(1, 12); i > 0; --i) {
        auto l = phrase(2);
        if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
      }
      c.label_space = labels;
    } else {
      c.label_space = mixed_case(phrase(8));
    }
    if (coin()) c.scale = uniform(1, 2000000);
    c.task_description = coin() ? mixed_case(phrase(10)) : "";
    for (int i = uniform(1, 4); i > 0; --i) {
      auto m = mixed_case(word());
      if (std::find(c.eval_metrics.begin(), c.eval_metrics.end(), m) == c.eval_metrics.end()) c.eval_metrics.push_back(m);
    }
    return c;
  }

  std::string identifier() {
    std::string s = word();
    for (int i = uniform(0, 2); i > 0; --i) s += "_" + word();
    return s;
  }

  HyperParamSpec spec(const std::string& name) {
    HyperParamSpec s;
    s.name = name;
    s.kind = static_cast<ParamKind>(uniform(0, 3));
    s.flexibility = coin() ? Flexibility::tunable : Flexibility::fixed;
    switch (s.kind) {
      case ParamKind::continuous_linear: {
        s.min = real(-100, 100);
        s.max = s.min + real(0.001, 500);
        s.default_value = s.min + (s.max - s.min) * real(0, 1);
        if (std::get<double>(s.default_value) > s.max) s.default_value = s.max;
        break;
      }
      case ParamKind::continuous_log: {
        s.min = std::pow(10.0, real(-9, 0));
        s.max = s.min * std::pow(10.0, real(0.1, 6));
        s.default_value = std::exp(std::log(s.min) + (std::log(s.max) - std::log(s.min)) * real(0, 1));
        const double d = std::get<double>(s.default_value);
        if (d < s.min) s.default_value = s.min;
        if (d > s.max) s.default_value = s.max;
        break;
      }
      case ParamKind::integer: {
        const int lo = uniform(-50, 500);
        const int hi = lo + uniform(1, 1000);
        s.min = lo;
        s.max = hi;
        s.default_value = static_cast<std::int64_t>(uniform(lo, hi));
        break;
      }
      case ParamKind::categorical: {
        for (int i = uniform(1, 5); i > 0; --i) {
          auto cat = word();
          if (std::find(s.categories.begin(), s.categories.end(), cat) == s.categories.end()) s.categories.push_back(cat);
        }
        s.default_value = s.categories[static_cast<std::size_t>(uniform(0, static_cast<int>(s.categories.size()) - 1))];
        break;
      }
    }
    return s;
  }

  ModelCard model_card() {
    ModelCard m;
    m.name = mixed_case(phrase(2));
    m.structure = coin() ? phrase(8) : "";
    m.description = coin() ? mixed_case(phrase(12)) : "";
    for (int i = uniform(0, 6); i > 0; --i) {
      const auto name = identifier();
      m.arch_hparams.emplace(name, spec(name));
    }
    return m;
  }

  TrainingLog log() {
    TrainingLog l;
    for (int e = 1, n = uniform(1, 40); e <= n; ++e) {
      l.entries.push_back({e, uniform(0, 90000) / 10000.0, uniform(0, 90000) / 10000.0, uniform(0, 10000) / 10000.0});
    }
    return l;
  }

  // A config drawn from inside the card's space.
  HyperParamConfig config_for(const ModelCard& m) {
    HyperParamConfig c;
    for (const auto& [name, s] : m.arch_hparams) {
      switch (s.kind) {
        case ParamKind::continuous_linear: c[name] = std::min(s.max, s.min + (s.max - s.min) * real(0, 1)); break;
        case ParamKind::continuous_log:
          c[name] = std::clamp(std::exp(std::log(s.min) + (std::log(s.max) - std::log(s.min)) * real(0, 1)), s.min, s.max);
          break;
        case ParamKind::integer: c[name] = static_cast<std::int64_t>(uniform(static_cast<int>(s.min), static_cast<int>(s.max))); break;
        case ParamKind::categorical: c[name] = s.categories[static_cast<std::size_t>(uniform(0, static_cast<int>(s.categories.size()) - 1))]; break;
      }
    }
    return c;
  }

  Registry registry() {
    Registry r;
    std::vector<ModelCard> models;
    for (int i = uniform(1, 3); i > 0; --i) {
      auto m = model_card();
      if (r.model_cards.count(m.name)) continue;
      models.push_back(m);
      r = add_model_card(std::move(r), m);
    }
    for (int i = uniform(0, 6); i > 0; --i) {
      TuningRecord rec;
      rec.data_card = data_card();
      const auto& m = models[static_cast<std::size_t>(uniform(0, static_cast<int>(models.size()) - 1))];
      rec.model_card_name = m.name;
      rec.config = config_for(m);
      rec.best_metric = {rec.data_card.eval_metrics.front(), real(0, 1)};
      rec.provenance = static_cast<Provenance>(uniform(0, 2));
      rec.created_at = uniform(0, 2000000000);
      try {
        r = add_record(std::move(r), rec);
      } catch (const std::exception&) {
        // Same (dataset, model) pair drawn twice with a lower metric.
      }
    }
    return r;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace automl::testing
