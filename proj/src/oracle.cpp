#include "automl/oracle.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "automl/encoder.hpp"
#include "automl/error.hpp"
#include "automl/http_util.hpp"

// Must follow the Eigen includes (resolv.h `_res` macro).
#include <httplib.h>

namespace automl {
namespace {

constexpr std::array<std::string_view, 4> kSections = {"## Data Processing", "## Model Architecture",
                                                       "## Hyperparameter Tuning", "## Predicted Training Log"};

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = end + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

ParamValue detect_value(std::string_view s) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  std::int64_t i = 0;
  if (auto [p, ec] = std::from_chars(first, last, i); ec == std::errc() && p == last) return i;
  double d = 0.0;
  if (auto [p, ec] = std::from_chars(first, last, d); ec == std::errc() && p == last && std::isfinite(d)) return d;
  return std::string(s);
}

std::vector<std::string_view> processing_steps(InputType t) {
  switch (t) {
    case InputType::image: return {"resize", "normalize", "augment"};
    case InputType::text: return {"tokenize", "lowercase", "remove_stopwords"};
    case InputType::tabular: return {"impute", "standardize", "encode_categoricals"};
  }
  return {};
}

}  // namespace

BackendResponse parse_response(std::string_view raw) {
  std::array<std::vector<std::string_view>, 4> bodies;
  std::array<bool, 4> seen{};
  int current = -1;
  for (const auto line : lines_of(raw)) {
    bool header = false;
    for (std::size_t s = 0; s < kSections.size(); ++s) {
      if (line == kSections[s]) {
        if (seen[s]) throw Error(ErrorCode::BackendError, "section '" + std::string(kSections[s]) + "' repeats");
        seen[s] = true;
        current = static_cast<int>(s);
        header = true;
      }
    }
    if (!header && current >= 0) bodies[static_cast<std::size_t>(current)].push_back(line);
  }
  for (std::size_t s = 0; s < kSections.size(); ++s) {
    if (!seen[s]) throw Error(ErrorCode::MissingSection, "response lacks '" + std::string(kSections[s]) + "'");
  }

  BackendResponse out;
  out.raw_text = std::string(raw);
  for (const auto line : bodies[0]) {
    auto step = trim(line);
    if (step.empty()) continue;
    if (step.substr(0, 2) == "- ") step = trim(step.substr(2));
    out.data_processing.emplace_back(step);
  }

  std::string architecture;
  for (const auto line : bodies[1]) {
    if (!architecture.empty() || !trim(line).empty()) architecture += std::string(line) + "\n";
  }
  while (!architecture.empty() && (architecture.back() == '\n' || architecture.back() == ' ')) architecture.pop_back();
  out.architecture = std::move(architecture);

  for (const auto line : bodies[2]) {
    if (trim(line).empty()) continue;
    const auto colon = line.find(": ");
    bool ok = colon != std::string_view::npos && colon > 0 && is_ident_start(line[0]);
    for (std::size_t i = 0; ok && i < colon; ++i) ok = is_ident_char(line[i]);
    const auto value = ok ? trim(line.substr(colon + 2)) : std::string_view{};
    if (!ok || value.empty()) {
      out.warnings.push_back("unparsed hyperparameter line: " + std::string(line));
      continue;
    }
    out.hyperparameters.insert_or_assign(std::string(line.substr(0, colon)), detect_value(value));
  }
  if (out.hyperparameters.empty()) {
    throw Error(ErrorCode::EmptyHyperparameters, "hyperparameter section holds no name: value lines");
  }

  std::string log_text;
  for (const auto line : bodies[3]) log_text += std::string(line) + "\n";
  out.predicted_log = parse_training_log(log_text);
  if (out.predicted_log.empty()) throw Error(ErrorCode::EmptyLog, "predicted training log is empty");
  return out;
}

std::map<std::string, double> architecture_estimates(const BackendResponse& response) {
  std::map<std::string, double> out;
  for (const auto line : lines_of(response.architecture)) {
    const auto t = trim(line);
    if (t.substr(0, 9) != "estimate ") continue;
    const auto body = t.substr(9);
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) continue;
    double v = 0.0;
    const auto num = body.substr(eq + 1);
    if (auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
        ec == std::errc() && p == num.data() + num.size()) {
      out.insert_or_assign(std::string(body.substr(0, eq)), v);
    }
  }
  return out;
}

double mock_optimum_lr(std::string_view dataset_name) {
  return std::pow(10.0, -(3.0 + static_cast<double>(fnv1a64(dataset_name) % 3)));
}

double mock_surface(double lr, double lr_star) {
  const double d = std::log10(lr) - std::log10(lr_star);
  return std::max(0.0, 0.95 - 0.15 * d * d);
}

TrainingLog mock_log(double surface) {
  TrainingLog log;
  for (int e = 1; e <= kMockEpochs; ++e) {
    const double metric = surface * (1.0 - std::exp(-e / 4.0));
    log.entries.push_back({e, std::exp(-e / 3.0), 1.0 - metric, metric});
  }
  return log;
}

std::string learning_rate_key(const HyperParamSpace& space) {
  for (const char* key : {"learning_rate", "lr"}) {
    if (space.count(key)) return key;
  }
  return {};
}

std::string mock_complete(std::string_view prompt_text) {
  const auto prompt = read_prompt(prompt_text);
  const auto& model = prompt.model;
  const double lr_star = mock_optimum_lr(prompt.data.name);

  auto config = default_config(model.arch_hparams);
  const auto lr_key = learning_rate_key(model.arch_hparams);
  double lr = lr_star;
  if (!lr_key.empty()) {
    lr = numeric_value(config.at(lr_key)).value_or(lr_star);
    if (prompt.has_requests() || prompt.log) {
      const double gap = std::log10(lr_star) - std::log10(lr);
      if (std::abs(gap) <= 0.25) {
        lr = lr_star;
      } else {
        lr *= std::pow(10.0, gap > 0 ? 0.25 : -0.25);
      }
      const auto& spec = model.arch_hparams.at(lr_key);
      lr = std::min(std::max(lr, spec.min), spec.max);
      config[lr_key] = lr;
    }
  }

  std::string out;
  out += "## Data Processing\n";
  for (const auto step : processing_steps(prompt.data.input_type)) out += "- " + std::string(step) + "\n";
  out += "\n## Model Architecture\n";
  out += model.name + ": " + (model.structure.empty() ? std::string("unspecified") : model.structure) + "\n";
  out += "estimate fps=" + std::to_string(10 + fnv1a64(model.name) % 50) + "\n";
  out += "\n## Hyperparameter Tuning\n";
  for (const auto& [name, value] : config) out += name + ": " + format_value(value) + "\n";
  out += "\n## Predicted Training Log\n";
  out += serialize(mock_log(mock_surface(lr, lr_star)));
  return out;
}

HttpBackend::HttpBackend(std::string url, std::string api_key, int max_requests)
    : url_(std::move(url)),
      api_key_(std::move(api_key)),
      max_requests_(max_requests),
      sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

std::unique_ptr<HttpBackend> HttpBackend::from_env(int max_requests) {
  const char* url = std::getenv("AUTOMLGPT_API_URL");
  if (!url || !*url) throw Error(ErrorCode::EndpointUnreachable, "AUTOMLGPT_API_URL is not set");
  const char* key = std::getenv("AUTOMLGPT_API_KEY");
  return std::make_unique<HttpBackend>(url, key ? key : "", max_requests);
}

void HttpBackend::set_backoff(std::chrono::milliseconds base, Sleeper sleeper) {
  backoff_base_ = base;
  sleep_ = std::move(sleeper);
}

std::string HttpBackend::complete(const PromptParagraph& prompt) {
  if (used_.fetch_add(1) >= max_requests_) {
    used_.fetch_sub(1);
    throw Error(ErrorCode::BudgetExceeded, "request budget of " + std::to_string(max_requests_) + " is spent");
  }
  const auto parts = split_url(url_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  std::string last_failure;
  bool reached = false;
  auto delay = backoff_base_;
  for (int attempt = 1; attempt <= kHttpAttempts; ++attempt) {
    httplib::Client client(parts.origin);
    client.set_connection_timeout(5);
    client.set_read_timeout(120);
    const auto res = client.Post(parts.path, headers, prompt.text, "text/plain");
    if (res) {
      if (res->status == 401 || res->status == 403) {
        throw Error(ErrorCode::AuthFailure, "backend rejected credentials (HTTP " + std::to_string(res->status) + ")");
      }
      if (res->status >= 200 && res->status < 300) return res->body;
      if (res->status != 429 && res->status < 500) {
        throw Error(ErrorCode::BackendError, "backend returned HTTP " + std::to_string(res->status));
      }
      last_failure = "HTTP " + std::to_string(res->status);
      reached = true;
    } else {
      last_failure = httplib::to_string(res.error());
      reached = false;
    }
    if (attempt < kHttpAttempts) {
      sleep_(delay);
      delay *= 2;
    }
  }
  throw Error(reached ? ErrorCode::BackendError : ErrorCode::EndpointUnreachable,
              url_ + " failed after " + std::to_string(kHttpAttempts) + " attempts: " + last_failure);
}

}  // namespace automl
