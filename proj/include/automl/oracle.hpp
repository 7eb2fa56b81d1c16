#pragma once

// Language-model backends and the four-section response they return.
//
// Response layout (exact header lines):
//
//   ## Data Processing
//   - <step>
//   ## Model Architecture
//   <free text; "estimate <metric>=<number>" lines are machine-readable>
//   ## Hyperparameter Tuning
//   <name>: <value>
//   ## Predicted Training Log
//   epoch 1: train_loss=... val_loss=... val_metric=...

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "automl/cards.hpp"
#include "automl/composer.hpp"
#include "automl/training_log.hpp"

namespace automl {

struct BackendResponse {
  std::vector<std::string> data_processing;
  std::string architecture;
  HyperParamConfig hyperparameters;
  TrainingLog predicted_log;
  std::string raw_text;
  std::vector<std::string> warnings;  // hyperparameter lines that did not parse
};

/// Missing headers raise MissingSection; an empty tuning section raises
/// EmptyHyperparameters; log lines follow parse_training_log.
BackendResponse parse_response(std::string_view raw);

/// "estimate <name>=<number>" lines of the architecture section.
std::map<std::string, double> architecture_estimates(const BackendResponse& response);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const PromptParagraph& prompt) = 0;
  virtual std::string id() const = 0;
};

// --- mock-v1 ------------------------------------------------------------------

inline constexpr int kMockEpochs = 12;

/// 10^-(3 + fnv1a64(name) mod 3).
double mock_optimum_lr(std::string_view dataset_name);

/// max(0, 0.95 - 0.15 (log10 lr - log10 lr*)^2).
double mock_surface(double lr, double lr_star);

/// The 12-epoch curve for a surface height S.
TrainingLog mock_log(double surface);

/// "learning_rate" when present, else "lr"; empty when the space has neither.
std::string learning_rate_key(const HyperParamSpace& space);

/// Pure function of the prompt text.
std::string mock_complete(std::string_view prompt_text);

class MockBackend final : public Backend {
 public:
  std::string complete(const PromptParagraph& prompt) override { return mock_complete(prompt.text); }
  std::string id() const override { return "mock-v1"; }
};

// --- HTTP ---------------------------------------------------------------------

/// POSTs the prompt as text/plain and returns the body. Connection failures,
/// 429 and 5xx are retried (3 attempts, 1s then 2s apart by default); 401/403
/// fail at once. Each complete() call counts against `max_requests`.
class HttpBackend final : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  HttpBackend(std::string url, std::string api_key, int max_requests);

  /// Reads AUTOMLGPT_API_URL and AUTOMLGPT_API_KEY.
  static std::unique_ptr<HttpBackend> from_env(int max_requests);

  std::string complete(const PromptParagraph& prompt) override;
  std::string id() const override { return url_; }

  void set_backoff(std::chrono::milliseconds base, Sleeper sleeper);
  int requests_used() const { return used_.load(); }

 private:
  std::string url_;
  std::string api_key_;
  int max_requests_;
  std::atomic<int> used_{0};
  std::chrono::milliseconds backoff_base_{1000};
  Sleeper sleep_;
};

inline constexpr int kHttpAttempts = 3;

}  // namespace automl
