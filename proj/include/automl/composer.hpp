#pragma once

// Fixed-format prompt paragraph built from a data card, a model card and the
// user's additional requests.
//
// Layout (sections always in this order):
//
//   TASK: <instruction>
//   DATA CARD:
//   - name: ...
//   ...
//   MODEL CARD:
//   ...
//   EVALUATION:
//   - metric: ...
//   [LOG: epoch N: train_loss=... val_loss=... val_metric=...]   follow-ups only
//   REQUESTS: none | REQUESTS: followed by "- <kind>: <text>" lines
//
// Every substituted card value is recorded as a span into the rendered text.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "automl/cards.hpp"
#include "automl/constraint.hpp"
#include "automl/training_log.hpp"

namespace automl {

struct Span {
  std::string field;  // e.g. "data.label_space[3]", "model.arch_hparams.lr.default"
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive

  bool operator==(const Span&) const = default;
};

struct PromptParagraph {
  std::string text;
  std::vector<Span> spans;

  std::string_view slice(const Span& s) const { return std::string_view(text).substr(s.begin, s.end - s.begin); }
  bool operator==(const PromptParagraph&) const = default;
};

enum class RequestKind { constraint, metric_addition, free_text };

std::string_view to_string(RequestKind k);  // "constraint", "metric", "note"

struct UserRequest {
  RequestKind kind = RequestKind::free_text;
  Constraint constraint;  // kind == constraint
  std::string text;       // metric name or free text otherwise

  static UserRequest of_constraint(Constraint c);
  static UserRequest metric(std::string name);
  static UserRequest note(std::string text);

  /// Canonical single-line rendering used inside the REQUESTS section.
  std::string payload() const;
  bool operator==(const UserRequest&) const = default;
};

/// Grammar-driven classification: a constraint if the text parses as one,
/// `metric <identifier>` for a metric addition, free text otherwise.
UserRequest classify_request(std::string_view text);

PromptParagraph compose_prompt(const DataCard& data, const ModelCard& model,
                               const std::vector<UserRequest>& requests = {});

/// Carries TASK/DATA/MODEL/EVALUATION over verbatim, replaces any LOG line with
/// the final epoch of `log`, and appends `new_request` to the REQUESTS list.
PromptParagraph compose_followup(const PromptParagraph& previous, const TrainingLog& log,
                                 const UserRequest& new_request);

/// Structured view of a rendered prompt.
struct PromptContents {
  DataCard data;
  ModelCard model;
  std::vector<std::string> request_lines;  // "<kind>: <payload>"
  std::optional<LogEntry> log;

  bool has_requests() const { return !request_lines.empty(); }
};

/// Inverse of compose_prompt/compose_followup. Throws MalformedPrompt when a
/// section is missing or a line does not fit the layout.
PromptContents read_prompt(std::string_view text);

}  // namespace automl
