#pragma once

// Per-epoch training logs, shared by backend predictions and real training.
//
// Line grammar:
//   epoch <uint>: train_loss=<float> val_loss=<float> val_metric=<float>
// Serialization prints floats with exactly four decimals.

#include <string>
#include <string_view>
#include <vector>

namespace automl {

struct LogEntry {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;

  bool operator==(const LogEntry&) const = default;
};

struct TrainingLog {
  std::vector<LogEntry> entries;

  bool empty() const { return entries.empty(); }
  const LogEntry& final_entry() const { return entries.back(); }
  bool operator==(const TrainingLog&) const = default;
};

std::string format_log_line(const LogEntry& e);
std::string serialize(const TrainingLog& log);

/// Blank lines are skipped. Throws BadLogLine (with the 1-based line number in
/// the message) or NonMonotoneEpochs.
TrainingLog parse_training_log(std::string_view text);

/// Parses one line. `line_no` only feeds error messages.
LogEntry parse_log_line(std::string_view line, int line_no = 1);

}  // namespace automl
