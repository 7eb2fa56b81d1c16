#include "automl/training_log.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <regex>

#include "automl/error.hpp"

namespace automl {
namespace {

const std::regex& line_pattern() {
  static const std::regex pattern(
      R"(^epoch ([0-9]+): train_loss=([0-9]+(?:\.[0-9]+)?(?:[eE][-+]?[0-9]+)?) )"
      R"(val_loss=([0-9]+(?:\.[0-9]+)?(?:[eE][-+]?[0-9]+)?) )"
      R"(val_metric=([0-9]+(?:\.[0-9]+)?(?:[eE][-+]?[0-9]+)?)$)");
  return pattern;
}

double to_double(const std::string& s) {
  double v = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

[[noreturn]] void bad_line(int line_no, const std::string& reason) {
  throw Error(ErrorCode::BadLogLine, "log line " + std::to_string(line_no) + ": " + reason);
}

}  // namespace

std::string format_log_line(const LogEntry& e) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "epoch %d: train_loss=%.4f val_loss=%.4f val_metric=%.4f", e.epoch, e.train_loss,
                e.val_loss, e.val_metric);
  return buf;
}

std::string serialize(const TrainingLog& log) {
  std::string out;
  for (const auto& e : log.entries) {
    out += format_log_line(e);
    out += '\n';
  }
  return out;
}

LogEntry parse_log_line(std::string_view line, int line_no) {
  std::string text(line);
  if (!text.empty() && text.back() == '\r') text.pop_back();
  std::smatch m;
  if (!std::regex_match(text, m, line_pattern())) bad_line(line_no, "does not match the log grammar: '" + text + "'");
  LogEntry e;
  const auto epoch_text = m[1].str();
  const auto [end, ec] = std::from_chars(epoch_text.data(), epoch_text.data() + epoch_text.size(), e.epoch);
  if (ec != std::errc{} || e.epoch <= 0) bad_line(line_no, "epoch must be a positive integer");
  e.train_loss = to_double(m[2].str());
  e.val_loss = to_double(m[3].str());
  e.val_metric = to_double(m[4].str());
  if (!std::isfinite(e.train_loss) || !std::isfinite(e.val_loss)) bad_line(line_no, "losses must be finite");
  if (e.val_metric > 1.0) bad_line(line_no, "val_metric must lie in [0, 1]");
  return e;
}

TrainingLog parse_training_log(std::string_view text) {
  TrainingLog log;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      auto entry = parse_log_line(line, line_no);
      const int expected = static_cast<int>(log.entries.size()) + 1;
      if (entry.epoch != expected) {
        throw Error(ErrorCode::NonMonotoneEpochs, "log line " + std::to_string(line_no) + ": expected epoch " +
                                                      std::to_string(expected) + ", found " +
                                                      std::to_string(entry.epoch));
      }
      log.entries.push_back(entry);
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return log;
}

}  // namespace automl
