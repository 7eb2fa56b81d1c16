#include "automl/constraint.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include "automl/cards.hpp"
#include "automl/error.hpp"

namespace automl {
namespace {

class Scanner {
 public:
  explicit Scanner(std::string_view text) : text_(text) {}

  void skip_spaces() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }
  bool at_end() const { return pos_ >= text_.size(); }
  std::size_t pos() const { return pos_; }

  std::string_view identifier() {
    const auto start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  std::string_view op() {
    const auto start = pos_;
    if (pos_ < text_.size() && (text_[pos_] == '<' || text_[pos_] == '>')) {
      ++pos_;
      if (pos_ < text_.size() && text_[pos_] == '=') ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  std::string_view number() {
    const auto start = pos_;
    while (pos_ < text_.size() && !(text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  [[noreturn]] void fail(std::size_t at, const std::string& what) const {
    throw Error(ErrorCode::BadConstraint,
                "bad constraint at column " + std::to_string(at + 1) + ": " + what + " in '" + std::string(text_) + "'");
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
  }
  return ">=";
}

bool Constraint::satisfied_by(double observed) const {
  switch (op) {
    case CompareOp::lt: return observed < value;
    case CompareOp::le: return observed <= value;
    case CompareOp::gt: return observed > value;
    case CompareOp::ge: return observed >= value;
  }
  return false;
}

Constraint parse_constraint(std::string_view text) {
  Scanner s(text);
  Constraint c;

  s.skip_spaces();
  auto at = s.pos();
  const auto metric = s.identifier();
  if (metric.empty()) s.fail(at, "expected a metric name");
  if (!is_identifier(metric)) s.fail(at, "metric must be a lowercase snake_case identifier");
  c.metric = std::string(metric);

  s.skip_spaces();
  at = s.pos();
  const auto op = s.op();
  if (op == "<") c.op = CompareOp::lt;
  else if (op == "<=") c.op = CompareOp::le;
  else if (op == ">") c.op = CompareOp::gt;
  else if (op == ">=") c.op = CompareOp::ge;
  else s.fail(at, "expected one of <, <=, >, >=");

  s.skip_spaces();
  at = s.pos();
  const auto number = s.number();
  if (number.empty()) s.fail(at, "expected a number");
  const char* first = number.data();
  if (*first == '+') ++first;
  const auto [end, ec] = std::from_chars(first, number.data() + number.size(), c.value);
  if (ec != std::errc{} || end != number.data() + number.size() || !std::isfinite(c.value)) {
    s.fail(at, "expected a finite number");
  }

  s.skip_spaces();
  if (!s.at_end()) {
    at = s.pos();
    const auto unit = s.identifier();
    if (unit.empty() || !is_identifier(unit)) s.fail(at, "unit must be a lowercase snake_case identifier");
    c.unit = std::string(unit);
    s.skip_spaces();
    if (!s.at_end()) s.fail(s.pos(), "unexpected trailing text");
  }
  return c;
}

std::string format_constraint(const Constraint& c) {
  std::string out = c.metric + " " + std::string(to_string(c.op)) + " " + format_number(c.value);
  if (!c.unit.empty()) out += " " + c.unit;
  return out;
}

}  // namespace automl
