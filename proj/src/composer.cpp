#include "automl/composer.hpp"

#include <charconv>

#include "automl/error.hpp"

namespace automl {
namespace {

constexpr std::string_view kTaskLine =
    "TASK: Using the data card and model card below, design a training pipeline and respond with four "
    "sections: Data Processing, Model Architecture, Hyperparameter Tuning, and Predicted Training Log.";

class Builder {
 public:
  void raw(std::string_view s) { text_ += s; }

  void field(std::string path, std::string_view value) {
    const auto begin = text_.size();
    text_ += value;
    spans_.push_back({std::move(path), begin, text_.size()});
  }

  // "<prefix> <value>\n", or "<prefix>\n" with an empty span when value is empty.
  void entry(std::string_view prefix, std::string path, std::string_view value) {
    raw(prefix);
    if (!value.empty()) raw(" ");
    field(std::move(path), value);
    raw("\n");
  }

  void adopt(std::string_view text, const std::vector<Span>& spans) {
    const auto offset = text_.size();
    text_ += text;
    for (const auto& s : spans) spans_.push_back({s.field, s.begin + offset, s.end + offset});
  }

  PromptParagraph finish() && { return {std::move(text_), std::move(spans_)}; }

 private:
  std::string text_;
  std::vector<Span> spans_;
};

void render_data_card(Builder& b, const DataCard& data) {
  b.raw("DATA CARD:\n");
  b.entry("- name:", "data.name", data.name);
  b.entry("- input_type:", "data.input_type", to_string(data.input_type));
  if (const auto* classes = std::get_if<std::vector<std::string>>(&data.label_space)) {
    b.raw("- label_space (classes):\n");
    for (std::size_t i = 0; i < classes->size(); ++i) {
      b.entry("  -", "data.label_space[" + std::to_string(i) + "]", (*classes)[i]);
    }
  } else {
    b.entry("- label_space (description):", "data.label_space", std::get<std::string>(data.label_space));
  }
  if (data.scale) {
    b.entry("- scale:", "data.scale", std::to_string(*data.scale));
  } else {
    b.raw("- scale: unspecified\n");
  }
  b.entry("- task_description:", "data.task_description", data.task_description);
}

void render_model_card(Builder& b, const ModelCard& model) {
  b.raw("MODEL CARD:\n");
  b.entry("- name:", "model.name", model.name);
  b.entry("- structure:", "model.structure", model.structure);
  b.entry("- description:", "model.description", model.description);
  if (model.arch_hparams.empty()) {
    b.raw("- arch_hparams: none\n");
    return;
  }
  b.raw("- arch_hparams:\n");
  for (const auto& [name, spec] : model.arch_hparams) {
    const std::string path = "model.arch_hparams." + name;
    b.raw("  - ");
    b.field(path, name);
    b.raw(":\n");
    b.entry("    kind:", path + ".kind", to_string(spec.kind));
    if (spec.kind == ParamKind::categorical) {
      b.raw("    domain:\n");
      for (std::size_t i = 0; i < spec.categories.size(); ++i) {
        b.entry("      -", path + ".domain[" + std::to_string(i) + "]", spec.categories[i]);
      }
    } else {
      b.raw("    domain: [");
      b.field(path + ".domain.min", format_number(spec.min));
      b.raw(", ");
      b.field(path + ".domain.max", format_number(spec.max));
      b.raw("]\n");
    }
    b.entry("    default:", path + ".default", format_value(spec.default_value));
    b.entry("    flexibility:", path + ".flexibility", to_string(spec.flexibility));
  }
}

void render_evaluation(Builder& b, const DataCard& data) {
  b.raw("EVALUATION:\n");
  for (std::size_t i = 0; i < data.eval_metrics.size(); ++i) {
    b.entry("- metric:", "data.eval_metrics[" + std::to_string(i) + "]", data.eval_metrics[i]);
  }
}

struct RequestLine {
  std::string kind;
  std::string payload;
};

void render_requests(Builder& b, const std::vector<RequestLine>& requests) {
  if (requests.empty()) {
    b.raw("REQUESTS: none\n");
    return;
  }
  b.raw("REQUESTS:\n");
  for (std::size_t i = 0; i < requests.size(); ++i) {
    b.entry("- " + requests[i].kind + ":", "requests[" + std::to_string(i) + "]", requests[i].payload);
  }
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

// Line cursor for read_prompt.
class Reader {
 public:
  explicit Reader(std::string_view text) : lines_(split_lines(text)) {}

  bool done() const { return pos_ >= lines_.size(); }
  std::string_view peek() const { return done() ? std::string_view{} : lines_[pos_]; }
  std::string_view next() {
    if (done()) fail("unexpected end of prompt");
    return lines_[pos_++];
  }

  void expect(std::string_view exact) {
    if (next() != exact) fail("expected '" + std::string(exact) + "'", pos_ - 1);
  }

  // Reads "<prefix>" or "<prefix> <value>" and returns the value.
  std::string value(std::string_view prefix) {
    const auto line = next();
    if (line == prefix) return {};
    if (line.size() > prefix.size() + 1 && line.substr(0, prefix.size()) == prefix && line[prefix.size()] == ' ') {
      return std::string(line.substr(prefix.size() + 1));
    }
    fail("expected '" + std::string(prefix) + "'", pos_ - 1);
  }

  [[noreturn]] void fail(const std::string& what) const { fail(what, pos_); }
  [[noreturn]] void fail(const std::string& what, std::size_t line) const {
    throw Error(ErrorCode::MalformedPrompt, "prompt line " + std::to_string(line + 1) + ": " + what);
  }

 private:
  std::vector<std::string_view> lines_;
  std::size_t pos_ = 0;
};

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

double read_double(Reader& r, std::string_view text) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) r.fail("bad number '" + std::string(text) + "'");
  return v;
}

std::int64_t read_int(Reader& r, std::string_view text) {
  std::int64_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) r.fail("bad integer '" + std::string(text) + "'");
  return v;
}

DataCard read_data_card(Reader& r) {
  DataCard data;
  r.expect("DATA CARD:");
  data.name = r.value("- name:");
  const auto type = parse_input_type(r.value("- input_type:"));
  if (!type) r.fail("unknown input type");
  data.input_type = *type;
  if (r.peek() == "- label_space (classes):") {
    r.next();
    std::vector<std::string> classes;
    while (starts_with(r.peek(), "  -")) classes.push_back(r.value("  -"));
    data.label_space = std::move(classes);
  } else {
    data.label_space = r.value("- label_space (description):");
  }
  const auto scale = r.value("- scale:");
  if (scale != "unspecified") data.scale = read_int(r, scale);
  data.task_description = r.value("- task_description:");
  return data;
}

ModelCard read_model_card(Reader& r) {
  ModelCard model;
  r.expect("MODEL CARD:");
  model.name = r.value("- name:");
  model.structure = r.value("- structure:");
  model.description = r.value("- description:");
  if (r.value("- arch_hparams:") == "none") return model;
  while (starts_with(r.peek(), "  - ")) {
    const auto header = r.next();
    if (header.size() < 6 || header.back() != ':') r.fail("bad hyperparameter header");
    HyperParamSpec spec;
    spec.name = std::string(header.substr(4, header.size() - 5));
    const auto kind = parse_param_kind(r.value("    kind:"));
    if (!kind) r.fail("unknown hyperparameter kind");
    spec.kind = *kind;
    if (spec.kind == ParamKind::categorical) {
      r.expect("    domain:");
      while (starts_with(r.peek(), "      -")) spec.categories.push_back(r.value("      -"));
    } else {
      const auto domain = r.value("    domain:");
      const auto comma = domain.find(", ");
      if (domain.size() < 2 || domain.front() != '[' || domain.back() != ']' || comma == std::string::npos) {
        r.fail("bad numeric domain");
      }
      spec.min = read_double(r, std::string_view(domain).substr(1, comma - 1));
      spec.max = read_double(r, std::string_view(domain).substr(comma + 2, domain.size() - comma - 3));
    }
    const auto def = r.value("    default:");
    switch (spec.kind) {
      case ParamKind::integer: spec.default_value = read_int(r, def); break;
      case ParamKind::categorical: spec.default_value = def; break;
      default: spec.default_value = read_double(r, def); break;
    }
    const auto flex = parse_flexibility(r.value("    flexibility:"));
    if (!flex) r.fail("unknown flexibility");
    spec.flexibility = *flex;
    model.arch_hparams.emplace(spec.name, std::move(spec));
  }
  return model;
}

}  // namespace

std::string_view to_string(RequestKind k) {
  switch (k) {
    case RequestKind::constraint: return "constraint";
    case RequestKind::metric_addition: return "metric";
    case RequestKind::free_text: return "note";
  }
  return "note";
}

UserRequest UserRequest::of_constraint(Constraint c) {
  UserRequest r;
  r.kind = RequestKind::constraint;
  r.constraint = std::move(c);
  return r;
}

UserRequest UserRequest::metric(std::string name) {
  UserRequest r;
  r.kind = RequestKind::metric_addition;
  r.text = std::move(name);
  return r;
}

UserRequest UserRequest::note(std::string text) {
  UserRequest r;
  r.kind = RequestKind::free_text;
  r.text = std::move(text);
  return r;
}

std::string UserRequest::payload() const {
  if (kind == RequestKind::constraint) return format_constraint(constraint);
  return canonical_text(text);
}

UserRequest classify_request(std::string_view text) {
  try {
    return UserRequest::of_constraint(parse_constraint(text));
  } catch (const Error&) {
  }
  const auto canon = canonical_text(text);
  if (starts_with(canon, "metric ") && is_identifier(std::string_view(canon).substr(7))) {
    return UserRequest::metric(canon.substr(7));
  }
  return UserRequest::note(canon);
}

PromptParagraph compose_prompt(const DataCard& data, const ModelCard& model,
                               const std::vector<UserRequest>& requests) {
  const auto canon_data = canonicalize(data);
  Builder b;
  b.raw(kTaskLine);
  b.raw("\n");
  render_data_card(b, canon_data);
  render_model_card(b, canonicalize(model));
  render_evaluation(b, canon_data);
  std::vector<RequestLine> lines;
  for (const auto& r : requests) lines.push_back({std::string(to_string(r.kind)), r.payload()});
  render_requests(b, lines);
  return std::move(b).finish();
}

PromptParagraph compose_followup(const PromptParagraph& previous, const TrainingLog& log,
                                 const UserRequest& new_request) {
  if (log.empty()) throw Error(ErrorCode::EmptyLog, "follow-up needs a non-empty training log");

  const std::string_view text = previous.text;
  std::size_t cut = std::string_view::npos;
  for (auto marker : {"\nLOG: ", "\nREQUESTS:"}) {
    const auto at = text.find(marker);
    if (at != std::string_view::npos) cut = std::min(cut, at + 1);
  }
  if (cut == std::string_view::npos) throw Error(ErrorCode::MalformedPrompt, "previous prompt has no REQUESTS section");

  // Earlier requests carry over in order.
  std::vector<RequestLine> requests;
  const auto req_at = text.find("\nREQUESTS:");
  if (req_at != std::string_view::npos) {
    const auto lines = split_lines(text.substr(req_at + 1));
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto line = lines[i];
      const auto colon = line.find(':');
      if (!starts_with(line, "- ") || colon == std::string_view::npos) {
        throw Error(ErrorCode::MalformedPrompt, "bad request line in previous prompt");
      }
      const auto payload = colon + 1 < line.size() ? line.substr(colon + 2) : std::string_view{};
      requests.push_back({std::string(line.substr(2, colon - 2)), std::string(payload)});
    }
  }
  requests.push_back({std::string(to_string(new_request.kind)), new_request.payload()});

  std::vector<Span> kept;
  for (const auto& s : previous.spans) {
    if (s.end <= cut) kept.push_back(s);
  }
  Builder b;
  b.adopt(text.substr(0, cut), kept);
  b.entry("LOG:", "log", format_log_line(log.final_entry()));
  render_requests(b, requests);
  return std::move(b).finish();
}

PromptContents read_prompt(std::string_view text) {
  Reader r(text);
  if (!starts_with(r.next(), "TASK: ")) r.fail("expected TASK section", 0);
  PromptContents out;
  out.data = read_data_card(r);
  out.model = read_model_card(r);
  r.expect("EVALUATION:");
  while (starts_with(r.peek(), "- metric:")) out.data.eval_metrics.push_back(r.value("- metric:"));
  if (starts_with(r.peek(), "LOG: ")) out.log = parse_log_line(r.value("LOG:"));
  if (r.peek() == "REQUESTS: none") {
    r.next();
  } else {
    r.expect("REQUESTS:");
    while (starts_with(r.peek(), "- ")) out.request_lines.emplace_back(r.next().substr(2));
    if (out.request_lines.empty()) r.fail("REQUESTS section lists nothing");
  }
  if (!r.done()) r.fail("unexpected trailing text");
  return out;
}

}  // namespace automl
