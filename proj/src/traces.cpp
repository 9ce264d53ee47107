#include "mint/traces.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mint/error.hpp"
#include "mint/format.hpp"

namespace mint {

using nlohmann::json;

std::string_view to_string(Task task) {
  return task == Task::mia ? "mia" : "mgtd";
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::member: return "member";
    case Label::nonmember: return "nonmember";
    case Label::human: return "human";
    case Label::machine: return "machine";
    case Label::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

std::optional<Task> parse_task(std::string_view s) {
  if (s == "mia") return Task::mia;
  if (s == "mgtd") return Task::mgtd;
  return std::nullopt;
}

std::optional<Label> parse_label(std::string_view s) {
  if (s == "member") return Label::member;
  if (s == "nonmember") return Label::nonmember;
  if (s == "human") return Label::human;
  if (s == "machine") return Label::machine;
  if (s == "unlabeled") return Label::unlabeled;
  return std::nullopt;
}

bool label_fits_task(Label label, Task task) {
  switch (label) {
    case Label::unlabeled: return true;
    case Label::member:
    case Label::nonmember: return task == Task::mia;
    case Label::human:
    case Label::machine: return task == Task::mgtd;
  }
  return false;
}

std::string_view field_name(Field f) {
  switch (f) {
    case Field::mu: return "mu";
    case Field::sigma: return "sigma";
    case Field::ref_logp: return "ref_logp";
    case Field::ce: return "ce";
    case Field::freq_logp: return "freq_logp";
    case Field::cond_logp: return "cond_logp";
    case Field::text: return "text_b64";
    case Field::perturbations: return "perturbations";
    case Field::samples: return "samples";
    default: return "";
  }
}

std::optional<Field> parse_field(std::string_view name) {
  for (std::uint32_t bit = 1; bit <= std::uint32_t(Field::samples); bit <<= 1) {
    if (field_name(Field(bit)) == name) return Field(bit);
  }
  if (name == "text" || name == "text_bytes") return Field::text;
  return std::nullopt;
}

std::string field_list(Field set) {
  std::string out;
  for (std::uint32_t bit = 1; bit <= std::uint32_t(Field::samples); bit <<= 1) {
    if (has_field(set, Field(bit))) {
      if (!out.empty()) out += ',';
      out += field_name(Field(bit));
    }
  }
  return out;
}

std::string Violation::to_string() const {
  std::string s = kind == Kind::missing ? "missing:" : "invariant:";
  s += what;
  if (!where.empty()) {
    s += '@';
    s += where;
  }
  return s;
}

namespace {

class ViolationSink {
 public:
  void add(Violation::Kind kind, std::string what, std::string where) {
    for (const auto& v : out_) {
      if (v.kind == kind && v.what == what) return;
    }
    out_.push_back({kind, std::move(what), std::move(where)});
  }
  std::vector<Violation> take() { return std::move(out_); }

 private:
  std::vector<Violation> out_;
};

void check_token(const TokenObservation& t, const std::string& where, Field required,
                 ViolationSink& sink) {
  using K = Violation::Kind;
  if (!std::isfinite(t.logp) || t.logp > 0.0) sink.add(K::invariant, "logp≤0", where);
  if (t.rank < 1) sink.add(K::invariant, "rank≥1", where);

  auto bounded = [&](const std::optional<double>& v, Field f, auto ok, const char* rule) {
    if (v) {
      if (!std::isfinite(*v) || !ok(*v)) sink.add(K::invariant, rule, where);
    } else if (has_field(required, f)) {
      sink.add(K::missing, std::string(field_name(f)), where);
    }
  };
  bounded(t.mu, Field::mu, [](double x) { return x <= 0.0; }, "mu≤0");
  bounded(t.sigma, Field::sigma, [](double x) { return x >= 0.0; }, "sigma≥0");
  bounded(t.ref_logp, Field::ref_logp, [](double x) { return x <= 0.0; }, "ref_logp≤0");
  bounded(t.ce, Field::ce, [](double x) { return x >= 0.0; }, "ce≥0");
  bounded(t.freq_logp, Field::freq_logp, [](double x) { return x < 0.0; }, "freq_logp<0");
  bounded(t.cond_logp, Field::cond_logp, [](double x) { return x <= 0.0; }, "cond_logp≤0");
}

}  // namespace

std::vector<Violation> validate_trace(const DocumentTrace& trace, Field required) {
  using K = Violation::Kind;
  ViolationSink sink;
  if (trace.doc_id.empty()) sink.add(K::invariant, "doc_id non-empty", "");
  if (trace.tokens.empty()) sink.add(K::invariant, "tokens non-empty", "");

  constexpr Field kTokenFields = Field::mu | Field::sigma | Field::ref_logp | Field::ce |
                                 Field::freq_logp | Field::cond_logp;
  const Field token_required = Field(std::uint32_t(required) & std::uint32_t(kTokenFields));
  for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
    check_token(trace.tokens[i], "token" + std::to_string(i), token_required, sink);
  }

  if (has_field(required, Field::text) && !trace.text_bytes) {
    sink.add(K::missing, "text_b64", "");
  }
  if (has_field(required, Field::perturbations) && trace.perturbations.empty()) {
    sink.add(K::missing, "perturbations", "");
  }
  if (has_field(required, Field::samples) && trace.samples.empty()) {
    sink.add(K::missing, "samples", "");
  }

  for (std::size_t j = 0; j < trace.perturbations.size(); ++j) {
    const auto& p = trace.perturbations[j];
    const std::string prefix = "perturbation" + std::to_string(j);
    if (p.empty()) sink.add(K::invariant, "perturbation non-empty", prefix);
    for (std::size_t i = 0; i < p.size(); ++i) {
      check_token(p[i], prefix + ".token" + std::to_string(i), Field::none, sink);
    }
  }

  for (std::size_t j = 0; j < trace.samples.size(); ++j) {
    const auto& s = trace.samples[j];
    const std::string where = "sample" + std::to_string(j);
    if (s.size() != trace.tokens.size()) sink.add(K::invariant, "sample length=n", where);
    for (double v : s) {
      if (!std::isfinite(v) || v > 0.0) {
        sink.add(K::invariant, "sample logp≤0", where);
        break;
      }
    }
  }
  return sink.take();
}

// ---------------------------------------------------------------------------
// Reading

namespace {

[[noreturn]] void schema_error(std::size_t line, const std::string& what) {
  throw ParseError(line, what);
}

double get_number(const json& v, const char* key, std::size_t line) {
  if (!v.is_number()) schema_error(line, std::string("field ") + key + " must be a number");
  return v.get<double>();
}

std::int64_t get_integer(const json& v, const char* key, std::size_t line) {
  if (!v.is_number_integer()) schema_error(line, std::string("field ") + key + " must be an integer");
  return v.get<std::int64_t>();
}

const std::string& get_string(const json& v, const char* key, std::size_t line) {
  if (!v.is_string()) schema_error(line, std::string("field ") + key + " must be a string");
  return v.get_ref<const std::string&>();
}

TokenObservation parse_token(const json& obj, std::size_t line) {
  if (!obj.is_object()) schema_error(line, "token must be an object");
  TokenObservation t;
  bool has_id = false, has_logp = false, has_rank = false;
  for (const auto& [key, v] : obj.items()) {
    if (key == "token_id") {
      auto id = get_integer(v, "token_id", line);
      if (id < 0) schema_error(line, "field token_id must be non-negative");
      t.token_id = std::uint64_t(id);
      has_id = true;
    } else if (key == "logp") {
      t.logp = get_number(v, "logp", line);
      has_logp = true;
    } else if (key == "rank") {
      t.rank = get_integer(v, "rank", line);
      has_rank = true;
    } else if (key == "mu") {
      t.mu = get_number(v, "mu", line);
    } else if (key == "sigma") {
      t.sigma = get_number(v, "sigma", line);
    } else if (key == "ref_logp") {
      t.ref_logp = get_number(v, "ref_logp", line);
    } else if (key == "ce") {
      t.ce = get_number(v, "ce", line);
    } else if (key == "freq_logp") {
      t.freq_logp = get_number(v, "freq_logp", line);
    } else if (key == "cond_logp") {
      t.cond_logp = get_number(v, "cond_logp", line);
    } else {
      schema_error(line, "unknown token field " + key);
    }
  }
  if (!has_id) schema_error(line, "missing required field token_id");
  if (!has_logp) schema_error(line, "missing required field logp");
  if (!has_rank) schema_error(line, "missing required field rank");
  return t;
}

TokenSeq parse_token_array(const json& arr, const char* key, std::size_t line) {
  if (!arr.is_array()) schema_error(line, std::string("field ") + key + " must be an array");
  TokenSeq out;
  out.reserve(arr.size());
  for (const auto& t : arr) out.push_back(parse_token(t, line));
  return out;
}

DocumentTrace parse_document(const json& obj, std::size_t line) {
  if (!obj.is_object()) schema_error(line, "record must be an object");
  DocumentTrace d;
  bool has_id = false, has_label = false, has_domain = false, has_model = false, has_tokens = false;
  for (const auto& [key, v] : obj.items()) {
    if (key == "doc_id") {
      d.doc_id = get_string(v, "doc_id", line);
      has_id = true;
    } else if (key == "label") {
      auto l = parse_label(get_string(v, "label", line));
      if (!l) schema_error(line, "field label has unknown value " + v.get<std::string>());
      d.label = *l;
      has_label = true;
    } else if (key == "domain") {
      d.domain = get_string(v, "domain", line);
      has_domain = true;
    } else if (key == "model_id") {
      d.model_id = get_string(v, "model_id", line);
      has_model = true;
    } else if (key == "text_b64") {
      auto bytes = base64_decode(get_string(v, "text_b64", line));
      if (!bytes) schema_error(line, "field text_b64 is not valid base64");
      d.text_bytes = std::move(*bytes);
    } else if (key == "tokens") {
      d.tokens = parse_token_array(v, "tokens", line);
      has_tokens = true;
    } else if (key == "perturbations") {
      if (!v.is_array()) schema_error(line, "field perturbations must be an array");
      for (const auto& p : v) d.perturbations.push_back(parse_token_array(p, "perturbations", line));
    } else if (key == "samples") {
      if (!v.is_array()) schema_error(line, "field samples must be an array");
      for (const auto& s : v) {
        if (!s.is_array()) schema_error(line, "field samples must hold arrays");
        std::vector<double> series;
        series.reserve(s.size());
        for (const auto& x : s) series.push_back(get_number(x, "samples", line));
        d.samples.push_back(std::move(series));
      }
    } else {
      schema_error(line, "unknown field " + key);
    }
  }
  if (!has_id) schema_error(line, "missing required field doc_id");
  if (!has_label) schema_error(line, "missing required field label");
  if (!has_domain) schema_error(line, "missing required field domain");
  if (!has_model) schema_error(line, "missing required field model_id");
  if (!has_tokens) schema_error(line, "missing required field tokens");
  return d;
}

json parse_json_line(const std::string& text, std::size_t line) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line, std::string("syntax error: ") + e.what());
  }
}

}  // namespace

TraceReader::TraceReader(std::istream& in) : in_(&in) { read_header(); }

TraceReader::TraceReader(const std::string& path)
    : owned_(std::make_unique<std::ifstream>(path, std::ios::binary)), in_(owned_.get()) {
  if (!*owned_) throw IoError("cannot open trace file " + path);
  read_header();
}

TraceReader::~TraceReader() = default;

void TraceReader::read_header() {
  std::string text;
  if (!std::getline(*in_, text)) throw ParseError(1, "missing header line");
  line_no_ = 1;
  json h = parse_json_line(text, line_no_);
  if (!h.is_object()) schema_error(line_no_, "header must be an object");
  bool has_format = false, has_version = false, has_task = false;
  for (const auto& [key, v] : h.items()) {
    if (key == "format") {
      if (get_string(v, "format", line_no_) != "mint-trace") {
        schema_error(line_no_, "header format must be mint-trace");
      }
      has_format = true;
    } else if (key == "version") {
      if (get_integer(v, "version", line_no_) != 1) schema_error(line_no_, "unsupported version");
      has_version = true;
    } else if (key == "task") {
      auto t = parse_task(get_string(v, "task", line_no_));
      if (!t) schema_error(line_no_, "header task must be mia or mgtd");
      task_ = *t;
      has_task = true;
    } else if (key == "metadata") {
      if (!v.is_object()) schema_error(line_no_, "header metadata must be an object");
      for (const auto& [mk, mv] : v.items()) {
        metadata_[mk] = get_string(mv, "metadata", line_no_);
      }
    } else {
      schema_error(line_no_, "unknown header field " + key);
    }
  }
  if (!has_format) schema_error(line_no_, "missing required header field format");
  if (!has_version) schema_error(line_no_, "missing required header field version");
  if (!has_task) schema_error(line_no_, "missing required header field task");
}

std::optional<DocumentTrace> TraceReader::next() {
  std::string text;
  if (!std::getline(*in_, text)) {
    if (in_->bad()) throw IoError("read failure after line " + std::to_string(line_no_));
    return std::nullopt;
  }
  ++line_no_;
  if (!text.empty() && text.back() == '\r') text.pop_back();
  if (text.empty()) schema_error(line_no_, "empty line");

  DocumentTrace d = parse_document(parse_json_line(text, line_no_), line_no_);
  auto violations = validate_trace(d);
  if (!violations.empty()) {
    schema_error(line_no_, "document " + d.doc_id + " violates " + violations.front().to_string());
  }
  if (!label_fits_task(d.label, task_)) {
    schema_error(line_no_, "label " + std::string(to_string(d.label)) + " does not fit task " +
                               std::string(to_string(task_)));
  }
  if (!seen_ids_.insert(d.doc_id).second) {
    schema_error(line_no_, "duplicate doc_id " + d.doc_id);
  }
  return d;
}

TraceSet read_traces(std::istream& in) {
  TraceReader reader(in);
  TraceSet ts;
  ts.task = reader.task();
  ts.metadata = reader.metadata();
  while (auto d = reader.next()) ts.traces.push_back(std::move(*d));
  return ts;
}

TraceSet read_traces_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace file " + path);
  return read_traces(in);
}

// ---------------------------------------------------------------------------
// Writing. Keys in lexicographic order, shortest round-trip floats.

namespace {

void append_opt(std::string& out, const char* key, const std::optional<double>& v) {
  if (!v) return;
  out += ",\"";
  out += key;
  out += "\":";
  append_double(out, *v);
}

void append_token(std::string& out, const TokenObservation& t) {
  // Lexicographic key order: ce, cond_logp, freq_logp, logp, mu, rank,
  // ref_logp, sigma, token_id. The leading comma of the first key is
  // stripped below.
  std::string body;
  append_opt(body, "ce", t.ce);
  append_opt(body, "cond_logp", t.cond_logp);
  append_opt(body, "freq_logp", t.freq_logp);
  body += ",\"logp\":";
  append_double(body, t.logp);
  append_opt(body, "mu", t.mu);
  body += ",\"rank\":";
  body += std::to_string(t.rank);
  append_opt(body, "ref_logp", t.ref_logp);
  append_opt(body, "sigma", t.sigma);
  body += ",\"token_id\":";
  body += std::to_string(t.token_id);
  out += '{';
  out.append(body, 1, std::string::npos);
  out += '}';
}

void append_tokens(std::string& out, const TokenSeq& seq) {
  out += '[';
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ',';
    append_token(out, seq[i]);
  }
  out += ']';
}

}  // namespace

std::string serialize_trace(const DocumentTrace& d) {
  std::string out;
  out.reserve(64 + d.tokens.size() * 96);
  out += "{\"doc_id\":";
  append_json_string(out, d.doc_id);
  out += ",\"domain\":";
  append_json_string(out, d.domain);
  out += ",\"label\":";
  append_json_string(out, to_string(d.label));
  out += ",\"model_id\":";
  append_json_string(out, d.model_id);
  if (!d.perturbations.empty()) {
    out += ",\"perturbations\":[";
    for (std::size_t j = 0; j < d.perturbations.size(); ++j) {
      if (j) out += ',';
      append_tokens(out, d.perturbations[j]);
    }
    out += ']';
  }
  if (!d.samples.empty()) {
    out += ",\"samples\":[";
    for (std::size_t j = 0; j < d.samples.size(); ++j) {
      if (j) out += ',';
      out += '[';
      for (std::size_t i = 0; i < d.samples[j].size(); ++i) {
        if (i) out += ',';
        append_double(out, d.samples[j][i]);
      }
      out += ']';
    }
    out += ']';
  }
  if (d.text_bytes) {
    out += ",\"text_b64\":";
    append_json_string(out, base64_encode(*d.text_bytes));
  }
  out += ",\"tokens\":";
  append_tokens(out, d.tokens);
  out += '}';
  return out;
}

void write_header(std::ostream& out, Task task, const std::map<std::string, std::string>& metadata) {
  std::string h = "{\"format\":\"mint-trace\"";
  if (!metadata.empty()) {
    h += ",\"metadata\":{";
    bool first = true;
    for (const auto& [k, v] : metadata) {
      if (!first) h += ',';
      first = false;
      append_json_string(h, k);
      h += ':';
      append_json_string(h, v);
    }
    h += '}';
  }
  h += ",\"task\":";
  append_json_string(h, to_string(task));
  h += ",\"version\":1}\n";
  out << h;
}

void write_trace(std::ostream& out, const DocumentTrace& trace) {
  out << serialize_trace(trace) << '\n';
}

void write_traces(const TraceSet& ts, std::ostream& out) {
  write_header(out, ts.task, ts.metadata);
  for (const auto& d : ts.traces) write_trace(out, d);
  if (!out) throw IoError("write failure");
}

void write_traces_file(const TraceSet& ts, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_traces(ts, out);
  out.flush();
  if (!out) throw IoError("write failure on " + path);
}

}  // namespace mint
