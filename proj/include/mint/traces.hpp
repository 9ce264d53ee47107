#pragma once

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace mint {

enum class Task { mia, mgtd };

enum class Label { member, nonmember, human, machine, unlabeled };

std::string_view to_string(Task task);
std::string_view to_string(Label label);
std::optional<Task> parse_task(std::string_view s);
std::optional<Label> parse_label(std::string_view s);

// True for the alternative hypothesis of either task (member / machine).
constexpr bool is_positive(Label label) {
  return label == Label::member || label == Label::machine;
}
bool label_fits_task(Label label, Task task);

// Per-position sufficient statistics. Log quantities are in nats.
struct TokenObservation {
  std::uint64_t token_id = 0;
  double logp = 0.0;
  std::int64_t rank = 1;
  std::optional<double> mu;
  std::optional<double> sigma;
  std::optional<double> ref_logp;
  std::optional<double> ce;
  std::optional<double> freq_logp;
  std::optional<double> cond_logp;

  friend bool operator==(const TokenObservation&, const TokenObservation&) = default;
};

using TokenSeq = std::vector<TokenObservation>;

struct DocumentTrace {
  std::string doc_id;
  Label label = Label::unlabeled;
  std::string domain;
  std::string model_id;
  std::optional<std::string> text_bytes;
  TokenSeq tokens;
  std::vector<TokenSeq> perturbations;
  std::vector<std::vector<double>> samples;

  std::size_t size() const noexcept { return tokens.size(); }

  friend bool operator==(const DocumentTrace&, const DocumentTrace&) = default;
};

struct TraceSet {
  Task task = Task::mia;
  std::vector<DocumentTrace> traces;
  std::map<std::string, std::string> metadata;

  friend bool operator==(const TraceSet&, const TraceSet&) = default;
};

// Optional fields a method can demand of a trace. Bit flags.
enum class Field : std::uint32_t {
  none = 0,
  mu = 1u << 0,
  sigma = 1u << 1,
  ref_logp = 1u << 2,
  ce = 1u << 3,
  freq_logp = 1u << 4,
  cond_logp = 1u << 5,
  text = 1u << 6,
  perturbations = 1u << 7,
  samples = 1u << 8,
};

constexpr Field operator|(Field a, Field b) {
  return Field(std::uint32_t(a) | std::uint32_t(b));
}
constexpr bool has_field(Field set, Field f) {
  return (std::uint32_t(set) & std::uint32_t(f)) != 0;
}
constexpr Field kAllFields = Field::mu | Field::sigma | Field::ref_logp | Field::ce |
                             Field::freq_logp | Field::cond_logp | Field::text |
                             Field::perturbations | Field::samples;

// Wire name of a field ("text_b64" for text).
std::string_view field_name(Field f);
std::optional<Field> parse_field(std::string_view name);
// Comma-separated wire names, in bit order.
std::string field_list(Field set);

struct Violation {
  enum class Kind { missing, invariant };
  Kind kind;
  std::string what;  // field name, or the invariant text such as "sigma>=0"
  std::string where; // "token3", "perturbation1.token0", "sample2", or ""

  std::string to_string() const;
  friend bool operator==(const Violation&, const Violation&) = default;
};

// Empty iff every invariant holds and every required field is present on
// every token. At most one violation is reported per (kind, what) pair.
std::vector<Violation> validate_trace(const DocumentTrace& trace, Field required = Field::none);

// Streaming reader: holds one document in memory at a time.
class TraceReader {
 public:
  explicit TraceReader(std::istream& in);
  explicit TraceReader(const std::string& path);
  ~TraceReader();

  TraceReader(const TraceReader&) = delete;
  TraceReader& operator=(const TraceReader&) = delete;

  Task task() const noexcept { return task_; }
  const std::map<std::string, std::string>& metadata() const noexcept { return metadata_; }

  // Next document, or nullopt at end of input. Throws ParseError with the
  // 1-based line number on the first malformed line.
  std::optional<DocumentTrace> next();

 private:
  void read_header();

  std::unique_ptr<std::ifstream> owned_;
  std::istream* in_;
  std::size_t line_no_ = 0;
  Task task_ = Task::mia;
  std::map<std::string, std::string> metadata_;
  std::unordered_set<std::string> seen_ids_;
};

TraceSet read_traces(std::istream& in);
TraceSet read_traces_file(const std::string& path);

void write_header(std::ostream& out, Task task, const std::map<std::string, std::string>& metadata);
void write_trace(std::ostream& out, const DocumentTrace& trace);
void write_traces(const TraceSet& ts, std::ostream& out);
void write_traces_file(const TraceSet& ts, const std::string& path);

// Canonical single-line serialization of one document (no trailing newline).
std::string serialize_trace(const DocumentTrace& trace);

}  // namespace mint
