#include "mint/metrics_reference.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include <zlib.h>

#include "mint/error.hpp"

namespace mint {

FrequencyTable::FrequencyTable(std::unordered_map<std::uint64_t, std::uint64_t> counts,
                               std::uint64_t total, std::uint64_t vocab_size)
    : counts_(std::move(counts)),
      total_(total),
      vocab_size_(vocab_size),
      log_denominator_(std::log(double(total) + double(vocab_size))) {
  if (vocab_size_ < 1) throw ConfigError("vocab_size must be at least 1");
}

std::uint64_t FrequencyTable::count(std::uint64_t token_id) const {
  auto it = counts_.find(token_id);
  return it == counts_.end() ? 0 : it->second;
}

double FrequencyTable::lookup_logp(std::uint64_t token_id) const {
  return std::log(double(count(token_id)) + 1.0) - log_denominator_;
}

FrequencyTable build_freq_table(std::span<const CountRecord> records, std::uint64_t vocab_size) {
  if (vocab_size < 1) throw ConfigError("vocab_size must be at least 1");
  std::unordered_map<std::uint64_t, std::uint64_t> counts;
  counts.reserve(records.size());
  std::uint64_t total = 0;
  for (const auto& [id, c] : records) {
    if (id >= vocab_size) {
      throw ConfigError("token id " + std::to_string(id) + " outside vocabulary of size " +
                        std::to_string(vocab_size));
    }
    if (!counts.emplace(id, c).second) {
      throw DataError("duplicate token_id " + std::to_string(id) + " in count stream");
    }
    total += c;
  }
  return FrequencyTable(std::move(counts), total, vocab_size);
}

namespace {

template <typename T>
bool parse_uint(std::string_view s, T& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

FrequencyTable read_freq_table(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::uint64_t vocab_size = 0;
  bool have_header = false;
  std::vector<CountRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      constexpr std::string_view kKey = "#vocab_size=";
      if (line.rfind(kKey, 0) == 0) {
        if (!parse_uint(std::string_view(line).substr(kKey.size()), vocab_size)) {
          throw ParseError(line_no, "bad vocab_size header");
        }
        have_header = true;
      }
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(line_no, "expected token_id<TAB>count");
    CountRecord r;
    if (!parse_uint(std::string_view(line).substr(0, tab), r.first) ||
        !parse_uint(std::string_view(line).substr(tab + 1), r.second)) {
      throw ParseError(line_no, "token_id and count must be non-negative integers");
    }
    records.push_back(r);
  }
  if (!have_header) throw ParseError(1, "missing #vocab_size= header");
  return build_freq_table(records, vocab_size);
}

FrequencyTable read_freq_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open count file " + path);
  return read_freq_table(in);
}

void write_freq_table(const FrequencyTable& table, std::span<const CountRecord> records,
                      std::ostream& out) {
  out << "#vocab_size=" << table.vocab_size() << '\n';
  for (const auto& [id, c] : records) out << id << '\t' << c << '\n';
}

void join_frequencies(DocumentTrace& trace, const FrequencyTable& table) {
  for (auto& tok : trace.tokens) {
    if (!tok.freq_logp) tok.freq_logp = table.lookup_logp(tok.token_id);
  }
}

double zlib_entropy(std::string_view text) {
  if (text.empty()) throw DataError("zlib entropy of empty text");
  uLongf dest_len = compressBound(uLong(text.size()));
  std::vector<Bytef> dest(dest_len);
  int rc = compress2(dest.data(), &dest_len, reinterpret_cast<const Bytef*>(text.data()),
                     uLong(text.size()), kZlibLevel);
  if (rc != Z_OK) throw Error(ErrorKind::internal, "zlib compress2 failed");
  return 8.0 * double(dest_len);
}

double score_reference(const DocumentTrace& t) {
  if (t.tokens.empty()) throw DataError("document " + t.doc_id + " has no tokens");
  double sum = 0.0;
  for (const auto& tok : t.tokens) {
    if (!tok.ref_logp) throw UnsupportedMethodError("reference", "ref_logp");
    sum += tok.logp - *tok.ref_logp;
  }
  return sum / double(t.tokens.size());
}

double score_zlib(const DocumentTrace& t) {
  if (!t.text_bytes) throw UnsupportedMethodError("zlib", "text_b64");
  if (t.tokens.empty()) throw DataError("document " + t.doc_id + " has no tokens");
  double total_nll = 0.0;
  for (const auto& tok : t.tokens) total_nll -= tok.logp;
  return -(total_nll / zlib_entropy(*t.text_bytes));
}

double score_dcpdd(const DocumentTrace& t) {
  if (t.tokens.empty()) throw DataError("document " + t.doc_id + " has no tokens");
  double sum = 0.0;
  for (const auto& tok : t.tokens) {
    if (!tok.freq_logp) throw UnsupportedMethodError("dcpdd", "freq_logp");
    sum += std::exp(tok.logp) * *tok.freq_logp;
  }
  return -(sum / double(t.tokens.size()));
}

double score_binoculars(const DocumentTrace& t) {
  if (t.tokens.empty()) throw DataError("document " + t.doc_id + " has no tokens");
  double nll = 0.0;
  double ce = 0.0;
  for (const auto& tok : t.tokens) {
    if (!tok.ce) throw UnsupportedMethodError("binoculars", "ce");
    nll -= tok.logp;
    ce += *tok.ce;
  }
  if (!(ce > 0.0)) {
    throw DegenerateError("binoculars: cross-entropy of document " + t.doc_id + " sums to zero");
  }
  return -(nll / ce);
}

}  // namespace mint
