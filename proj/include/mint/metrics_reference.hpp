#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>

#include "mint/traces.hpp"

// Likelihood-ratio approximations that stand in for the human-text
// distribution with an external reference: a second model, DEFLATE
// compressed length, a unigram table, or cross-model cross-entropy.

namespace mint {

// Laplace-smoothed unigram table: q(t) = (count(t) + 1) / (total + vocab_size).
class FrequencyTable {
 public:
  FrequencyTable(std::unordered_map<std::uint64_t, std::uint64_t> counts, std::uint64_t total,
                 std::uint64_t vocab_size);

  double lookup_logp(std::uint64_t token_id) const;
  std::uint64_t count(std::uint64_t token_id) const;
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t vocab_size() const noexcept { return vocab_size_; }

 private:
  std::unordered_map<std::uint64_t, std::uint64_t> counts_;
  std::uint64_t total_;
  std::uint64_t vocab_size_;
  double log_denominator_;
};

using CountRecord = std::pair<std::uint64_t, std::uint64_t>;

// total = sum of counts. Throws DataError on a repeated token id and
// ConfigError when vocab_size < 1 or a token id falls outside the vocabulary.
FrequencyTable build_freq_table(std::span<const CountRecord> records, std::uint64_t vocab_size);

// Count file: "#vocab_size=<int>" then "token_id<TAB>count" lines.
FrequencyTable read_freq_table(std::istream& in);
FrequencyTable read_freq_table_file(const std::string& path);
void write_freq_table(const FrequencyTable& table, std::span<const CountRecord> records,
                      std::ostream& out);

// Fills freq_logp on every token of every document from `table`. Tokens
// already carrying freq_logp are left alone.
void join_frequencies(DocumentTrace& trace, const FrequencyTable& table);

// DEFLATE level 6, zlib wrapper; result in bits (8 x compressed bytes).
inline constexpr int kZlibLevel = 6;
double zlib_entropy(std::string_view text);

double score_reference(const DocumentTrace& t);
double score_zlib(const DocumentTrace& t);
double score_dcpdd(const DocumentTrace& t);
double score_binoculars(const DocumentTrace& t);

}  // namespace mint
