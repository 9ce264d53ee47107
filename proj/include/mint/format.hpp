#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace mint {

// Shortest decimal string that parses back to exactly `value`.
// Non-finite values are rejected with DataError.
std::string format_double(double value);
void append_double(std::string& out, double value);

// JSON string literal with escapes, including the surrounding quotes.
void append_json_string(std::string& out, std::string_view s);

std::string base64_encode(std::string_view bytes);
// Returns nullopt on malformed input (bad alphabet, bad padding, bad length).
std::optional<std::string> base64_decode(std::string_view text);

}  // namespace mint
