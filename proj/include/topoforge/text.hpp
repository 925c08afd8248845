#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace topoforge {

// Text helpers shared by the trace grammar, answer matching and report
// writers. All of these are pure and locale-independent.

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);

// Splits on '\n', dropping a trailing '\r' from each line (CRLF input).
std::vector<std::string_view> split_lines(std::string_view text);

// Whitespace-delimited token count; the default "token length" measure.
long whitespace_token_count(std::string_view text);

// Lower-case, collapse whitespace runs to single spaces, trim, and strip
// trailing sentence punctuation (.,!?;:).
std::string normalize_free_text(std::string_view s);

// Parses the whole (trimmed) string as a decimal number, rejecting any
// trailing garbage. Returns nullopt for empty or partial parses.
std::optional<double> parse_decimal(std::string_view s);

// Shortest round-trip decimal representation, deterministic across runs.
std::string format_double(double v);

// FNV-1a 64-bit. Used where a platform-stable hash is required
// (std::hash is not stable across implementations).
std::uint64_t fnv1a64(std::string_view s);

bool is_identifier(std::string_view s);  // [A-Za-z0-9_]+

}  // namespace topoforge
