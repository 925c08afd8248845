#pragma once

#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace topoforge {

// Deterministic file IO. JSONL rows use ordered_json so key order (and thus
// output bytes) depends only on construction order, never on hashing.
using Json = nlohmann::ordered_json;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Writes to a sibling temp file then renames, so readers never observe a
// partially written file.
void write_file_atomic(const std::string& path, std::string_view content);

std::vector<Json> read_jsonl(const std::string& path);
std::string to_jsonl(const std::vector<Json>& rows);
void write_jsonl(const std::string& path, const std::vector<Json>& rows);

// Hex SHA-256 of arbitrary bytes (content addressing for the response cache
// and digest comparison in tests).
std::string sha256_hex(std::string_view bytes);

}  // namespace topoforge
