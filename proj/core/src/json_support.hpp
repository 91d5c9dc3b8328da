#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "slscan/error.hpp"
#include "slscan/patterns.hpp"

namespace slscan::detail {

std::string read_text(const std::filesystem::path& path, ErrorKind missing_kind);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Parses JSON, raising `kind` errors prefixed with `what`.
nlohmann::json parse_json(const std::string& text, const std::string& what, ErrorKind kind);

nlohmann::json to_json(const PatternSpec& spec);
/// Missing fields keep their defaults.
PatternSpec pattern_spec_from(const nlohmann::json& j);

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

}  // namespace slscan::detail
