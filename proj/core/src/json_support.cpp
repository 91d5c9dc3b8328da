#include "json_support.hpp"

#include <fstream>
#include <sstream>

namespace slscan::detail {

void raise(ErrorKind kind, const std::string& message) {
  switch (kind) {
    case ErrorKind::config:
      throw ConfigError(message);
    case ErrorKind::data:
      throw DataError(message);
    case ErrorKind::numerical:
      break;
  }
  throw NumericalError(message);
}

std::string read_text(const std::filesystem::path& path, ErrorKind missing_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(missing_kind, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

nlohmann::json parse_json(const std::string& text, const std::string& what, ErrorKind kind) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(kind, what + ": " + e.what());
  }
}

nlohmann::json to_json(const PatternSpec& spec) {
  return {{"orientation", to_string(spec.orientation)},
          {"steps", spec.steps},
          {"n_fringe", spec.n_fringe},
          {"projector_width", spec.projector_width},
          {"projector_height", spec.projector_height}};
}

PatternSpec pattern_spec_from(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("pattern: expected an object");
  PatternSpec s;
  try {
    if (j.contains("orientation")) s.orientation = orientation_from_string(j.at("orientation").get<std::string>());
    s.steps = j.value("steps", s.steps);
    s.n_fringe = j.value("n_fringe", s.n_fringe);
    s.projector_width = j.value("projector_width", s.projector_width);
    s.projector_height = j.value("projector_height", s.projector_height);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("pattern: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace slscan::detail
