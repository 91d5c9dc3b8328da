#include "slscan/ply.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "slscan/error.hpp"

namespace slscan {

namespace {

void append_float(std::string& out, float v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), res.ptr);
}

void append_le(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

struct Property {
  std::string name;
  std::string type;
  std::size_t size = 0;
};

std::size_t type_size(const std::string& t) {
  static const std::map<std::string, std::size_t> sizes{
      {"char", 1},  {"uchar", 1},  {"int8", 1},   {"uint8", 1},  {"short", 2},   {"ushort", 2},
      {"int16", 2}, {"uint16", 2}, {"int", 4},    {"uint", 4},   {"int32", 4},   {"uint32", 4},
      {"float", 4}, {"float32", 4}, {"double", 8}, {"float64", 8}};
  const auto it = sizes.find(t);
  if (it == sizes.end()) throw DataError("PLY: unsupported property type '" + t + "'");
  return it->second;
}

double decode_le(const unsigned char* p, const std::string& t) {
  std::uint64_t raw = 0;
  const std::size_t n = type_size(t);
  for (std::size_t b = 0; b < n; ++b) raw |= std::uint64_t(p[b]) << (8 * b);
  if (t == "float" || t == "float32") return std::bit_cast<float>(static_cast<std::uint32_t>(raw));
  if (t == "double" || t == "float64") return std::bit_cast<double>(raw);
  if (t == "char" || t == "int8") return static_cast<std::int8_t>(raw);
  if (t == "short" || t == "int16") return static_cast<std::int16_t>(raw);
  if (t == "int" || t == "int32") return static_cast<std::int32_t>(raw);
  return static_cast<double>(raw);
}

}  // namespace

std::string encode_ply(const PointCloud& cloud, PlyFormat format, const std::vector<std::string>& comments) {
  std::string out = "ply\nformat ";
  out += format == PlyFormat::ascii ? "ascii" : "binary_little_endian";
  out += " 1.0\n";
  for (const auto& c : comments) {
    if (c.find('\n') != std::string::npos) throw ConfigError("PLY comments must be single lines");
    out += "comment " + c + "\n";
  }
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\nproperty float u_c\nproperty float v_c\n";
  if (cloud.has_intensity) out += "property float intensity\n";
  out += "end_header\n";
  for (const auto& p : cloud.points) {
    const std::array<float, 6> v{static_cast<float>(p.position.x()), static_cast<float>(p.position.y()),
                                 static_cast<float>(p.position.z()), p.u_c, p.v_c, p.intensity};
    const std::size_t n = cloud.has_intensity ? 6 : 5;
    for (std::size_t i = 0; i < n; ++i) {
      if (format == PlyFormat::ascii) {
        if (i) out.push_back(' ');
        append_float(out, v[i]);
      } else {
        append_le(out, v[i]);
      }
    }
    if (format == PlyFormat::ascii) out.push_back('\n');
  }
  return out;
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, PlyFormat format,
               const std::vector<std::string>& comments) {
  const std::string bytes = encode_ply(cloud, format, comments);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

PlyFile decode_ply(const std::string& bytes) {
  PlyFile file;
  std::size_t pos = 0;
  auto next_line = [&]() {
    const std::size_t end = bytes.find('\n', pos);
    if (end == std::string::npos) throw DataError("PLY: header is not terminated");
    std::string line = bytes.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    return line;
  };
  if (next_line() != "ply") throw DataError("PLY: missing magic");
  bool have_format = false;
  std::size_t vertex_count = 0;
  bool in_vertex = false;
  bool seen_vertex = false;
  std::vector<Property> props;
  for (;;) {
    const std::string line = next_line();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "end_header") break;
    if (key == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii") {
        file.format = PlyFormat::ascii;
      } else if (fmt == "binary_little_endian") {
        file.format = PlyFormat::binary_little_endian;
      } else {
        throw DataError("PLY: unsupported format '" + fmt + "'");
      }
      have_format = true;
    } else if (key == "comment") {
      file.comments.push_back(line.size() > 8 ? line.substr(8) : std::string());
    } else if (key == "element") {
      std::string name;
      long long count = -1;
      ls >> name >> count;
      if (count < 0) throw DataError("PLY: malformed element line");
      in_vertex = name == "vertex";
      if (in_vertex) {
        vertex_count = static_cast<std::size_t>(count);
        seen_vertex = true;
      } else if (!seen_vertex && count > 0) {
        throw DataError("PLY: element '" + name + "' before the vertex element is not supported");
      }
    } else if (key == "property") {
      std::string type, name;
      ls >> type >> name;
      if (type == "list") {
        if (in_vertex) throw DataError("PLY: list properties on vertices are not supported");
        continue;
      }
      if (in_vertex) props.push_back({name, type, type_size(type)});
    } else if (key == "obj_info" || key.empty()) {
      continue;
    } else {
      throw DataError("PLY: unexpected header line '" + line + "'");
    }
  }
  if (!have_format) throw DataError("PLY: missing format line");
  if (!seen_vertex) throw DataError("PLY: no vertex element");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < props.size(); ++i) index[props[i].name] = i;
  for (const char* required : {"x", "y", "z"}) {
    if (!index.count(required)) throw DataError(std::string("PLY: missing vertex property '") + required + "'");
  }
  auto slot = [&](const char* name) { return index.count(name) ? static_cast<long>(index[name]) : -1L; };
  const long iu = slot("u_c");
  const long iv = slot("v_c");
  const long ii = slot("intensity");
  file.cloud.has_intensity = ii >= 0;
  file.cloud.points.reserve(vertex_count);

  std::vector<double> values(props.size());
  std::size_t stride = 0;
  for (const auto& p : props) stride += p.size;
  std::istringstream ascii_body;
  if (file.format == PlyFormat::ascii) {
    ascii_body.str(bytes.substr(pos));
  } else if (bytes.size() - pos < stride * vertex_count) {
    throw DataError("PLY: truncated binary body");
  }
  for (std::size_t v = 0; v < vertex_count; ++v) {
    if (file.format == PlyFormat::ascii) {
      for (std::size_t i = 0; i < props.size(); ++i) {
        std::string token;
        if (!(ascii_body >> token)) throw DataError("PLY: truncated ASCII body");
        const char* end = token.data() + token.size();
        std::from_chars_result res;
        if (props[i].size == 4 && (props[i].type == "float" || props[i].type == "float32")) {
          // Parse at the declared width so values match the binary encoding.
          float f = 0.0f;
          res = std::from_chars(token.data(), end, f);
          values[i] = f;
        } else {
          res = std::from_chars(token.data(), end, values[i]);
        }
        if (res.ec != std::errc() || res.ptr != end) throw DataError("PLY: bad number '" + token + "'");
      }
    } else {
      const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
      for (std::size_t i = 0; i < props.size(); ++i) {
        values[i] = decode_le(p, props[i].type);
        p += props[i].size;
      }
      pos += stride;
    }
    CloudPoint cp;
    cp.position = Vec3(values[index["x"]], values[index["y"]], values[index["z"]]);
    if (iu >= 0) cp.u_c = static_cast<float>(values[static_cast<std::size_t>(iu)]);
    if (iv >= 0) cp.v_c = static_cast<float>(values[static_cast<std::size_t>(iv)]);
    if (ii >= 0) cp.intensity = static_cast<float>(values[static_cast<std::size_t>(ii)]);
    file.cloud.points.push_back(cp);
  }
  return file;
}

PlyFile read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_ply(ss.str());
}

}  // namespace slscan
