#include "pcsketch/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

namespace pcsketch {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

void finish_write(std::ostream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t b = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view tok) {
  T value{};
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && tok.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

// --------------------------------------------------------------------------
// PLY
// --------------------------------------------------------------------------

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Int64, UInt64, Float32, Float64 };

std::optional<PlyType> ply_type(std::string_view s) {
  if (s == "char" || s == "int8") return PlyType::Int8;
  if (s == "uchar" || s == "uint8") return PlyType::UInt8;
  if (s == "short" || s == "int16") return PlyType::Int16;
  if (s == "ushort" || s == "uint16") return PlyType::UInt16;
  if (s == "int" || s == "int32") return PlyType::Int32;
  if (s == "uint" || s == "uint32") return PlyType::UInt32;
  if (s == "int64") return PlyType::Int64;
  if (s == "uint64") return PlyType::UInt64;
  if (s == "float" || s == "float32") return PlyType::Float32;
  if (s == "double" || s == "float64") return PlyType::Float64;
  return std::nullopt;
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::Int8: case PlyType::UInt8: return 1;
    case PlyType::Int16: case PlyType::UInt16: return 2;
    case PlyType::Int32: case PlyType::UInt32: case PlyType::Float32: return 4;
    case PlyType::Int64: case PlyType::UInt64: case PlyType::Float64: return 8;
  }
  return 0;
}

bool is_float(PlyType t) { return t == PlyType::Float32 || t == PlyType::Float64; }

struct PlyProperty {
  std::string name;
  PlyType type;
  bool is_list = false;
  PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

/// A property value kept both as double and, for integer types, exactly.
struct PlyValue {
  double real = 0.0;
  std::uint64_t uint = 0;
  bool negative = false;
};

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

template <typename T>
void store_le(std::ostream& out, T v) {
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

PlyValue decode_binary(PlyType t, const char* p) {
  PlyValue v;
  auto set_signed = [&](std::int64_t x) {
    v.real = static_cast<double>(x);
    v.negative = x < 0;
    v.uint = static_cast<std::uint64_t>(x);
  };
  auto set_unsigned = [&](std::uint64_t x) {
    v.real = static_cast<double>(x);
    v.uint = x;
  };
  switch (t) {
    case PlyType::Int8: set_signed(load_le<std::int8_t>(p)); break;
    case PlyType::UInt8: set_unsigned(load_le<std::uint8_t>(p)); break;
    case PlyType::Int16: set_signed(load_le<std::int16_t>(p)); break;
    case PlyType::UInt16: set_unsigned(load_le<std::uint16_t>(p)); break;
    case PlyType::Int32: set_signed(load_le<std::int32_t>(p)); break;
    case PlyType::UInt32: set_unsigned(load_le<std::uint32_t>(p)); break;
    case PlyType::Int64: set_signed(load_le<std::int64_t>(p)); break;
    case PlyType::UInt64: set_unsigned(load_le<std::uint64_t>(p)); break;
    case PlyType::Float32: v.real = static_cast<double>(load_le<float>(p)); break;
    case PlyType::Float64: v.real = load_le<double>(p); break;
  }
  return v;
}

PlyValue decode_ascii(PlyType t, std::string_view tok) {
  PlyValue v;
  if (is_float(t)) {
    const auto d = parse_number<double>(tok);
    if (!d) throw Error(ErrorCode::ParseError, "bad PLY number '" + std::string(tok) + "'");
    v.real = t == PlyType::Float32 ? static_cast<double>(static_cast<float>(*d)) : *d;
    return v;
  }
  if (!tok.empty() && tok.front() == '-') {
    const auto i = parse_number<std::int64_t>(tok);
    if (!i) throw Error(ErrorCode::ParseError, "bad PLY integer '" + std::string(tok) + "'");
    v.real = static_cast<double>(*i);
    v.negative = true;
    v.uint = static_cast<std::uint64_t>(*i);
    return v;
  }
  const auto u = parse_number<std::uint64_t>(tok);
  if (!u) throw Error(ErrorCode::ParseError, "bad PLY integer '" + std::string(tok) + "'");
  v.real = static_cast<double>(*u);
  v.uint = *u;
  return v;
}

std::uint8_t to_color(PlyType t, const PlyValue& v) {
  if (is_float(t)) return static_cast<std::uint8_t>(std::lround(std::clamp(v.real, 0.0, 1.0) * 255.0));
  if (v.negative) return 0;
  return static_cast<std::uint8_t>(std::min<std::uint64_t>(v.uint, 255));
}

struct PlyHeader {
  bool binary = false;
  std::vector<PlyElement> elements;
};

PlyHeader read_ply_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "ply") {
    throw Error(ErrorCode::ParseError, "missing 'ply' magic");
  }
  PlyHeader h;
  bool have_format = false;
  while (true) {
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "PLY header not terminated");
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    const auto key = toks[0];
    if (key == "end_header") break;
    if (key == "comment" || key == "obj_info") continue;
    if (key == "format") {
      if (toks.size() < 2) throw Error(ErrorCode::ParseError, "bad format line");
      if (toks[1] == "ascii") {
        h.binary = false;
      } else if (toks[1] == "binary_little_endian") {
        h.binary = true;
      } else if (toks[1] == "binary_big_endian") {
        throw Error(ErrorCode::UnsupportedFormat, "big-endian PLY is not supported");
      } else {
        throw Error(ErrorCode::ParseError, "unknown PLY format '" + std::string(toks[1]) + "'");
      }
      have_format = true;
    } else if (key == "element") {
      if (toks.size() != 3) throw Error(ErrorCode::ParseError, "bad element line");
      const auto n = parse_number<std::size_t>(toks[2]);
      if (!n) throw Error(ErrorCode::ParseError, "bad element count");
      h.elements.push_back({std::string(toks[1]), *n, {}});
    } else if (key == "property") {
      if (h.elements.empty()) throw Error(ErrorCode::ParseError, "property before element");
      PlyProperty prop;
      if (toks.size() == 5 && toks[1] == "list") {
        const auto ct = ply_type(toks[2]);
        const auto it = ply_type(toks[3]);
        if (!ct || !it || is_float(*ct)) throw Error(ErrorCode::ParseError, "bad list property");
        prop = {std::string(toks[4]), *it, true, *ct};
      } else if (toks.size() == 3) {
        const auto t = ply_type(toks[1]);
        if (!t) throw Error(ErrorCode::ParseError, "unknown PLY type '" + std::string(toks[1]) + "'");
        prop = {std::string(toks[2]), *t};
      } else {
        throw Error(ErrorCode::ParseError, "bad property line");
      }
      h.elements.back().properties.push_back(prop);
    } else {
      throw Error(ErrorCode::ParseError, "unexpected PLY header line '" + line + "'");
    }
  }
  if (!have_format) throw Error(ErrorCode::ParseError, "PLY header has no format line");
  return h;
}

struct VertexLayout {
  int x = -1, y = -1, z = -1, r = -1, g = -1, b = -1, id = -1;
};

VertexLayout vertex_layout(const PlyElement& e) {
  VertexLayout l;
  for (std::size_t i = 0; i < e.properties.size(); ++i) {
    const auto& p = e.properties[i];
    const int idx = static_cast<int>(i);
    if (p.is_list) continue;
    if (p.name == "x") l.x = idx;
    else if (p.name == "y") l.y = idx;
    else if (p.name == "z") l.z = idx;
    else if (p.name == "red") l.r = idx;
    else if (p.name == "green") l.g = idx;
    else if (p.name == "blue") l.b = idx;
    else if (p.name == "id" && !is_float(p.type)) l.id = idx;
  }
  if (l.x < 0 || l.y < 0 || l.z < 0) {
    throw Error(ErrorCode::UnsupportedFormat, "vertex element lacks x/y/z properties");
  }
  return l;
}

Point make_point(const PlyElement& e, const VertexLayout& l, const std::vector<PlyValue>& vals,
                 std::size_t ordinal) {
  Point p;
  p.id = l.id >= 0 ? vals[l.id].uint : ordinal;
  p.position = {vals[l.x].real, vals[l.y].real, vals[l.z].real};
  if (l.r >= 0) p.color.r = to_color(e.properties[l.r].type, vals[l.r]);
  if (l.g >= 0) p.color.g = to_color(e.properties[l.g].type, vals[l.g]);
  if (l.b >= 0) p.color.b = to_color(e.properties[l.b].type, vals[l.b]);
  return p;
}

std::vector<Point> read_ply_binary(std::istream& in, const PlyHeader& h) {
  const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > body.size()) throw Error(ErrorCode::ParseError, "PLY body is truncated");
  };
  std::vector<Point> points;
  bool seen_vertex = false;
  for (const PlyElement& e : h.elements) {
    const bool is_vertex = e.name == "vertex" && !seen_vertex;
    VertexLayout layout;
    if (is_vertex) {
      layout = vertex_layout(e);
      seen_vertex = true;
      points.reserve(e.count);
    }
    std::vector<PlyValue> vals(e.properties.size());
    for (std::size_t n = 0; n < e.count; ++n) {
      for (std::size_t i = 0; i < e.properties.size(); ++i) {
        const PlyProperty& p = e.properties[i];
        if (p.is_list) {
          need(ply_size(p.count_type));
          const PlyValue count = decode_binary(p.count_type, body.data() + pos);
          pos += ply_size(p.count_type);
          if (count.negative) throw Error(ErrorCode::ParseError, "negative list length");
          need(count.uint * ply_size(p.type));
          pos += count.uint * ply_size(p.type);
        } else {
          need(ply_size(p.type));
          vals[i] = decode_binary(p.type, body.data() + pos);
          pos += ply_size(p.type);
        }
      }
      if (is_vertex) points.push_back(make_point(e, layout, vals, n));
    }
  }
  if (!seen_vertex) throw Error(ErrorCode::UnsupportedFormat, "PLY has no vertex element");
  return points;
}

std::vector<Point> read_ply_ascii(std::istream& in, const PlyHeader& h) {
  const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto toks = split_ws(body);
  std::size_t pos = 0;
  auto next = [&]() -> std::string_view {
    if (pos >= toks.size()) throw Error(ErrorCode::ParseError, "PLY body is truncated");
    return toks[pos++];
  };
  std::vector<Point> points;
  bool seen_vertex = false;
  for (const PlyElement& e : h.elements) {
    const bool is_vertex = e.name == "vertex" && !seen_vertex;
    VertexLayout layout;
    if (is_vertex) {
      layout = vertex_layout(e);
      seen_vertex = true;
      points.reserve(e.count);
    }
    std::vector<PlyValue> vals(e.properties.size());
    for (std::size_t n = 0; n < e.count; ++n) {
      for (std::size_t i = 0; i < e.properties.size(); ++i) {
        const PlyProperty& p = e.properties[i];
        if (p.is_list) {
          const PlyValue count = decode_ascii(p.count_type, next());
          if (count.negative) throw Error(ErrorCode::ParseError, "negative list length");
          for (std::uint64_t k = 0; k < count.uint; ++k) decode_ascii(p.type, next());
        } else {
          vals[i] = decode_ascii(p.type, next());
        }
      }
      if (is_vertex) points.push_back(make_point(e, layout, vals, n));
    }
  }
  if (!seen_vertex) throw Error(ErrorCode::UnsupportedFormat, "PLY has no vertex element");
  return points;
}

void append_float(std::string& s, float v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  s.append(buf, res.ptr);
}

}  // namespace

PointCloud read_ply(std::istream& in) {
  const PlyHeader header = read_ply_header(in);
  auto points = header.binary ? read_ply_binary(in, header) : read_ply_ascii(in, header);
  try {
    return PointCloud(std::move(points));
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

PointCloud read_ply(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_ply(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_ply(const PointCloud& cloud, std::ostream& out, const PlyWriteOptions& options) {
  const bool binary = options.format == PlyFormat::BinaryLittleEndian;
  std::string header = "ply\n";
  header += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
  header += "element vertex " + std::to_string(cloud.size()) + "\n";
  header +=
      "property float x\nproperty float y\nproperty float z\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (options.write_ids) header += "property uint64 id\n";
  header += "end_header\n";
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  if (binary) {
    for (const Point& p : cloud) {
      for (int i = 0; i < 3; ++i) store_le(out, static_cast<float>(p.position[i]));
      store_le(out, p.color.r);
      store_le(out, p.color.g);
      store_le(out, p.color.b);
      if (options.write_ids) store_le(out, static_cast<std::uint64_t>(p.id));
    }
    return;
  }
  std::string line;
  for (const Point& p : cloud) {
    line.clear();
    for (int i = 0; i < 3; ++i) {
      append_float(line, static_cast<float>(p.position[i]));
      line += ' ';
    }
    line += std::to_string(p.color.r) + ' ' + std::to_string(p.color.g) + ' ' +
            std::to_string(p.color.b);
    if (options.write_ids) line += ' ' + std::to_string(p.id);
    line += '\n';
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path,
               const PlyWriteOptions& options) {
  auto out = open_out(path);
  write_ply(cloud, out, options);
  finish_write(out, path);
}

// --------------------------------------------------------------------------
// OBJ
// --------------------------------------------------------------------------

TriangleMesh read_obj(std::istream& in) {
  TriangleMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "v") {
      if (toks.size() < 4) throw LineError(ErrorCode::ParseError, line_no, "vertex needs 3 coordinates");
      Vec3 v;
      for (int i = 0; i < 3; ++i) {
        const auto d = parse_number<double>(toks[i + 1]);
        if (!d || !std::isfinite(*d)) throw LineError(ErrorCode::ParseError, line_no, "bad vertex coordinate");
        v[i] = *d;
      }
      mesh.vertices.push_back(v);
    } else if (toks[0] == "f") {
      if (toks.size() < 4) throw LineError(ErrorCode::ParseError, line_no, "face needs at least 3 vertices");
      std::vector<std::uint32_t> idx;
      for (std::size_t i = 1; i < toks.size(); ++i) {
        const auto head = toks[i].substr(0, toks[i].find('/'));
        const auto raw = parse_number<long long>(head);
        if (!raw || *raw == 0) throw LineError(ErrorCode::ParseError, line_no, "bad face index");
        const long long n = static_cast<long long>(mesh.vertices.size());
        const long long resolved = *raw > 0 ? *raw - 1 : n + *raw;
        if (resolved < 0 || resolved >= n) {
          throw LineError(ErrorCode::ParseError, line_no,
                          "face index " + std::to_string(*raw) + " out of range");
        }
        idx.push_back(static_cast<std::uint32_t>(resolved));
      }
      for (std::size_t i = 1; i + 1 < idx.size(); ++i) {
        mesh.triangles.push_back({idx[0], idx[i], idx[i + 1]});
      }
    }
  }
  validate_mesh(mesh);
  if (mesh.empty()) throw Error(ErrorCode::EmptyMesh, "OBJ contains no faces");
  return mesh;
}

TriangleMesh read_obj(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_obj(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  auto out = open_out(path);
  char buf[64];
  for (const Vec3& v : mesh.vertices) {
    std::string line = "v";
    for (int i = 0; i < 3; ++i) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v[i]);
      line += ' ';
      line.append(buf, res.ptr);
    }
    out << line << '\n';
  }
  for (const Triangle& t : mesh.triangles) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
  finish_write(out, path);
}

// --------------------------------------------------------------------------
// Trajectories
// --------------------------------------------------------------------------

std::vector<TrajectorySample> read_trajectory(std::istream& in) {
  std::vector<TrajectorySample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto toks = split_ws(body);
    if (toks.size() != 8) throw LineError(ErrorCode::ParseError, line_no, "expected 8 fields");
    double v[8];
    for (int i = 0; i < 8; ++i) {
      const auto d = parse_number<double>(toks[i]);
      if (!d || !std::isfinite(*d)) throw LineError(ErrorCode::ParseError, line_no, "bad number");
      v[i] = *d;
    }
    Eigen::Quaterniond q(v[4], v[5], v[6], v[7]);
    if (std::abs(q.norm() - 1.0) > 1e-3) {
      throw LineError(ErrorCode::InvalidRotation, line_no, "quaternion norm is not 1");
    }
    if (!samples.empty() && !(v[0] > samples.back().timestamp)) {
      throw LineError(ErrorCode::NonMonotonicTime, line_no, "timestamps must strictly increase");
    }
    samples.push_back({v[0], Pose(q.normalized(), Vec3(v[1], v[2], v[3]))});
  }
  return samples;
}

std::vector<TrajectorySample> read_trajectory(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_trajectory(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_trajectory(const std::vector<TrajectorySample>& samples,
                      const std::filesystem::path& path) {
  auto out = open_out(path);
  char buf[64];
  for (const auto& s : samples) {
    const Eigen::Quaterniond q = s.pose.quaternion();
    const double v[8] = {s.timestamp, s.pose.translation().x(), s.pose.translation().y(),
                         s.pose.translation().z(), q.w(), q.x(), q.y(), q.z()};
    std::string line;
    for (int i = 0; i < 8; ++i) {
      if (i) line += ' ';
      const auto res = std::to_chars(buf, buf + sizeof(buf), v[i]);
      line.append(buf, res.ptr);
    }
    out << line << '\n';
  }
  finish_write(out, path);
}

// --------------------------------------------------------------------------
// Session scripts
// --------------------------------------------------------------------------

SessionScript read_script(std::istream& in) {
  SessionScript script;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    try {
      script.push_back(parse_tool_record(body));
    } catch (const LineError&) {
      throw;
    } catch (const Error& e) {
      throw LineError(e.code(), line_no, e.what());
    }
  }
  return script;
}

SessionScript read_script(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_script(in);
}

void write_script(const SessionScript& script, std::ostream& out) {
  for (const ToolInvocation& inv : script) out << format_tool_record(inv) << '\n';
}

void write_script(const SessionScript& script, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_script(script, out);
  finish_write(out, path);
}

// --------------------------------------------------------------------------
// Correspondences
// --------------------------------------------------------------------------

CorrespondenceSet read_correspondences(std::istream& in) {
  CorrespondenceSet out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto toks = split_ws(body);
    if (toks.size() != 4) throw LineError(ErrorCode::ParseError, line_no, "expected 'pointId qx qy qz'");
    const auto id = parse_number<std::uint64_t>(toks[0]);
    if (!id) throw LineError(ErrorCode::ParseError, line_no, "bad point id");
    Correspondence c;
    c.point_id = *id;
    for (int i = 0; i < 3; ++i) {
      const auto d = parse_number<double>(toks[i + 1]);
      if (!d || !std::isfinite(*d)) throw LineError(ErrorCode::ParseError, line_no, "bad coordinate");
      c.target[i] = *d;
    }
    out.push_back(c);
  }
  return out;
}

CorrespondenceSet read_correspondences(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_correspondences(in);
}

}  // namespace pcsketch
