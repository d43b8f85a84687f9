#include "pcsketch/script.hpp"

#include <cmath>
#include <set>

#include "pcsketch/script_json.hpp"

namespace pcsketch {

using nlohmann::json;

std::string_view to_string(Level v) {
  switch (v) {
    case Level::Weak: return "weak";
    case Level::Medium: return "medium";
    case Level::Strong: return "strong";
  }
  return "medium";
}

std::string_view to_string(Size v) {
  switch (v) {
    case Size::Small: return "small";
    case Size::Medium: return "medium";
    case Size::Big: return "big";
  }
  return "medium";
}

std::string_view to_string(Depth v) {
  switch (v) {
    case Depth::Shallow: return "shallow";
    case Depth::Medium: return "medium";
    case Depth::Deep: return "deep";
  }
  return "medium";
}

std::optional<Level> parse_level(std::string_view s) {
  if (s == "weak") return Level::Weak;
  if (s == "medium") return Level::Medium;
  if (s == "strong") return Level::Strong;
  return std::nullopt;
}

std::optional<Size> parse_size(std::string_view s) {
  if (s == "small") return Size::Small;
  if (s == "medium") return Size::Medium;
  if (s == "big") return Size::Big;
  return std::nullopt;
}

std::optional<Depth> parse_depth(std::string_view s) {
  if (s == "shallow") return Depth::Shallow;
  if (s == "medium") return Depth::Medium;
  if (s == "deep") return Depth::Deep;
  return std::nullopt;
}

PoseRecord PoseRecord::from_pose(const Pose& pose) {
  const Eigen::Quaterniond q = pose.quaternion();
  PoseRecord r;
  r.translation = pose.translation();
  r.wxyz = {q.w(), q.x(), q.y(), q.z()};
  return r;
}

Pose PoseRecord::to_pose() const {
  const Eigen::Quaterniond q(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
  return Pose(q.normalized(), translation);
}

namespace {

struct Visitor {
  std::string_view operator()(const CropParams&) const { return "crop"; }
  std::string_view operator()(const OutlierParams&) const { return "remove_outliers"; }
  std::string_view operator()(const DownsampleParams&) const { return "downsample"; }
  std::string_view operator()(const PrimitiveSpec&) const { return "create_primitive"; }
  std::string_view operator()(const SpongeParams&) const { return "erase_sponge"; }
  std::string_view operator()(const SprayParams&) const { return "erase_spray"; }
};

[[noreturn]] void invalid(const std::string& msg) {
  throw Error(ErrorCode::InvalidParams, msg);
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

const json& field(const json& obj, const char* key, std::string_view tool) {
  auto it = obj.find(key);
  if (it == obj.end()) invalid(std::string(tool) + ": missing parameter '" + key + "'");
  return *it;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                std::string_view tool) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) {
      invalid(std::string(tool) + ": unexpected parameter '" + item.key() + "'");
    }
  }
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) invalid(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) invalid(what + " must be finite");
  return v;
}

Vec3 vec_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) invalid(what + " must be an array of 3 numbers");
  return {number(j[0], what), number(j[1], what), number(j[2], what)};
}

template <typename Enum, typename Parse>
Enum enum_from(const json& j, Parse parse, const std::string& what) {
  if (!j.is_string()) invalid(what + " must be a string");
  const auto v = parse(j.get<std::string>());
  if (!v) invalid(what + ": unknown value '" + j.get<std::string>() + "'");
  return *v;
}

Rgb color_from(const json& j) {
  if (!j.is_array() || j.size() != 3) invalid("color must be an array of 3 integers");
  Rgb c;
  std::uint8_t* dst[] = {&c.r, &c.g, &c.b};
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number_integer() || j[i].get<long long>() < 0 || j[i].get<long long>() > 255) {
      invalid("color components must be integers in [0, 255]");
    }
    *dst[i] = static_cast<std::uint8_t>(j[i].get<int>());
  }
  return c;
}

}  // namespace

std::string_view tool_name(const ToolInvocation& inv) { return std::visit(Visitor{}, inv); }

json pose_to_json(const PoseRecord& pose) {
  return json{{"translation", vec_json(pose.translation)},
              {"rotation", json::array({pose.wxyz[0], pose.wxyz[1], pose.wxyz[2],
                                        pose.wxyz[3]})}};
}

PoseRecord pose_from_json(const json& j) {
  if (!j.is_object()) invalid("pose must be an object");
  check_keys(j, {"translation", "rotation"}, "pose");
  PoseRecord p;
  p.translation = vec_from(field(j, "translation", "pose"), "pose.translation");
  const json& q = field(j, "rotation", "pose");
  if (!q.is_array() || q.size() != 4) invalid("pose.rotation must be [w, x, y, z]");
  for (int i = 0; i < 4; ++i) p.wxyz[i] = number(q[i], "pose.rotation");
  if (std::abs(p.wxyz.norm() - 1.0) > 1e-3) invalid("pose.rotation is not a unit quaternion");
  return p;
}

json tool_to_json(const ToolInvocation& inv) {
  json j = std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CropParams>) {
          return {{"min", vec_json(p.min)}, {"max", vec_json(p.max)}};
        } else if constexpr (std::is_same_v<T, OutlierParams> ||
                             std::is_same_v<T, DownsampleParams>) {
          return {{"strength", to_string(p.strength)}};
        } else if constexpr (std::is_same_v<T, PrimitiveSpec>) {
          return {{"pose", pose_to_json(p.pose)},
                  {"dimensions", vec_json(p.dimensions)},
                  {"sample_spacing", p.sample_spacing},
                  {"color", json::array({p.color.r, p.color.g, p.color.b})}};
        } else if constexpr (std::is_same_v<T, SpongeParams>) {
          json stroke = json::array();
          for (const auto& pose : p.stroke) stroke.push_back(pose_to_json(pose));
          return {{"size", to_string(p.size)}, {"stroke", stroke}};
        } else {
          json strokes = json::array();
          for (const SprayStroke& s : p.strokes) {
            strokes.push_back({{"origin", vec_json(s.ray_origin)},
                               {"dir", vec_json(s.ray_dir)},
                               {"size", to_string(s.size)},
                               {"depth", to_string(s.depth)}});
          }
          return {{"strokes", strokes}};
        }
      },
      inv);
  j["tool"] = tool_name(inv);
  return j;
}

ToolInvocation tool_from_json(const json& record) {
  if (!record.is_object()) invalid("record must be a JSON object");
  auto name_it = record.find("tool");
  if (name_it == record.end() || !name_it->is_string()) invalid("record has no 'tool' name");
  const std::string name = name_it->get<std::string>();

  if (name == "crop") {
    check_keys(record, {"tool", "min", "max"}, name);
    CropParams p;
    p.min = vec_from(field(record, "min", name), "crop.min");
    p.max = vec_from(field(record, "max", name), "crop.max");
    if ((p.min.array() > p.max.array()).any()) invalid("crop.min must be <= crop.max");
    return p;
  }
  if (name == "remove_outliers" || name == "downsample") {
    check_keys(record, {"tool", "strength"}, name);
    const Level s = enum_from<Level>(field(record, "strength", name), parse_level,
                                     name + ".strength");
    if (name == "downsample") return DownsampleParams{s};
    return OutlierParams{s};
  }
  if (name == "create_primitive") {
    check_keys(record, {"tool", "pose", "dimensions", "sample_spacing", "color"}, name);
    PrimitiveSpec p;
    p.pose = pose_from_json(field(record, "pose", name));
    p.dimensions = vec_from(field(record, "dimensions", name), "create_primitive.dimensions");
    if ((p.dimensions.array() <= 0.0).any()) invalid("primitive dimensions must be positive");
    if (record.contains("sample_spacing")) {
      p.sample_spacing = number(record["sample_spacing"], "create_primitive.sample_spacing");
      if (p.sample_spacing <= 0.0) invalid("sample_spacing must be positive");
    }
    if (record.contains("color")) p.color = color_from(record["color"]);
    return p;
  }
  if (name == "erase_sponge") {
    check_keys(record, {"tool", "size", "stroke"}, name);
    SpongeParams p;
    p.size = enum_from<Size>(field(record, "size", name), parse_size, "erase_sponge.size");
    const json& stroke = field(record, "stroke", name);
    if (!stroke.is_array()) invalid("erase_sponge.stroke must be an array of poses");
    for (const json& pose : stroke) p.stroke.push_back(pose_from_json(pose));
    return p;
  }
  if (name == "erase_spray") {
    check_keys(record, {"tool", "strokes"}, name);
    SprayParams p;
    const json& strokes = field(record, "strokes", name);
    if (!strokes.is_array()) invalid("erase_spray.strokes must be an array");
    for (const json& s : strokes) {
      if (!s.is_object()) invalid("spray stroke must be an object");
      check_keys(s, {"origin", "dir", "size", "depth"}, "spray stroke");
      SprayStroke st;
      st.ray_origin = vec_from(field(s, "origin", name), "spray.origin");
      st.ray_dir = vec_from(field(s, "dir", name), "spray.dir");
      if (std::abs(st.ray_dir.norm() - 1.0) > 1e-6) invalid("spray.dir must be a unit vector");
      st.size = enum_from<Size>(field(s, "size", name), parse_size, "spray.size");
      st.depth = enum_from<Depth>(field(s, "depth", name), parse_depth, "spray.depth");
      p.strokes.push_back(st);
    }
    return p;
  }
  throw Error(ErrorCode::UnknownTool, "unknown tool '" + name + "'");
}

std::string format_tool_record(const ToolInvocation& inv) { return tool_to_json(inv).dump(); }

ToolInvocation parse_tool_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed record: ") + e.what());
  }
  return tool_from_json(j);
}

}  // namespace pcsketch
