#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pcsketch/core.hpp"

namespace pcsketch {

// Strength labels exposed by the editing tools. The numeric value behind each
// label lives in the `tool_settings` table below.
enum class Level { Weak, Medium, Strong };       // outlier removal, downsampling
enum class Size { Small, Medium, Big };          // sponge and spray size
enum class Depth { Shallow, Medium, Deep };      // spray reach

std::string_view to_string(Level v);
std::string_view to_string(Size v);
std::string_view to_string(Depth v);
std::optional<Level> parse_level(std::string_view s);
std::optional<Size> parse_size(std::string_view s);
std::optional<Depth> parse_depth(std::string_view s);

namespace tool_settings {

inline constexpr std::size_t kNeighbors = 20;
inline constexpr double kDefaultSampleSpacing = 0.0087;

/// Outlier threshold in standard deviations above the mean k-NN distance.
constexpr double outlier_std_ratio(Level l) {
  switch (l) {
    case Level::Weak: return 3.0;
    case Level::Medium: return 2.0;
    case Level::Strong: return 1.0;
  }
  return 2.0;
}

/// Voxel edge length in meters.
constexpr double voxel_size(Level l) {
  switch (l) {
    case Level::Weak: return 0.01;
    case Level::Medium: return 0.02;
    case Level::Strong: return 0.04;
  }
  return 0.02;
}

/// Sponge half extents (width, height, thickness) in meters.
inline Vec3 sponge_half_extents(Size s) {
  switch (s) {
    case Size::Small: return {0.05, 0.035, 0.01};
    case Size::Medium: return {0.10, 0.07, 0.02};
    case Size::Big: return {0.15, 0.105, 0.04};
  }
  return {0.10, 0.07, 0.02};
}

/// Spray cone base radius in meters.
constexpr double spray_radius(Size s) {
  switch (s) {
    case Size::Small: return 0.05;
    case Size::Medium: return 0.10;
    case Size::Big: return 0.20;
  }
  return 0.10;
}

/// Spray cone height in meters.
constexpr double spray_depth(Depth d) {
  switch (d) {
    case Depth::Shallow: return 0.5;
    case Depth::Medium: return 1.0;
    case Depth::Deep: return 2.0;
  }
  return 1.0;
}

}  // namespace tool_settings

/// Pose as written in scripts: translation plus (w, x, y, z) quaternion, kept
/// verbatim so records round-trip exactly.
struct PoseRecord {
  Vec3 translation = Vec3::Zero();
  Eigen::Vector4d wxyz{1.0, 0.0, 0.0, 0.0};

  static PoseRecord from_pose(const Pose& pose);
  Pose to_pose() const;
  friend bool operator==(const PoseRecord&, const PoseRecord&) = default;
};

struct CropParams {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  friend bool operator==(const CropParams&, const CropParams&) = default;
};

struct OutlierParams {
  Level strength = Level::Medium;
  friend bool operator==(const OutlierParams&, const OutlierParams&) = default;
};

struct DownsampleParams {
  Level strength = Level::Medium;
  friend bool operator==(const DownsampleParams&, const DownsampleParams&) = default;
};

struct PrimitiveSpec {
  PoseRecord pose;  ///< prism center; local z is the supporting surface normal
  Vec3 dimensions = Vec3::Constant(0.1);
  double sample_spacing = tool_settings::kDefaultSampleSpacing;
  Rgb color;
  friend bool operator==(const PrimitiveSpec&, const PrimitiveSpec&) = default;
};

struct SpongeParams {
  std::vector<PoseRecord> stroke;
  Size size = Size::Medium;
  friend bool operator==(const SpongeParams&, const SpongeParams&) = default;
};

struct SprayStroke {
  Vec3 ray_origin = Vec3::Zero();
  Vec3 ray_dir = Vec3::UnitZ();
  Size size = Size::Medium;
  Depth depth = Depth::Medium;
  friend bool operator==(const SprayStroke&, const SprayStroke&) = default;
};

struct SprayParams {
  std::vector<SprayStroke> strokes;
  friend bool operator==(const SprayParams&, const SprayParams&) = default;
};

using ToolInvocation = std::variant<CropParams, OutlierParams, DownsampleParams,
                                    PrimitiveSpec, SpongeParams, SprayParams>;

/// Script/wire name of the tool ("crop", "remove_outliers", ...).
std::string_view tool_name(const ToolInvocation& inv);

using SessionScript = std::vector<ToolInvocation>;

/// One-line JSON encoding of a tool record; keys are emitted in sorted order.
std::string format_tool_record(const ToolInvocation& inv);
/// Throws UnknownTool or InvalidParams (ParseError for malformed JSON).
ToolInvocation parse_tool_record(std::string_view line);

}  // namespace pcsketch
