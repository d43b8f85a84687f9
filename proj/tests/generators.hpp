#pragma once

// Random valid tool records and scripts for round-trip and session tests.

#include <random>

#include "oracles.hpp"
#include "pcsketch/script.hpp"

namespace gen {

using namespace pcsketch;

inline PoseRecord random_pose(std::mt19937_64& g, double extent = 1.0) {
  return PoseRecord::from_pose(Pose(oracle::random_rotation(g), oracle::random_vec(g, -extent, extent)));
}

template <typename E>
E pick(std::mt19937_64& g) {
  return static_cast<E>(std::uniform_int_distribution<int>(0, 2)(g));
}

/// `kind` in [0, 6): crop, outliers, downsample, primitive, sponge, spray.
inline ToolInvocation random_tool(std::mt19937_64& g, int kind, double extent = 1.0) {
  std::uniform_int_distribution<int> count(1, 6);
  switch (kind) {
    case 0: {
      const Vec3 a = oracle::random_vec(g, -extent, extent);
      const Vec3 b = oracle::random_vec(g, -extent, extent);
      return CropParams{a.cwiseMin(b), a.cwiseMax(b)};
    }
    case 1: return OutlierParams{pick<Level>(g)};
    case 2: return DownsampleParams{pick<Level>(g)};
    case 3: {
      PrimitiveSpec s;
      s.pose = random_pose(g, extent);
      s.dimensions = oracle::random_vec(g, 0.02, 0.2);
      s.sample_spacing = std::uniform_real_distribution<double>(0.01, 0.05)(g);
      std::uniform_int_distribution<int> c(0, 255);
      s.color = {static_cast<std::uint8_t>(c(g)), static_cast<std::uint8_t>(c(g)),
                 static_cast<std::uint8_t>(c(g))};
      return s;
    }
    case 4: {
      SpongeParams p;
      p.size = pick<Size>(g);
      for (int i = count(g); i > 0; --i) p.stroke.push_back(random_pose(g, extent));
      return p;
    }
    default: {
      SprayParams p;
      for (int i = count(g); i > 0; --i) {
        p.strokes.push_back({oracle::random_vec(g, -extent, extent),
                             oracle::random_vec(g, -1, 1).normalized(), pick<Size>(g), pick<Depth>(g)});
      }
      return p;
    }
  }
}

inline SessionScript random_script(std::mt19937_64& g, std::size_t n) {
  SessionScript s;
  std::uniform_int_distribution<int> kind(0, 5);
  for (std::size_t i = 0; i < n; ++i) s.push_back(random_tool(g, kind(g)));
  return s;
}

}  // namespace gen
