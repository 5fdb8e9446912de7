#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vcgs/scene/mesh.h"

namespace vcgs {

enum class PrimitiveKind { kBox, kCylinder, kSphere, kCapsule, kMugLike, kBottleLike };

std::string to_string(PrimitiveKind kind);
/// Throws ConfigError for unknown names.
PrimitiveKind primitive_kind_from_string(const std::string& name);

/// Dimensions per kind, all in meters and within [0.02, 0.30]:
///   box        {x, y, z} full extents
///   cylinder   {radius, height}
///   sphere     {radius}
///   capsule    {radius, length}          length includes both caps
///   mug_like   {body_radius, body_height} handle scales with the body
///   bottle_like{body_radius, height}      neck/cap is a narrower cylinder
struct PrimitiveSpec {
  PrimitiveKind kind = PrimitiveKind::kBox;
  std::vector<double> dims;
  /// Icosphere subdivisions for spheres; ring segments for round shapes.
  int resolution = 0;
};

inline constexpr double kMinPrimitiveDim = 0.02;
inline constexpr double kMaxPrimitiveDim = 0.30;

/// Watertight mesh whose bounding box is centered at the origin. The seed
/// only sets the yaw of the tessellation about z, so output is a pure
/// function of (spec, seed). Throws ConfigError for out-of-range dims.
TriMesh gen_primitive(const PrimitiveSpec& spec, std::uint64_t seed,
                      const std::string& object_id = "");

}  // namespace vcgs
