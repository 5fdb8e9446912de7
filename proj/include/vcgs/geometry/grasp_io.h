#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "vcgs/geometry/geometry.h"

namespace vcgs {

/// One entry of the JSON grasp interchange:
/// {"q":[w,x,y,z], "p":[x,y,z], "score": optional}.
struct GraspRecord {
  GraspPose pose;
  std::optional<double> score;
  /// Oracle fields, present in labeled-grasp files.
  std::optional<bool> stable;
  std::optional<std::string> reason;
};

nlohmann::json grasps_to_json(const std::vector<GraspRecord>& grasps);
/// Throws FormatError on malformed entries.
std::vector<GraspRecord> grasps_from_json(const nlohmann::json& j);

}  // namespace vcgs
