#include "vcgs/geometry/grasp_io.h"

#include "vcgs/common/error.h"

namespace vcgs {

nlohmann::json grasps_to_json(const std::vector<GraspRecord>& grasps) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& g : grasps) {
    const auto& q = g.pose.rotation;
    const auto& p = g.pose.position;
    nlohmann::json e = {{"q", {q.w, q.x, q.y, q.z}}, {"p", {p.x(), p.y(), p.z()}}};
    if (g.score) e["score"] = *g.score;
    if (g.stable) e["stable"] = *g.stable;
    if (g.reason) e["reason"] = *g.reason;
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<GraspRecord> grasps_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("grasp list must be a JSON array", 0);
  std::vector<GraspRecord> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    try {
      const auto q = e.at("q").get<std::vector<double>>();
      const auto p = e.at("p").get<std::vector<double>>();
      if (q.size() != 4 || p.size() != 3) {
        throw FormatError("grasp " + std::to_string(i) + ": q needs 4 and p 3 values", 0);
      }
      GraspRecord r;
      r.pose.rotation = {q[0], q[1], q[2], q[3]};
      r.pose.position = {p[0], p[1], p[2]};
      if (!r.pose.rotation.is_unit()) {
        throw FormatError("grasp " + std::to_string(i) + ": quaternion is not unit", 0);
      }
      if (e.contains("score")) r.score = e["score"].get<double>();
      if (e.contains("stable")) r.stable = e["stable"].get<bool>();
      if (e.contains("reason")) r.reason = e["reason"].get<std::string>();
      out.push_back(r);
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError("grasp " + std::to_string(i) + ": " + ex.what(), 0);
    }
  }
  return out;
}

}  // namespace vcgs
