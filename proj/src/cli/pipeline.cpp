#include "vcgs/cli/pipeline.h"

#include <set>
#include <string>

namespace vcgs {

GraspSource sampler_source(SamplerModel& model) {
  return [&model](const PointCloud& cloud, const TargetMask& mask, std::size_t n,
                  std::uint64_t seed) { return sample_grasps(model, cloud, mask, n, seed); };
}

GraspScorer evaluator_scorer(EvaluatorModel& model, const GripperModel& gm) {
  return [&model, gm](const PointCloud& cloud, const std::vector<GraspPose>& grasps) {
    return evaluate_grasps(model, cloud, grasps, gm);
  };
}

std::vector<CorpusObject> objects_in(const std::vector<CorpusObject>& corpus,
                                     const std::vector<DatasetRecord>& records) {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.object_id);
  std::vector<CorpusObject> out;
  for (const auto& o : corpus) {
    if (ids.count(o.entry.object_id)) out.push_back(o);
  }
  return out;
}

}  // namespace vcgs
