#include <algorithm>
#include <atomic>
#include <cmath>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "vcgs/common/error.h"
#include "vcgs/common/log.h"
#include "vcgs/common/rng.h"
#include "vcgs/dataset/dataset.h"
#include "vcgs/scene/sampling.h"

namespace vcgs {

double round_to_f32(double v) {
  // GCC 11 at -O3 -march=native folds a vectorized double->float->double
  // round trip into a no-op; volatile keeps the narrowing.
  volatile float f = static_cast<float>(v);
  return f;
}

GraspPose round_pose_to_f32(const GraspPose& g) {
  return {{round_to_f32(g.rotation.w), round_to_f32(g.rotation.x), round_to_f32(g.rotation.y),
           round_to_f32(g.rotation.z)},
          g.position.unaryExpr(&round_to_f32)};
}

void CurationConfig::validate() const {
  if (renders_per_object < 1 || n_points < 1 || n_queries < 1 || candidates_per_object < 1) {
    throw ConfigError("curation: all counts must be >= 1");
  }
  if (n_queries > n_points) throw ConfigError("curation: n_queries must not exceed n_points");
  if (!(assoc_distance > 0.0)) throw ConfigError("curation: assoc_distance must be > 0");
  if (!(mu > 0.0)) throw ConfigError("curation: mu must be > 0");
}

bool operator==(const DatasetRecord& a, const DatasetRecord& b) {
  auto pose_eq = [](const GraspPose& x, const GraspPose& y) {
    return x.rotation.w == y.rotation.w && x.rotation.x == y.rotation.x &&
           x.rotation.y == y.rotation.y && x.rotation.z == y.rotation.z &&
           x.position == y.position;
  };
  if (a.object_id != b.object_id || a.render_index != b.render_index || a.seed != b.seed ||
      !pose_eq(a.camera_pose, b.camera_pose) || a.bbox_diagonal != b.bbox_diagonal ||
      a.cloud.points != b.cloud.points || a.mask != b.mask ||
      a.query_index != b.query_index || a.radius != b.radius ||
      a.grasps.size() != b.grasps.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.grasps.size(); ++i) {
    if (!pose_eq(a.grasps[i], b.grasps[i])) return false;
  }
  return true;
}

double bbox_diagonal(const TriMesh& mesh) {
  if (mesh.vertex_count() == 0) throw InvariantError("bbox_diagonal of empty mesh");
  const auto& v = mesh.vertices();
  return (v.colwise().maxCoeff() - v.colwise().minCoeff()).norm();
}

TargetMask build_area(const PointCloud& cloud, std::size_t query_index, double radius) {
  if (query_index >= cloud.size()) throw SizeError("build_area: query index out of range");
  if (!(radius >= 0.0)) throw ConfigError("build_area: radius must be >= 0");
  TargetMask mask = TargetMask::none(cloud.size());
  const Vec3 q = cloud.point(query_index);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    mask.member[i] = (cloud.point(i) - q).norm() <= radius;
  }
  mask.member[query_index] = 1;
  return mask;
}

std::vector<GraspPose> associate_grasps(const std::vector<LabeledGrasp>& grasps,
                                        const PointCloud& cloud, const TargetMask& mask,
                                        const GripperModel& gm) {
  std::vector<GraspPose> out;
  for (const auto& g : grasps) {
    if (g.label.stable && is_on_target(g.pose, cloud, mask, gm)) out.push_back(g.pose);
  }
  return out;
}

CameraModel sample_rounded_camera(Rng& rng, const CameraSampling& sampling) {
  CameraModel cam = sample_camera(rng, sampling);
  cam.pose = round_pose_to_f32(cam.pose);
  return cam;
}

RenderedView render_view(const TriMesh& mesh, const CameraModel& camera, std::size_t n_points,
                         std::uint64_t downsample_seed) {
  const PointCloud world = depth_to_cloud(render_depth(mesh, camera), camera);
  const PointCloud sampled = downsample(world, n_points, downsample_seed);
  const GraspPose to_camera = camera.pose.inverse();
  RenderedView view;
  view.camera_pose = camera.pose;
  view.cloud.frame = CloudFrame::kCamera;
  view.cloud.points.resize(sampled.points.rows(), 3);
  for (Eigen::Index i = 0; i < sampled.points.rows(); ++i) {
    const Vec3 p = to_camera.apply(sampled.points.row(i).transpose());
    view.cloud.points.row(i) = p.unaryExpr(&round_to_f32).transpose();
  }
  return view;
}

GraspPose object_frame_grasp(const DatasetRecord& record, const GraspPose& grasp) {
  return record.camera_pose * grasp;
}

CurationResult curate_object(const TriMesh& mesh, const CurationConfig& cfg,
                             const GripperModel& gripper) {
  cfg.validate();
  GripperModel gm = gripper;
  gm.assoc_distance_d = cfg.assoc_distance;
  CurationResult result;
  if (!mesh.is_watertight()) {
    log::warn("skipping '{}': mesh is not watertight", mesh.object_id());
    result.skipped_objects.push_back(mesh.object_id());
    return result;
  }
  const std::uint64_t object_seed =
      derive_seed(derive_seed(cfg.seed, "curate"), mesh.object_id());
  const double diag = round_to_f32(bbox_diagonal(mesh));

  std::vector<GraspPose> stable;
  for (const auto& g : sample_labeled_grasps(mesh, gm, cfg.mu, cfg.candidates_per_object,
                                             derive_seed(object_seed, "candidates"))) {
    if (g.label.stable) stable.push_back(g.pose);
  }

  for (std::size_t r = 0; r < cfg.renders_per_object; ++r) {
    const std::uint64_t render_seed = derive_seed(object_seed, r);
    Rng rng(render_seed);
    const CameraModel cam = sample_rounded_camera(rng, cfg.camera);

    DatasetRecord base;
    base.object_id = mesh.object_id();
    base.render_index = static_cast<std::uint32_t>(r);
    base.seed = render_seed;
    base.camera_pose = cam.pose;
    base.bbox_diagonal = diag;

    RenderedView view;
    try {
      view = render_view(mesh, cam, cfg.n_points, derive_seed(render_seed, "downsample"));
    } catch (const EmptyCloud&) {
      log::warn("'{}' render {}: object not visible", mesh.object_id(), r);
      continue;
    }
    base.cloud = std::move(view.cloud);
    const GraspPose to_camera = cam.pose.inverse();

    // Grasps in the stored (rounded) camera frame; stability is re-checked
    // lazily on that exact representation.
    std::vector<GraspPose> grasps_cam;
    grasps_cam.reserve(stable.size());
    for (const auto& g : stable) grasps_cam.push_back(round_pose_to_f32(to_camera * g));
    std::vector<std::int8_t> still_stable(grasps_cam.size(), -1);

    const auto queries = fps(base.cloud.points, cfg.n_queries,
                             fps_seed_index(base.cloud.points));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const std::size_t q : queries) {
      const double radius = round_to_f32(unit(rng) * diag);
      result.radius_fractions.push_back(radius / diag);
      DatasetRecord rec = base;
      rec.query_index = static_cast<std::uint32_t>(q);
      rec.radius = radius;
      rec.mask = build_area(rec.cloud, q, radius);
      for (std::size_t k = 0; k < grasps_cam.size(); ++k) {
        if (!is_on_target(grasps_cam[k], rec.cloud, rec.mask, gm)) continue;
        if (still_stable[k] < 0) {
          still_stable[k] =
              label_grasp(mesh, object_frame_grasp(rec, grasps_cam[k]), gm, cfg.mu).stable;
        }
        if (still_stable[k]) rec.grasps.push_back(grasps_cam[k]);
      }
      if (rec.grasps.empty()) {
        ++result.dropped;
        continue;
      }
      result.records.push_back(std::move(rec));
    }
  }
  return result;
}

CurationResult curate_corpus(const std::vector<CorpusObject>& corpus,
                             const CurationConfig& cfg, const GripperModel& gm,
                             std::size_t workers) {
  cfg.validate();
  std::vector<CurationResult> parts(corpus.size());
  workers = std::max<std::size_t>(1, std::min(workers, corpus.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      log::info("curating {} ({}/{})", corpus[i].entry.object_id, i + 1, corpus.size());
      parts[i] = curate_object(corpus[i].mesh, cfg, gm);
    }
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < corpus.size(); i = next++) {
            parts[i] = curate_object(corpus[i].mesh, cfg, gm);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  CurationResult out;
  for (auto& p : parts) {
    out.dropped += p.dropped;
    std::move(p.records.begin(), p.records.end(), std::back_inserter(out.records));
    out.radius_fractions.insert(out.radius_fractions.end(), p.radius_fractions.begin(),
                                p.radius_fractions.end());
    out.skipped_objects.insert(out.skipped_objects.end(), p.skipped_objects.begin(),
                               p.skipped_objects.end());
  }
  return out;
}

std::pair<std::vector<DatasetRecord>, std::vector<DatasetRecord>> split(
    const std::vector<DatasetRecord>& records, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("split: test fraction must lie in (0, 1)");
  }
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.object_id);
  if (ids.size() < 2) throw SplitImpossible("split: need at least two objects");
  std::vector<std::string> order(ids.begin(), ids.end());
  Rng rng(derive_seed(seed, "split"));
  std::shuffle(order.begin(), order.end(), rng);
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * order.size()));
  n_test = std::clamp<std::size_t>(n_test, 1, order.size() - 1);
  const std::set<std::string> test_ids(order.begin(), order.begin() + n_test);
  std::pair<std::vector<DatasetRecord>, std::vector<DatasetRecord>> out;
  for (const auto& r : records) {
    (test_ids.count(r.object_id) ? out.second : out.first).push_back(r);
  }
  return out;
}

DatasetStats compute_stats(const std::vector<DatasetRecord>& records, std::size_t dropped) {
  DatasetStats s;
  s.n_records = records.size();
  s.dropped = dropped;
  s.radius_histogram.assign(10, 0);
  std::set<std::string> ids;
  for (const auto& r : records) {
    ids.insert(r.object_id);
    s.n_grasps += r.grasps.size();
    const double frac = r.bbox_diagonal > 0.0 ? r.radius / r.bbox_diagonal : 0.0;
    const auto bin = static_cast<std::size_t>(std::clamp(frac, 0.0, 1.0) * 10.0);
    ++s.radius_histogram[std::min<std::size_t>(bin, 9)];
  }
  s.n_objects = ids.size();
  s.mean_grasps_per_area =
      records.empty() ? 0.0 : static_cast<double>(s.n_grasps) / records.size();
  return s;
}

nlohmann::json stats_to_json(const DatasetStats& s) {
  return {{"n_records", s.n_records},
          {"n_objects", s.n_objects},
          {"n_grasps", s.n_grasps},
          {"dropped_areas", s.dropped},
          {"mean_grasps_per_area", s.mean_grasps_per_area},
          {"radius_over_R_histogram", s.radius_histogram}};
}

VerifyReport verify_dataset(const std::vector<DatasetRecord>& records,
                            const std::vector<CorpusObject>& corpus,
                            const GripperModel& gripper, double mu) {
  std::map<std::string, const TriMesh*> meshes;
  for (const auto& obj : corpus) meshes[obj.entry.object_id] = &obj.mesh;
  VerifyReport report;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    ++report.records;
    auto problem = [&](const std::string& what) {
      if (report.problems.size() < 50) {
        report.problems.push_back("record " + std::to_string(i) + " (" + rec.object_id +
                                  "): " + what);
      }
    };
    const auto it = meshes.find(rec.object_id);
    if (it == meshes.end()) {
      problem("object not in corpus");
      continue;
    }
    const std::size_t n = rec.cloud.size();
    if (rec.mask.size() != n || rec.query_index >= n || n == 0) {
      ++report.area_violations;
      problem("mask/query index inconsistent with cloud");
      continue;
    }
    if (rec.mask.count() == 0 || !rec.mask.member[rec.query_index]) {
      ++report.area_violations;
      problem("query point is not in its area");
    }
    const Vec3 q = rec.cloud.point(rec.query_index);
    for (std::size_t k = 0; k < n; ++k) {
      if (rec.mask.member[k] && (rec.cloud.point(k) - q).norm() > rec.radius) {
        ++report.area_violations;
        problem("area member outside radius");
        break;
      }
    }
    if (rec.grasps.empty()) problem("record has no grasps");
    for (const auto& g : rec.grasps) {
      ++report.grasps;
      if (!g.rotation.is_unit()) {
        ++report.unstable;
        problem("grasp rotation is not unit");
        continue;
      }
      if (rec.mask.count() == 0 || !is_on_target(g, rec.cloud, rec.mask, gripper)) {
        ++report.off_target;
        problem("grasp is off target");
      }
      if (!label_grasp(*it->second, object_frame_grasp(rec, g), gripper, mu).stable) {
        ++report.unstable;
        problem("grasp is not oracle-stable");
      }
    }
  }
  return report;
}

}  // namespace vcgs
