#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "vcgs/common/rng.h"
#include "vcgs/geometry/geometry.h"
#include "vcgs/oracle/oracle.h"
#include "vcgs/scene/camera.h"
#include "vcgs/scene/corpus.h"

namespace vcgs {

struct CurationConfig {
  std::size_t renders_per_object = 100;
  std::size_t n_points = 1024;
  std::size_t n_queries = 50;
  double assoc_distance = 0.02;
  double mu = 0.5;
  std::size_t candidates_per_object = 2000;
  std::uint64_t seed = 0;
  CameraSampling camera;

  void validate() const;
};

/// One curated example. Cloud and grasps are in the camera frame; every
/// floating-point field holds a float32-representable value so that the
/// binary container round-trips exactly.
struct DatasetRecord {
  std::string object_id;
  std::uint32_t render_index = 0;
  std::uint64_t seed = 0;
  /// Camera -> object transform of the render.
  GraspPose camera_pose;
  /// Bounding-box diagonal R of the object mesh.
  double bbox_diagonal = 0.0;
  PointCloud cloud;
  TargetMask mask;
  std::uint32_t query_index = 0;
  double radius = 0.0;
  std::vector<GraspPose> grasps;
};

bool operator==(const DatasetRecord& a, const DatasetRecord& b);

struct CurationResult {
  std::vector<DatasetRecord> records;
  /// Areas dropped for having no associated grasp.
  std::size_t dropped = 0;
  /// r / R for every query drawn, kept or dropped.
  std::vector<double> radius_fractions;
  /// Objects skipped because the oracle cannot label them.
  std::vector<std::string> skipped_objects;
};

struct DatasetStats {
  std::size_t n_records = 0;
  std::size_t n_objects = 0;
  std::size_t n_grasps = 0;
  std::size_t dropped = 0;
  double mean_grasps_per_area = 0.0;
  /// Ten equal bins of radius / R over [0, 1].
  std::vector<std::size_t> radius_histogram;
};

/// Nearest float32 value, the precision CONG stores.
double round_to_f32(double v);
GraspPose round_pose_to_f32(const GraspPose& g);

double bbox_diagonal(const TriMesh& mesh);

/// member[i] = |cloud[i] - cloud[query_index]| <= radius.
TargetMask build_area(const PointCloud& cloud, std::size_t query_index, double radius);

/// Stable grasps whose center grasp point lies within gm.assoc_distance_d of
/// the area, in input order.
std::vector<GraspPose> associate_grasps(const std::vector<LabeledGrasp>& grasps,
                                        const PointCloud& cloud, const TargetMask& mask,
                                        const GripperModel& gm);

/// sample_camera with the pose rounded to float32 values.
CameraModel sample_rounded_camera(Rng& rng, const CameraSampling& sampling);

struct RenderedView {
  /// Camera -> object transform.
  GraspPose camera_pose;
  /// Camera-frame cloud with float32-representable coordinates.
  PointCloud cloud;
};

/// Renders one depth view, downsamples it to `n_points` and maps it into the
/// camera frame. Throws EmptyCloud when the object is not visible.
RenderedView render_view(const TriMesh& mesh, const CameraModel& camera, std::size_t n_points,
                         std::uint64_t downsample_seed);

/// Maps a camera-frame grasp into the object frame of its record.
GraspPose object_frame_grasp(const DatasetRecord& record, const GraspPose& grasp);

/// Renders, downsamples, selects FPS query points, grows areas with radii
/// drawn from U[0, R] and associates oracle-stable grasps. Deterministic in
/// (cfg.seed, mesh.object_id()).
CurationResult curate_object(const TriMesh& mesh, const CurationConfig& cfg,
                             const GripperModel& gm);

/// Curates every object; `workers` > 1 processes objects in parallel, with
/// output order fixed by object order.
CurationResult curate_corpus(const std::vector<CorpusObject>& corpus,
                             const CurationConfig& cfg, const GripperModel& gm,
                             std::size_t workers = 1);

/// Object-level split. Throws SplitImpossible with fewer than two objects.
std::pair<std::vector<DatasetRecord>, std::vector<DatasetRecord>> split(
    const std::vector<DatasetRecord>& records, double test_fraction, std::uint64_t seed);

DatasetStats compute_stats(const std::vector<DatasetRecord>& records, std::size_t dropped = 0);
nlohmann::json stats_to_json(const DatasetStats& stats);

/// "CONG" little-endian container, version 1.
void write_dataset(std::ostream& os, const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> read_dataset(std::istream& is);
void write_dataset_file(const std::filesystem::path& path,
                        const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> read_dataset_file(const std::filesystem::path& path);

struct VerifyReport {
  std::size_t records = 0;
  std::size_t grasps = 0;
  std::size_t off_target = 0;
  std::size_t unstable = 0;
  std::size_t area_violations = 0;
  std::vector<std::string> problems;

  bool ok() const { return off_target == 0 && unstable == 0 && area_violations == 0 && problems.empty(); }
};

/// Re-checks every record invariant, every grasp against the on-target
/// predicate, and every grasp against the oracle on the record's mesh.
VerifyReport verify_dataset(const std::vector<DatasetRecord>& records,
                            const std::vector<CorpusObject>& corpus,
                            const GripperModel& gm, double mu);

}  // namespace vcgs
