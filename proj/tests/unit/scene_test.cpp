#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <sstream>

#include "support.h"
#include "vcgs/common/error.h"
#include "vcgs/dataset/dataset.h"
#include "vcgs/scene/camera.h"
#include "vcgs/scene/corpus.h"
#include "vcgs/scene/mesh.h"
#include "vcgs/scene/primitives.h"
#include "vcgs/scene/sampling.h"

namespace vcgs {
namespace {

TriMesh box(double x, double y, double z) {
  return gen_primitive({PrimitiveKind::kBox, {x, y, z}, 0}, 0, "box");
}

CameraModel camera_at(const Vec3& position) {
  CameraModel cam;
  cam.pose.position = position;
  return cam;
}

TEST(Primitives, BoxHasTwelveTrianglesAndExpectedDiagonal) {
  const TriMesh m = box(0.04, 0.04, 0.10);
  EXPECT_EQ(m.face_count(), 12u);
  EXPECT_TRUE(m.is_watertight());
  EXPECT_NEAR(bbox_diagonal(m), 0.11489, 1e-5);
}

TEST(Primitives, SphereVerticesLieOnRadius) {
  const TriMesh m = gen_primitive({PrimitiveKind::kSphere, {0.03}, 3}, 0, "s");
  for (Eigen::Index i = 0; i < m.vertices().rows(); ++i) {
    EXPECT_NEAR(m.vertices().row(i).norm(), 0.03, 1e-9);
  }
  EXPECT_TRUE(m.is_watertight());
}

TEST(Primitives, DeterministicForSameArguments) {
  for (auto kind : {PrimitiveKind::kCylinder, PrimitiveKind::kMugLike, PrimitiveKind::kBottleLike}) {
    const PrimitiveSpec spec{kind, {0.03, 0.1}, 0};
    EXPECT_EQ(gen_primitive(spec, 5).vertices(), gen_primitive(spec, 5).vertices());
  }
}

TEST(Primitives, EveryFamilyIsWatertight) {
  CorpusConfig cfg;
  cfg.n_objects = 12;
  for (const auto& o : generate_corpus(cfg)) {
    EXPECT_TRUE(o.mesh.is_watertight()) << o.entry.object_id;
    EXPECT_NO_THROW(o.mesh.validate());
  }
}

TEST(Primitives, RejectsOutOfRangeDims) {
  EXPECT_THROW(gen_primitive({PrimitiveKind::kBox, {0.5, 0.04, 0.04}, 0}, 0), ConfigError);
  EXPECT_THROW(primitive_kind_from_string("teapot"), ConfigError);
}

TEST(RenderDepth, PlanarFaceDistance) {
  const DepthImage img = render_depth(box(0.04, 0.04, 0.04), camera_at(Vec3(0, 0, -0.5)));
  EXPECT_NEAR(img.at(64, 64), 0.48, 1e-12);
  EXPECT_EQ(img.at(0, 0), 0.0);
}

TEST(RenderDepth, SphereCenterPixel) {
  const TriMesh s = gen_primitive({PrimitiveKind::kSphere, {0.03}, 4}, 0);
  const DepthImage img = render_depth(s, camera_at(Vec3(0, 0, -0.4)));
  // Tessellation makes the facet slightly inside the true sphere.
  EXPECT_NEAR(img.at(64, 64), 0.4 - 0.03, 2e-4);
}

TEST(DepthToCloud, PrincipalPointBackProjectsOnAxis) {
  CameraModel cam = camera_at(Vec3::Zero());
  DepthImage img{cam.width, cam.height, std::vector<double>(128 * 128, 0.0)};
  img.at(64, 64) = 0.7;
  const PointCloud c = depth_to_cloud(img, cam);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_TRUE(c.point(0).isApprox(Vec3(0, 0, 0.7)));
}

TEST(DepthToCloud, EmptyImageThrows) {
  const CameraModel cam;
  DepthImage img{cam.width, cam.height, std::vector<double>(128 * 128, 0.0)};
  EXPECT_THROW(depth_to_cloud(img, cam), EmptyCloud);
}

TEST(DepthToCloud, BoxRoundTripPointsLieOnSurface) {
  Rng rng(1);
  const double h = 0.02;
  for (int t = 0; t < 5; ++t) {
    const CameraModel cam = sample_camera(rng);
    const PointCloud c = depth_to_cloud(render_depth(box(0.04, 0.04, 0.04), cam), cam);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const Vec3 p = c.point(i).cwiseAbs();
      // On the surface: inside the box and on at least one face plane.
      EXPECT_LE(p.maxCoeff(), h + 1e-6);
      EXPECT_NEAR(p.maxCoeff(), h, 1e-6);
    }
  }
}

TEST(Fps, CollinearExample) {
  Points pts(10, 3);
  for (int i = 0; i < 10; ++i) pts.row(i) << i, 0, 0;
  EXPECT_EQ(fps(pts, 3, 0), (std::vector<std::size_t>{0, 9, 4}));
}

TEST(Fps, BaseCaseAndExhaustion) {
  Rng rng(2);
  const Points pts = testing::random_points(rng, 30);
  EXPECT_EQ(fps(pts, 1, 7), std::vector<std::size_t>{7});
  const auto all = fps(pts, 30, 3);
  EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), 30u);
  EXPECT_EQ(all, testing::brute_force_fps(pts, 30, 3));
}

TEST(Fps, MatchesBruteForceGreedy) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto n = std::uniform_int_distribution<Eigen::Index>(1, 200)(rng);
    const Points pts = testing::random_points(rng, n);
    const auto k = std::uniform_int_distribution<std::size_t>(1, static_cast<std::size_t>(n))(rng);
    EXPECT_EQ(fps(pts, k, 0), testing::brute_force_fps(pts, k, 0));
  }
}

TEST(Fps, RejectsBadK) {
  const Points pts = Points::Zero(4, 3);
  EXPECT_THROW(fps(pts, 0, 0), SizeError);
  EXPECT_THROW(fps(pts, 5, 0), SizeError);
}

TEST(Downsample, ReducesToDistinctSubset) {
  Rng rng(4);
  const PointCloud big{testing::random_points(rng, 5000), CloudFrame::kCamera};
  const PointCloud small = downsample(big, 1024, 9);
  ASSERT_EQ(small.size(), 1024u);
  std::set<std::tuple<double, double, double>> seen;
  for (std::size_t i = 0; i < small.size(); ++i) {
    seen.insert({small.points(i, 0), small.points(i, 1), small.points(i, 2)});
  }
  EXPECT_EQ(seen.size(), 1024u);
  std::set<std::tuple<double, double, double>> source;
  for (std::size_t i = 0; i < big.size(); ++i) {
    source.insert({big.points(i, 0), big.points(i, 1), big.points(i, 2)});
  }
  for (const auto& p : seen) EXPECT_TRUE(source.count(p));
}

TEST(Downsample, UpsamplesWithReplacementDeterministically) {
  Rng rng(5);
  const PointCloud c{testing::random_points(rng, 100), CloudFrame::kCamera};
  const PointCloud a = downsample(c, 1024, 3);
  ASSERT_EQ(a.size(), 1024u);
  EXPECT_EQ(a.points, downsample(c, 1024, 3).points);
  for (std::size_t i = 0; i < a.size(); ++i) {
    bool member = false;
    for (std::size_t j = 0; j < c.size() && !member; ++j) member = a.point(i) == c.point(j);
    EXPECT_TRUE(member);
  }
}

TEST(SampleCamera, DegenerateRadiusAndLookAt) {
  Rng rng(6);
  CameraSampling s;
  s.min_radius = s.max_radius = 0.5;
  for (int i = 0; i < 20; ++i) {
    const CameraModel cam = sample_camera(rng, s);
    EXPECT_NEAR(cam.pose.position.norm(), 0.5, 1e-12);
    const Vec3 axis = cam.pose.rotation.to_matrix() * Vec3::UnitZ();
    // Distance from the origin to the optical axis.
    EXPECT_LE(cam.pose.position.cross(axis).norm(), 1e-9);
    EXPECT_GT(-cam.pose.position.dot(axis), 0.0);
  }
}

TEST(SampleCamera, DrawsAreDistinct) {
  Rng rng(7);
  std::set<std::tuple<double, double, double, double>> poses;
  for (int i = 0; i < 100; ++i) {
    const CameraModel c = sample_camera(rng);
    poses.insert({c.pose.position.x(), c.pose.position.y(), c.pose.rotation.w, c.pose.rotation.x});
  }
  EXPECT_EQ(poses.size(), 100u);
}

TEST(Off, RoundTrip) {
  const TriMesh m = gen_primitive({PrimitiveKind::kCapsule, {0.02, 0.1}, 0}, 3, "cap");
  std::stringstream ss;
  write_off(ss, m);
  const TriMesh back = read_off(ss, "cap");
  EXPECT_EQ(back.faces(), m.faces());
  EXPECT_TRUE(back.vertices().isApprox(m.vertices(), 1e-12));
}

TEST(Off, MalformedInputIsFormatError) {
  std::stringstream bad("OFF\n3 1 0\n0 0 0\n1 0 0\n");
  EXPECT_THROW(read_off(bad, "x"), FormatError);
  std::stringstream header("PLY\n");
  EXPECT_THROW(read_off(header, "x"), FormatError);
}

TEST(Corpus, WriteReadRoundTrip) {
  CorpusConfig cfg;
  cfg.n_objects = 3;
  cfg.seed = 4;
  const auto objects = generate_corpus(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "vcgs_corpus_test";
  std::filesystem::remove_all(dir);
  write_corpus(dir, objects);
  const auto back = read_corpus(dir);
  ASSERT_EQ(back.size(), objects.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].entry.object_id, objects[i].entry.object_id);
    EXPECT_EQ(back[i].mesh.faces(), objects[i].mesh.faces());
  }
  std::filesystem::remove_all(dir);
}

TEST(Mesh, RayHitsAndContainment) {
  const TriMesh m = box(0.04, 0.04, 0.04);
  const auto hit = cast_ray(m, Vec3(0, 0, -1), Vec3::UnitZ(), 0.0, 10.0);
  ASSERT_TRUE(hit.has_value());
  EXPECT_NEAR(hit->t, 0.98, 1e-12);
  EXPECT_TRUE(hit->normal.isApprox(-Vec3::UnitZ()));
  // Off the face diagonals, so each face contributes exactly one triangle hit.
  EXPECT_EQ(cast_ray_all(m, Vec3(0.003, 0.007, -1), Vec3::UnitZ(), 0.0, 10.0).size(), 2u);
  EXPECT_TRUE(point_inside(m, Vec3(0.01, 0.0, 0.0)));
  EXPECT_FALSE(point_inside(m, Vec3(0.03, 0.0, 0.0)));
}

}  // namespace
}  // namespace vcgs
