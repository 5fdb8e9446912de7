#include <gtest/gtest.h>

#include "support.h"
#include "vcgs/common/error.h"
#include "vcgs/models/evaluator.h"
#include "vcgs/models/inputs.h"
#include "vcgs/models/sampler.h"

namespace vcgs {
namespace {

const GripperModel kGm = GripperModel::canonical();

SamplerConfig tiny_sampler() {
  SamplerConfig cfg;
  cfg.trunk_widths = {8, 16};
  cfg.head_widths = {16};
  cfg.seed = 3;
  return cfg;
}

EvaluatorConfig tiny_evaluator() {
  EvaluatorConfig cfg;
  cfg.trunk_widths = {8, 16};
  cfg.head_widths = {16};
  cfg.epochs = 1;
  cfg.seed = 4;
  return cfg;
}

PointCloud random_cloud(Rng& rng, Eigen::Index n) {
  return {testing::random_points(rng, n, 0.05), CloudFrame::kCamera};
}

TargetMask half_mask(std::size_t n) {
  TargetMask m = TargetMask::none(n);
  for (std::size_t i = 0; i < n; i += 2) m.member[i] = 1;
  return m;
}

PointCloud permuted(const PointCloud& c, TargetMask* mask, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(c.size());
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + n, rng);
  PointCloud out{perm * c.points, c.frame};
  if (mask) {
    TargetMask m = TargetMask::none(c.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      m.member[static_cast<std::size_t>(perm.indices()(i))] = mask->member[static_cast<std::size_t>(i)];
    }
    *mask = m;
  }
  return out;
}

TEST(Inputs, EncoderLayout) {
  Rng rng(1);
  const PointCloud c = random_cloud(rng, 10);
  GraspPose g = testing::random_pose(rng);
  if (g.rotation.w > 0) g.rotation = -g.rotation;
  const nn::Matrix in = encoder_input(c, half_mask(10), g);
  ASSERT_EQ(in.rows(), 10);
  ASSERT_EQ(in.cols(), kEncoderFeatures);
  EXPECT_EQ(in.leftCols(3), c.points);
  EXPECT_EQ(in(0, 3), 1.0);
  EXPECT_EQ(in(1, 3), 0.0);
  // Quaternion sign is canonicalized to w >= 0.
  EXPECT_GE(in(5, 4), 0.0);
  EXPECT_DOUBLE_EQ(in(5, 4), -g.rotation.w);
  EXPECT_DOUBLE_EQ(in(9, 10), g.position.z());
  EXPECT_NO_THROW(check_encoder_input(in));
}

TEST(Inputs, DecoderAndEvaluatorLayouts) {
  Rng rng(2);
  const PointCloud c = random_cloud(rng, 7);
  const Eigen::VectorXd z = Eigen::VectorXd::Constant(2, 0.5);
  const nn::Matrix dec = decoder_input(c, half_mask(7), z);
  EXPECT_EQ(dec.cols(), 6);
  EXPECT_NO_THROW(check_decoder_input(dec, 2));
  EXPECT_THROW(check_decoder_input(dec, 3), ShapeError);

  const GraspPose g = testing::random_pose(rng);
  const nn::Matrix ev = evaluator_input(c, g, kGm);
  EXPECT_EQ(ev.rows(), 13);
  EXPECT_EQ(ev.col(3).sum(), 6.0);
  EXPECT_TRUE(ev.bottomLeftCorner(6, 3).isApprox(grasp_to_points(g, kGm)));
  EXPECT_NO_THROW(check_evaluator_input(ev));
}

TEST(Inputs, MaskSizeMismatchThrows) {
  Rng rng(3);
  EXPECT_THROW(encoder_input(random_cloud(rng, 5), TargetMask::none(4), GraspPose::identity()),
               ShapeError);
}

TEST(Sampler, EncodeShapesAndDecodeUnitQuaternion) {
  SamplerModel model = SamplerModel::create(tiny_sampler(), kGm);
  Rng rng(4);
  const PointCloud c = random_cloud(rng, 16);
  const auto [mu, log_var] = encode(model, encoder_input(c, half_mask(16), testing::random_pose(rng)));
  EXPECT_EQ(mu.size(), 2);
  EXPECT_EQ(log_var.size(), 2);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd z = testing::random_matrix(rng, 2, 1);
    const GraspPose g = decode(model, decoder_input(c, half_mask(16), z));
    EXPECT_NEAR(g.rotation.norm(), 1.0, 1e-9);
  }
}

TEST(Sampler, EncoderIsPermutationInvariant) {
  SamplerModel model = SamplerModel::create(tiny_sampler(), kGm);
  Rng rng(5);
  const PointCloud c = random_cloud(rng, 24);
  const GraspPose g = testing::random_pose(rng);
  TargetMask mask = half_mask(24);
  const auto base = encode(model, encoder_input(c, mask, g));
  const PointCloud p = permuted(c, &mask, rng);
  const auto moved = encode(model, encoder_input(p, mask, g));
  EXPECT_TRUE(moved.first.isApprox(base.first, 1e-10));
  EXPECT_TRUE(moved.second.isApprox(base.second, 1e-10));
}

TEST(Sampler, SampleGraspsDeterministicPerSeed) {
  SamplerModel model = SamplerModel::create(tiny_sampler(), kGm);
  Rng rng(6);
  const PointCloud c = random_cloud(rng, 16);
  const auto a = sample_grasps(model, c, half_mask(16), 40, 9);
  const auto b = sample_grasps(model, c, half_mask(16), 40, 9);
  const auto other = sample_grasps(model, c, half_mask(16), 40, 10);
  ASSERT_EQ(a.size(), 40u);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].position, b[i].position);
    differs |= a[i].position != other[i].position;
  }
  EXPECT_TRUE(differs);
  EXPECT_THROW(sample_grasps(model, c, half_mask(16), 0, 1), ConfigError);
}

TEST(Sampler, CheckpointMustMatchModelKind) {
  EvaluatorModel ev = EvaluatorModel::create(tiny_evaluator());
  EXPECT_THROW(SamplerModel::from_params(ev.params), ConfigError);
}

TEST(ReconstructionLoss, Examples) {
  Rng rng(7);
  const GraspPose g = testing::random_pose(rng);
  EXPECT_DOUBLE_EQ(reconstruction_loss(g, g, kGm), 0.0);
  GraspPose flipped = g;
  flipped.rotation = -g.rotation;
  EXPECT_NEAR(reconstruction_loss(g, flipped, kGm), 0.0, 1e-12);
  GraspPose shifted;
  shifted.position = Vec3(0.01, 0, 0);
  EXPECT_NEAR(reconstruction_loss(GraspPose::identity(), shifted, kGm), 0.06, 1e-12);
}

TEST(ElboLoss, ZeroAlphaIsReconstruction) {
  nn::Tape tape;
  const nn::Var recon = tape.constant(nn::Matrix::Constant(1, 1, 0.7));
  const nn::Var mu = tape.constant(nn::Matrix::Ones(2, 2));
  const nn::Var lv = tape.constant(nn::Matrix::Zero(2, 2));
  EXPECT_DOUBLE_EQ(elbo_loss(recon, mu, lv, 0.0).scalar(), 0.7);
  // KL of four unit means is 2.0, divided by the batch of 2.
  EXPECT_DOUBLE_EQ(elbo_loss(recon, mu, lv, 0.5).scalar(), 0.7 + 0.5 * 1.0);
  EXPECT_THROW(elbo_loss(recon, mu, lv, -1.0), ConfigError);
}

TEST(BceLoss, Examples) {
  EXPECT_NEAR(bce_loss(1.0, 0.5), std::log(2.0), 1e-12);
  EXPECT_NEAR(bce_loss(0.0, 0.5), std::log(2.0), 1e-12);
  EXPECT_NEAR(bce_loss(1.0, 1.0), 0.0, 1e-6);
  EXPECT_NEAR(bce_loss(1.0, 0.0), -std::log(kProbabilityClamp), 1e-9);
  nn::Tape tape;
  nn::Matrix y(2, 1), p(2, 1);
  y << 1, 0;
  p << 0.8, 0.3;
  const double want = 0.5 * (bce_loss(1.0, 0.8) + bce_loss(0.0, 0.3));
  EXPECT_NEAR(bce_loss(tape.constant(y), tape.constant(p)).scalar(), want, 1e-12);
}

TEST(Evaluator, OutputIsProbabilityAndPermutationInvariant) {
  EvaluatorModel model = EvaluatorModel::create(tiny_evaluator());
  Rng rng(8);
  const PointCloud c = random_cloud(rng, 30);
  for (int i = 0; i < 10; ++i) {
    const GraspPose g = testing::random_pose(rng, 0.05);
    const double s = evaluate_grasp(model, c, g, kGm);
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
    EXPECT_NEAR(evaluate_grasp(model, permuted(c, nullptr, rng), g, kGm), s, 1e-10);
  }
}

TEST(Evaluator, BatchScoresMatchSingle) {
  EvaluatorModel model = EvaluatorModel::create(tiny_evaluator());
  Rng rng(9);
  const PointCloud c = random_cloud(rng, 20);
  std::vector<GraspPose> grasps;
  for (int i = 0; i < 5; ++i) grasps.push_back(testing::random_pose(rng, 0.05));
  const auto scores = evaluate_grasps(model, c, grasps, kGm);
  for (std::size_t i = 0; i < grasps.size(); ++i) {
    EXPECT_NEAR(scores[i], evaluate_grasp(model, c, grasps[i], kGm), 1e-12);
  }
}

TEST(Evaluator, SingleClassTrainingIsConfigError) {
  Rng rng(10);
  DatasetRecord r;
  r.cloud = random_cloud(rng, 12);
  r.mask = half_mask(12);
  const std::vector<EvalExample> examples = {{0, GraspPose::identity(), true},
                                             {0, GraspPose::identity(), true}};
  EXPECT_THROW(train_evaluator({r}, examples, tiny_evaluator(), kGm), ConfigError);
}

TEST(RocAuc, Examples) {
  EXPECT_DOUBLE_EQ(roc_auc({0.1, 0.2, 0.8, 0.9}, {false, false, true, true}), 1.0);
  EXPECT_DOUBLE_EQ(roc_auc({0.9, 0.8, 0.2, 0.1}, {false, false, true, true}), 0.0);
  EXPECT_DOUBLE_EQ(roc_auc({0.5, 0.5}, {false, true}), 0.5);
  EXPECT_DOUBLE_EQ(roc_auc({0.1, 0.4, 0.35, 0.8}, {false, false, true, true}), 0.75);
  EXPECT_THROW(roc_auc({0.1, 0.2}, {true, true}), ConfigError);
}

}  // namespace
}  // namespace vcgs
