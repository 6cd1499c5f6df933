#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "gswm/error.hpp"
#include "gswm/scene_io.hpp"
#include "helpers.hpp"

namespace gswm {
namespace {

using testing::random_scene;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(Covariance, IdentityAndAxisAligned) {
  GaussianPrimitive g;
  EXPECT_TRUE(covariance_of(g).isApprox(Mat3::Identity(), 1e-12));
  g.log_scale = Vec3(std::log(2.0), 0, 0);
  EXPECT_TRUE(covariance_of(g).isApprox(Vec3(4, 1, 1).asDiagonal().toDenseMatrix(), 1e-12));
}

TEST(Covariance, QuarterTurnAboutZSwapsAxes) {
  GaussianPrimitive g;
  g.log_scale = Vec3(std::log(2.0), 0, 0);
  const double h = std::numbers::pi / 4;
  g.rotation = Vec4(std::cos(h), 0, 0, std::sin(h));
  // Oracle: R diag(4,1,1) R^T with R written out for 90 degrees about z.
  Mat3 r;
  r << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Mat3 expected = r * Vec3(4, 1, 1).asDiagonal() * r.transpose();
  EXPECT_LT((covariance_of(g) - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(expected(1, 1), 4.0, 1e-12);
}

TEST(Covariance, EigenvaluesAreSquaredScales) {
  const auto scene = random_scene(3, 40);
  for (const auto& g : scene.primitives) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(covariance_of(g));
    std::array<double, 3> want{std::exp(2 * g.log_scale[0]), std::exp(2 * g.log_scale[1]),
                               std::exp(2 * g.log_scale[2])};
    std::sort(want.begin(), want.end());
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(es.eigenvalues()[i], want[i], 1e-6 * want[2]);
  }
}

TEST(CameraInterpolation, EndpointsAndMidpoint) {
  const Camera a = look_at(Vec3(0, -4, 0), Vec3::Zero(), Vec3(0, 0, 1), 50, 64, 64);
  const Camera b = look_at(Vec3(4, 0, 1), Vec3::Zero(), Vec3(0, 0, 1), 50, 64, 64);
  EXPECT_EQ(interpolate_cameras(a, b, 0.0), a);
  EXPECT_EQ(interpolate_cameras(a, b, 1.0), b);

  Camera c = a;
  Camera d = a;
  c.world_to_view.topRightCorner<3, 1>() = -c.rotation() * Vec3(0, 0, 0);
  d.world_to_view.topRightCorner<3, 1>() = -d.rotation() * Vec3(2, 0, 0);
  EXPECT_LT((interpolate_cameras(c, d, 0.5).center() - Vec3(1, 0, 0)).norm(), 1e-12);

  const Camera m = interpolate_cameras(a, b, 0.37);
  EXPECT_NO_THROW(m.validate());
  const Camera m2 = interpolate_cameras(a, b, 0.37 + 1e-7);
  EXPECT_LT((m.world_to_view - m2.world_to_view).norm(), 1e-5);
}

TEST(CameraInterpolation, Schedule) {
  const auto s = interpolation_schedule(3, 1);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0], (InterpolationSlot{1, 0.5}));
  EXPECT_EQ(s[1], (InterpolationSlot{2, 0.5}));
  const auto four = interpolation_schedule(2, 4);
  ASSERT_EQ(four.size(), 4u);
  for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(four[j].t, 0.2 * (j + 1));
  EXPECT_EQ(interpolation_schedule(5, 1).size(), 4u);
}

TEST(SceneIo, RoundTripIsBitFaithful) {
  auto scene = quantize_scene(random_scene(11, 25));
  scene.primitives[3].frozen = true;
  scene.primitives[17].frozen = true;
  EXPECT_EQ(parse_scene(serialize_scene(scene)), scene);
  EXPECT_EQ(serialize_scene(scene).size(), kSceneHeaderBytes + 25 * kSceneRecordBytes);
}

TEST(SceneIo, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "gswm_scene_io_test.gsw";
  const auto scene = quantize_scene(random_scene(12, 9));
  save_scene(path, scene);
  EXPECT_EQ(load_scene(path), scene);
  std::filesystem::remove(path);
}

TEST(SceneIo, DistinctErrors) {
  const std::string good = serialize_scene(random_scene(13, 4));
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(code_of([&] { parse_scene(bad_magic); }), ErrorCode::kBadMagic);

  std::string bad_version = good;
  bad_version[4] = 9;
  EXPECT_EQ(code_of([&] { parse_scene(bad_version); }), ErrorCode::kVersionMismatch);

  EXPECT_EQ(code_of([&] { parse_scene(good.substr(0, good.size() - 3)); }), ErrorCode::kTruncated);

  auto scene = random_scene(13, 4);
  scene.primitives[2].center[1] = std::nan("");
  try {
    parse_scene(serialize_scene(scene));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
    EXPECT_NE(std::string(e.what()).find("record 2"), std::string::npos);
  }
}

TEST(SceneIo, CameraTextRoundTrip) {
  std::vector<Camera> cams{look_at(Vec3(1, -4, 0.5), Vec3::Zero(), Vec3(0, 0, 1), 70, 64, 48),
                           look_at(Vec3(-3, 2, 1), Vec3(0.1, 0, 0), Vec3(0, 0, 1), 33.5, 32, 32)};
  EXPECT_EQ(parse_cameras(format_cameras(cams)), cams);
}

TEST(Camera, ValidateRejectsNonRigid) {
  Camera c = testing::front_camera();
  c.world_to_view(0, 0) *= 1.01;
  EXPECT_THROW(c.validate(), Error);
  Camera f = testing::front_camera();
  f.focal.x() = 0;
  EXPECT_THROW(f.validate(), Error);
}

}  // namespace
}  // namespace gswm
