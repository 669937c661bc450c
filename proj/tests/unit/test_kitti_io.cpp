#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "test_support.hpp"
#include "virtview/kitti_io.hpp"
#include "virtview/synthetic.hpp"

using namespace virtview;

namespace {

constexpr const char* kLine =
    "Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 46.70 -1.75";

TEST(LabelFile, ParsesDocumentedFieldOrder) {
  const auto recs = parse_label_file(kLine);
  ASSERT_EQ(recs.size(), 1u);
  const KittiLabelRecord& r = recs[0];
  EXPECT_EQ(r.type, "Car");
  EXPECT_EQ(r.occluded, 0);
  EXPECT_DOUBLE_EQ(r.alpha, -1.58);
  EXPECT_DOUBLE_EQ(r.bbox[2], 614.12);
  EXPECT_DOUBLE_EQ(r.height, 1.65);
  EXPECT_DOUBLE_EQ(r.width, 1.67);
  EXPECT_DOUBLE_EQ(r.length, 3.64);
  EXPECT_DOUBLE_EQ(r.location.z, 46.70);
  EXPECT_DOUBLE_EQ(r.rotation_y, -1.75);
  EXPECT_FALSE(r.score.has_value());
  EXPECT_EQ(format_label_file(recs), std::string(kLine) + "\n");
}

TEST(LabelFile, EmptyAndBlankInput) {
  EXPECT_TRUE(parse_label_file("").empty());
  EXPECT_TRUE(parse_label_file("\n\n").empty());
}

TEST(LabelFile, MalformedLinesReportLineNumbers) {
  const std::string text = std::string(kLine) + "\nCar 0.00 0 -1.58 587.01 173.33 614.12 200.12 "
                                                "1.65 1.67 3.64 -0.65 1.71 46.70\n";
  try {
    parse_label_file(text);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(parse_label_file("Car x 0 0 0 0 0 0 1 1 1 0 0 0 0"), ParseError);
  EXPECT_THROW(parse_label_file("Car 0 7 0 0 0 0 0 1 1 1 0 0 0 0"), ParseError);
  EXPECT_THROW(parse_label_file("Car 0 0 0 0 0 0 0 -1 1 1 0 0 0 0"), ParseError);
}

TEST(LabelFile, ScoredRecordsAndDontCare) {
  const auto recs = parse_label_file(
      "Pedestrian -1.00 -1 0.30 10.00 20.00 30.00 80.00 1.77 0.63 0.83 1.00 1.65 12.00 0.10 "
      "0.9876\n"
      "DontCare -1 -1 -10 500.00 180.00 540.00 200.00 -1 -1 -1 -1000 -1000 -1000 -10\n");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_DOUBLE_EQ(*recs[0].score, 0.9876);
  EXPECT_EQ(recs[0].occluded, -1);
  EXPECT_TRUE(recs[1].dont_care());
  EXPECT_EQ(parse_label_file(format_label_file(recs)), recs);
}

TEST(Calibration, ParsesP2Intrinsics) {
  const std::string text =
      "P0: 1 0 0 0 0 1 0 0 0 0 1 0\n"
      "P2: 700 0 620 0 0 700 190 0 0 0 1 0\n";
  const Calibration c = parse_calib(text);
  EXPECT_DOUBLE_EQ(c.camera.f_x, 700);
  EXPECT_DOUBLE_EQ(c.camera.f_y, 700);
  EXPECT_DOUBLE_EQ(c.camera.c_u, 620);
  EXPECT_DOUBLE_EQ(c.camera.c_v, 190);
  EXPECT_EQ(c.camera.baseline, (Point3{0, 0, 0}));
  EXPECT_EQ(c.camera.image_width, kKittiImageWidth);
  ASSERT_NE(c.find("P0"), nullptr);
  EXPECT_EQ(c.find("Tr_velo_to_cam"), nullptr);
}

TEST(Calibration, Errors) {
  EXPECT_THROW(parse_calib("P2: 700 0 620 0 0 700 190 0 0 0 1\n"), ParseError);
  EXPECT_THROW(parse_calib("P0: 1 0 0 0 0 1 0 0 0 0 1 0\n"), ParseError);
}

TEST(Calibration, TranslationColumnBecomesCameraOffset) {
  const CameraIntrinsics k = default_camera();
  const Calibration c = parse_calib(format_calib(make_calibration(k)));
  // P2 translation is K * offset.
  EXPECT_NEAR(c.p2[3], k.f_x * k.baseline.x + k.c_u * k.baseline.z, 1e-9);
  EXPECT_NEAR(c.p2[7], k.f_y * k.baseline.y + k.c_v * k.baseline.z, 1e-9);
  EXPECT_NEAR(c.p2[11], k.baseline.z, 1e-15);
  EXPECT_NEAR(c.camera.baseline.x, k.baseline.x, 1e-12);
  const Point3 p{1.2, 0.7, 15.0};
  const Pixel a = project(c.camera, p);
  const double w = p.z + c.p2[11];
  EXPECT_NEAR(a.u, (c.p2[0] * p.x + c.p2[1] * p.y + c.p2[2] * p.z + c.p2[3]) / w, 1e-9);
  EXPECT_NEAR(a.v, (c.p2[4] * p.x + c.p2[5] * p.y + c.p2[6] * p.z + c.p2[7]) / w, 1e-9);
}

TEST(Calibration, WriteParseIsBitExact) {
  const std::string text =
      "P0: 7.215377000000e+02 0.000000000000e+00 6.095593000000e+02 0.000000000000e+00 "
      "0.000000000000e+00 7.215377000000e+02 1.728540000000e+02 0.000000000000e+00 "
      "0.000000000000e+00 0.000000000000e+00 1.000000000000e+00 0.000000000000e+00\n"
      "P2: 7.215377000000e+02 0.000000000000e+00 6.095593000000e+02 4.485728000000e+01 "
      "0.000000000000e+00 7.215377000000e+02 1.728540000000e+02 2.163791000000e-01 "
      "0.000000000000e+00 0.000000000000e+00 1.000000000000e+00 2.745884000000e-03\n";
  const Calibration c = parse_calib(text);
  EXPECT_EQ(format_calib(c), text);
  const Calibration again = parse_calib(format_calib(c));
  EXPECT_EQ(again.entries, c.entries);
  EXPECT_EQ(again.camera, c.camera);
}

TEST(BoxConversion, BottomCenterToGeometricCenter) {
  KittiLabelRecord r;
  r.type = "Car";
  r.location = {0, 1.65, 10};
  r.height = 1.5;
  r.width = 1.6;
  r.length = 3.9;
  r.rotation_y = 0.25;
  const Box3D b = kitti_to_box3d(r);
  EXPECT_DOUBLE_EQ(b.center.y, 0.9);
  EXPECT_EQ(b.center.x, 0.0);
  EXPECT_EQ(b.center.z, 10.0);
  EXPECT_EQ(b.size, (Size3{1.6, 1.5, 3.9}));
  EXPECT_EQ(b.yaw, 0.25);
  EXPECT_EQ(kitti_to_box3d(KittiLabelRecord{.type = "Tram"}).class_id, ClassId::kOther);
}

TEST(BoxConversion, RoundTripOnSyntheticCorpus) {
  SceneParams params;
  params.seed = 21;
  const CameraIntrinsics k = default_camera();
  int checked = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const Scene s = generate_scene(params, k, i);
    const auto recs = parse_label_file(format_label_file(s.labels));
    for (std::size_t j = 0; j < recs.size(); ++j) {
      const Box3D b = kitti_to_box3d(recs[j]);
      const Box2D bbox{recs[j].bbox[0], recs[j].bbox[1], recs[j].bbox[2], recs[j].bbox[3]};
      KittiLabelRecord back = box3d_to_kitti(b, bbox, recs[j].type);
      back.alpha = recs[j].alpha;
      EXPECT_EQ(format_label_file(std::span(&back, 1)), format_label_file(std::span(&recs[j], 1)));
      EXPECT_NEAR(back.location.y, recs[j].location.y, 1e-12);
      // Stored alpha agrees with the allocentric angle of the stored pose.
      EXPECT_LE(std::abs(wrap_angle(recs[j].alpha - egocentric_to_allocentric(b.yaw, b.center))),
                0.02);
      ++checked;
    }
  }
  EXPECT_GT(checked, 200);
}

TEST(Difficulty, Tiers) {
  EXPECT_EQ(difficulty(50, 0, 0.0), Difficulty::kEasy);
  EXPECT_EQ(difficulty(30, 1, 0.2), Difficulty::kModerate);
  EXPECT_EQ(difficulty(30, 2, 0.45), Difficulty::kHard);
  EXPECT_EQ(difficulty(20, 0, 0.0), Difficulty::kNone);
  EXPECT_EQ(difficulty(50, 3, 0.0), Difficulty::kNone);
  EXPECT_EQ(difficulty(40, 0, 0.15), Difficulty::kEasy);
  EXPECT_EQ(difficulty(39.99, 0, 0.0), Difficulty::kModerate);
  EXPECT_TRUE(meets_difficulty(50, 0, 0, Difficulty::kHard));
  EXPECT_FALSE(meets_difficulty(30, 1, 0.2, Difficulty::kEasy));
  EXPECT_STREQ(difficulty_name(Difficulty::kModerate), "Moderate");
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("virtview_kitti_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(TempDir, ResultsRoundTrip) {
  auto recs = parse_label_file(kLine);
  recs[0].score = 0.8125;
  write_results(dir_ / "data", "000007", recs);
  const auto back = parse_label_file(read_text_file(dir_ / "data" / "000007.txt"));
  EXPECT_EQ(back, recs);
}

TEST_F(TempDir, EmptyResultsFileIsCreated) {
  write_results(dir_, "000000", {});
  ASSERT_TRUE(std::filesystem::exists(dir_ / "000000.txt"));
  EXPECT_EQ(std::filesystem::file_size(dir_ / "000000.txt"), 0u);
}

TEST_F(TempDir, SplitFilesAndDatasetLayout) {
  const std::vector<std::string> ids{frame_id(0), frame_id(3), frame_id(12)};
  EXPECT_EQ(ids[2], "000012");
  write_split(dir_ / "ImageSets" / "val.txt", ids);
  EXPECT_EQ(load_split(dir_ / "ImageSets" / "val.txt"), ids);
  EXPECT_THROW(parse_split("12\n"), ParseError);
  EXPECT_THROW(load_split(dir_ / "missing.txt"), IoError);

  const KittiDataset ds{dir_};
  for (const std::string& id : ids) {
    write_text_file(ds.label_path(id), kLine);
    write_text_file(ds.calib_path(id), format_calib(make_calibration(default_camera())));
  }
  EXPECT_EQ(ds.frames(), ids);
  EXPECT_EQ(ds.labels("000003").size(), 1u);
  EXPECT_DOUBLE_EQ(ds.calib("000012").camera.f_x, 721.5377);
  try {
    ds.labels("000099");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("000099"), std::string::npos);
  }
}

}  // namespace
