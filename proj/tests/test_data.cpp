#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "frnet/data.hpp"
#include "frnet/serialize.hpp"
#include "test_util.hpp"

using namespace frnet;
using data::GazeAngles;

namespace {

const data::RenderOptions kClean{0.0, 0.0};

}  // namespace

TEST(Render, ShapeAndRange) {
  const auto s = data::render_sample({0.2, -0.1}, 64, 3);
  EXPECT_EQ(s.image.shape(), (Shape{3, 64, 64}));
  EXPECT_GE(s.image.array().minCoeff(), 0.0);
  EXPECT_LE(s.image.array().maxCoeff(), 1.0);
  EXPECT_EQ(s.label.pitch, 0.2);
  EXPECT_EQ(s.label.yaw, -0.1);
}

TEST(Render, RejectsBadSizes) {
  EXPECT_THROW(data::render_sample({}, 16, 0), InvalidArgument);
  EXPECT_THROW(data::render_sample({}, 48, 0), InvalidArgument);
}

TEST(Render, DeterministicInSeed) {
  const auto a = data::render_sample({0.1, 0.1}, 32, 5);
  const auto b = data::render_sample({0.1, 0.1}, 32, 5);
  const auto c = data::render_sample({0.1, 0.1}, 32, 6);
  EXPECT_EQ(a.image, b.image);
  EXPECT_FALSE(a.image == c.image);
}

TEST(Render, ZeroGazeCentersIrises) {
  const auto s = data::render_sample({0, 0}, 64, 0, kClean);
  for (int eye = 0; eye < 2; ++eye) {
    const auto [dx, dy] = data::iris_offset(s.image, eye);
    EXPECT_NEAR(dx, 0, 0.02) << eye;
    EXPECT_NEAR(dy, 0, 0.02) << eye;
  }
}

TEST(Render, IrisDisplacementFollowsGain) {
  const std::size_t size = 64;
  const double gain = data::face_layout(size).gain;
  EXPECT_DOUBLE_EQ(gain, 8.0);
  for (double yaw : {-0.35, 0.35}) {
    const auto s = data::render_sample({0, yaw}, size, 0, kClean);
    for (int eye = 0; eye < 2; ++eye) EXPECT_NEAR(data::iris_offset(s.image, eye).first, gain * yaw, 0.1);
  }
  const auto s = data::render_sample({0.3, 0}, size, 0, kClean);
  EXPECT_NEAR(data::iris_offset(s.image, 0).second, gain * 0.3, 0.1);
}

TEST(Render, ClosedFormOracleRecoversNoiselessLabels) {
  const auto labels = data::draw_labels(50, 4, {});
  std::vector<GazeAngles> est;
  std::uint64_t seed = 0;
  for (const auto& l : labels) est.push_back(data::estimate_gaze(data::render_sample(l, 64, seed++, kClean).image));
  EXPECT_LT(metrics::mean_angular_error(est, labels), 2.0);
}

TEST(Labels, DrawnUniformlyInRange) {
  const data::AngleRange range;
  const auto labels = data::draw_labels(1000, 11, range);
  ASSERT_EQ(labels.size(), 1000u);
  double mp = 0, my = 0;
  for (const auto& l : labels) {
    EXPECT_GE(l.pitch, range.pitch_min);
    EXPECT_LE(l.pitch, range.pitch_max);
    EXPECT_GE(l.yaw, range.yaw_min);
    EXPECT_LE(l.yaw, range.yaw_max);
    mp += l.pitch;
    my += l.yaw;
  }
  // uniform on [-a, a]: sd of the sample mean is a / sqrt(3 n)
  const double sd = 0.35 / std::sqrt(3.0 * 1000);
  EXPECT_LT(std::abs(mp / 1000), 3 * sd);
  EXPECT_LT(std::abs(my / 1000), 3 * sd);
  EXPECT_EQ(data::draw_labels(10, 11, range)[3].yaw, data::draw_labels(10, 11, range)[3].yaw);
}

TEST(Labels, RangeValidation) {
  data::AngleRange inverted;
  inverted.pitch_min = 0.5;
  inverted.pitch_max = 0.1;
  EXPECT_THROW(inverted.validate(), InvalidArgument);
  data::AngleRange wide;
  wide.yaw_max = 4.0;
  EXPECT_THROW(wide.validate(), InvalidArgument);
}

TEST(Dataset, GenerateLoadRoundTrip) {
  test::TempDir dir;
  const auto m = data::generate_dataset(6, 32, 9, {}, dir.path());
  EXPECT_EQ(m.count, 6u);
  EXPECT_EQ(m.image_size, 32u);
  const auto ds = data::load_dataset(dir.path());
  ASSERT_EQ(ds.size(), 6u);
  const auto labels = data::draw_labels(6, 9, {});
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(ds[i].label.pitch, labels[i].pitch);
    EXPECT_EQ(ds[i].label.yaw, labels[i].yaw);
  }
  EXPECT_EQ(test::read_file(m.labels_csv).substr(0, 24), "index,pitch_rad,yaw_rad\n");

  // regenerate from the same seed: every file matches bitwise
  test::TempDir again;
  data::generate_dataset(6, 32, 9, {}, again.path());
  for (const char* f : {"labels.csv", "images.bin", "manifest.txt"})
    EXPECT_EQ(test::read_file(dir / f), test::read_file(again / f)) << f;

  // rewriting the loaded samples reproduces images.bin
  std::ostringstream os;
  for (const auto& s : ds) write_tensor(os, s.image);
  EXPECT_EQ(os.str(), test::read_file(dir / "images.bin"));
}

TEST(Dataset, ManifestPathForms) {
  test::TempDir dir;
  data::generate_dataset(2, 32, 0, {}, dir.path());
  EXPECT_EQ(data::read_manifest(dir.path()).count, 2u);
  EXPECT_EQ(data::read_manifest(dir / "manifest.txt").count, 2u);
  EXPECT_THROW(data::read_manifest(""), IoError);
  EXPECT_THROW(data::read_manifest(dir / "nope"), IoError);
  test::write_file(dir / "manifest.txt", "format = something-else\nversion = 1\n");
  EXPECT_THROW(data::read_manifest(dir.path()), FormatError);
}

TEST(Dataset, CorruptFilesFailLoudly) {
  test::TempDir dir;
  const auto m = data::generate_dataset(4, 32, 1, {}, dir.path());
  const std::string blob = test::read_file(m.images_blob);
  const std::string csv = test::read_file(m.labels_csv);

  test::write_file(m.images_blob, blob.substr(0, blob.size() - 17));
  EXPECT_THROW(data::load_dataset(dir.path()), IntegrityError);

  test::write_file(m.images_blob, blob + blob.substr(0, blob.size() / 4));
  EXPECT_THROW(data::load_dataset(dir.path()), IntegrityError);

  test::write_file(m.images_blob, blob);
  test::write_file(m.labels_csv, csv.substr(0, csv.rfind('\n', csv.size() - 2) + 1));
  EXPECT_THROW(data::load_dataset(dir.path()), IntegrityError);

  test::write_file(m.labels_csv, "idx,pitch,yaw\n");
  EXPECT_THROW(data::load_dataset(dir.path()), FormatError);

  test::write_file(m.labels_csv, csv);
  std::string bad_magic = blob;
  bad_magic[0] = 'Q';
  test::write_file(m.images_blob, bad_magic);
  EXPECT_THROW(data::load_dataset(dir.path()), FormatError);

  test::write_file(m.images_blob, blob);
  EXPECT_EQ(data::load_dataset(dir.path()).size(), 4u);
}

TEST(Dataset, RejectsEmptyCount) {
  test::TempDir dir;
  EXPECT_THROW(data::generate_dataset(0, 32, 0, {}, dir.path()), InvalidArgument);
}
