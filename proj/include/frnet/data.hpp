#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "frnet/metrics.hpp"
#include "frnet/tensor.hpp"

namespace frnet::data {

using metrics::GazeAngles;

struct SyntheticSample {
  Tensor image;  // [3, s, s], values in [0, 1]
  GazeAngles label;
};

struct RenderOptions {
  double noise_sigma = 0.05;
  double brightness_jitter = 0.1;  // global gain drawn from [1 - j, 1 + j]
};

/// Fixed face layout for a given image size, in pixel units (x right, y down).
struct FaceLayout {
  double eye_x[2];
  double eye_y;
  double sclera_a;  // horizontal semi-axis
  double sclera_b;  // vertical semi-axis
  double iris_radius;
  double gain;  // iris offset per radian: (dx, dy) = gain * (yaw, pitch)
};

FaceLayout face_layout(std::size_t size);

/// Renders a stylized face: two sclera ellipses at fixed positions, each holding
/// an iris disk displaced by gain * (yaw, pitch) pixels, with size/8 px per
/// radian. Seeded Gaussian pixel noise and a global brightness gain follow.
/// Pure function of (label, size, seed, options).
SyntheticSample render_sample(const GazeAngles& label, std::size_t size, std::uint64_t seed,
                              const RenderOptions& options = {});

/// Closed-form inverse of the renderer: the iris-coverage centroid inside each
/// eye box, mapped back through the layout gain and averaged over both eyes.
GazeAngles estimate_gaze(const Tensor& image);

/// Iris-coverage centroid of one eye in pixels, relative to that eye's center.
std::pair<double, double> iris_offset(const Tensor& image, int eye);

struct AngleRange {
  double pitch_min = -0.35, pitch_max = 0.35;
  double yaw_min = -0.35, yaw_max = 0.35;

  void validate() const;
};

struct DatasetManifest {
  std::size_t count = 0;
  std::size_t image_size = 0;
  std::filesystem::path labels_csv;
  std::filesystem::path images_blob;
};

/// Writes `manifest.txt`, `labels.csv` (header `index,pitch_rad,yaw_rad`) and
/// `images.bin` (concatenated tensor records, CSV order) into `out_dir`.
DatasetManifest generate_dataset(std::size_t n, std::size_t size, std::uint64_t seed,
                                 const AngleRange& range, const std::filesystem::path& out_dir,
                                 const RenderOptions& options = {});

/// The labels generate_dataset draws for (n, seed, range), without rendering.
std::vector<GazeAngles> draw_labels(std::size_t n, std::uint64_t seed, const AngleRange& range);

/// Accepts either the manifest file or the directory containing `manifest.txt`.
DatasetManifest read_manifest(const std::filesystem::path& path);

std::vector<SyntheticSample> load_dataset(const DatasetManifest& manifest);
std::vector<SyntheticSample> load_dataset(const std::filesystem::path& manifest_path);

}  // namespace frnet::data
