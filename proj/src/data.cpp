#include "frnet/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "frnet/serialize.hpp"

namespace frnet::data {

namespace {

// Skin and sclera share the red level, so in channel 0 the eye region is flat
// except for the iris.
constexpr std::array<double, 3> kBackground{0.25, 0.25, 0.30};
constexpr std::array<double, 3> kSkin{0.95, 0.72, 0.60};
constexpr std::array<double, 3> kSclera{0.95, 0.95, 0.95};
constexpr std::array<double, 3> kIris{0.15, 0.30, 0.40};
constexpr std::array<double, 3> kMouth{0.70, 0.35, 0.35};
constexpr int kSupersample = 4;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool in_ellipse(double x, double y, double cx, double cy, double a, double b) {
  const double dx = (x - cx) / a, dy = (y - cy) / b;
  return dx * dx + dy * dy <= 1.0;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const std::string& context) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError(context + ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

FaceLayout face_layout(std::size_t size) {
  const double s = static_cast<double>(size);
  return FaceLayout{{0.32 * s, 0.68 * s}, 0.42 * s, 0.14 * s, 0.11 * s, 0.045 * s, s / 8.0};
}

SyntheticSample render_sample(const GazeAngles& label, std::size_t size, std::uint64_t seed,
                              const RenderOptions& options) {
  if (!((size & (size - 1)) == 0) || size < 32)
    throw InvalidArgument("render_sample: size must be a power of two >= 32, got " +
                          std::to_string(size));
  metrics::angles_to_vector(label);  // range check
  const auto L = face_layout(size);
  const double s = static_cast<double>(size);
  const double iris_x[2] = {L.eye_x[0] + L.gain * label.yaw, L.eye_x[1] + L.gain * label.yaw};
  const double iris_y = L.eye_y + L.gain * label.pitch;

  Tensor image({3, size, size});
  const std::size_t plane = size * size;
  const double inv = 1.0 / (kSupersample * kSupersample);
  for (std::size_t py = 0; py < size; ++py) {
    for (std::size_t px = 0; px < size; ++px) {
      std::array<double, 3> acc{0, 0, 0};
      for (int sy = 0; sy < kSupersample; ++sy) {
        for (int sx = 0; sx < kSupersample; ++sx) {
          const double x = static_cast<double>(px) + (sx + 0.5) / kSupersample;
          const double y = static_cast<double>(py) + (sy + 0.5) / kSupersample;
          const std::array<double, 3>* color = &kBackground;
          if (in_ellipse(x, y, 0.5 * s, 0.5 * s, 0.42 * s, 0.48 * s)) color = &kSkin;
          if (in_ellipse(x, y, 0.5 * s, 0.76 * s, 0.14 * s, 0.04 * s)) color = &kMouth;
          for (int e = 0; e < 2; ++e) {
            if (!in_ellipse(x, y, L.eye_x[e], L.eye_y, L.sclera_a, L.sclera_b)) continue;
            color = in_ellipse(x, y, iris_x[e], iris_y, L.iris_radius, L.iris_radius) ? &kIris
                                                                                     : &kSclera;
          }
          for (int c = 0; c < 3; ++c) acc[c] += (*color)[c];
        }
      }
      for (int c = 0; c < 3; ++c) image[c * plane + py * size + px] = static_cast<real_t>(acc[c] * inv);
    }
  }

  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> jitter(-options.brightness_jitter, options.brightness_jitter);
  const double gain = options.brightness_jitter > 0 ? 1.0 + jitter(rng) : 1.0;
  std::normal_distribution<double> noise(0.0, options.noise_sigma > 0 ? options.noise_sigma : 1.0);
  for (std::size_t i = 0; i < image.size(); ++i) {
    double v = static_cast<double>(image[i]) * gain;
    if (options.noise_sigma > 0) v += noise(rng);
    image[i] = static_cast<real_t>(std::clamp(v, 0.0, 1.0));
  }
  return {std::move(image), label};
}

std::pair<double, double> iris_offset(const Tensor& image, int eye) {
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != image.dim(2))
    throw ShapeError("iris_offset expects a square [3,s,s] image");
  const std::size_t size = image.dim(1);
  const auto L = face_layout(size);
  const double cx = L.eye_x[eye], cy = L.eye_y;
  const auto x0 = static_cast<std::size_t>(std::floor(cx - L.sclera_a));
  const auto x1 = static_cast<std::size_t>(std::ceil(cx + L.sclera_a));
  const auto y0 = static_cast<std::size_t>(std::floor(cy - L.sclera_b));
  const auto y1 = static_cast<std::size_t>(std::ceil(cy + L.sclera_b));
  const double bright = kSclera[0], dark = kIris[0];
  double w_sum = 0, wx = 0, wy = 0;
  for (std::size_t y = y0; y < std::min(y1, size); ++y) {
    for (std::size_t x = x0; x < std::min(x1, size); ++x) {
      const double v = static_cast<double>(image[y * size + x]);
      const double w = std::clamp((bright - v) / (bright - dark), 0.0, 1.0);
      w_sum += w;
      wx += w * (static_cast<double>(x) + 0.5);
      wy += w * (static_cast<double>(y) + 0.5);
    }
  }
  if (!(w_sum > 0)) return {0.0, 0.0};
  return {wx / w_sum - cx, wy / w_sum - cy};
}

GazeAngles estimate_gaze(const Tensor& image) {
  const auto L = face_layout(image.dim(1));
  const auto [lx, ly] = iris_offset(image, 0);
  const auto [rx, ry] = iris_offset(image, 1);
  return {0.5 * (ly + ry) / L.gain, 0.5 * (lx + rx) / L.gain};
}

void AngleRange::validate() const {
  constexpr double pi = std::numbers::pi;
  if (!(pitch_min <= pitch_max && yaw_min <= yaw_max))
    throw InvalidArgument("angle range bounds are inverted");
  if (pitch_min < -pi / 2 || pitch_max > pi / 2 || yaw_min <= -pi || yaw_max > pi)
    throw InvalidArgument("angle range outside pitch [-pi/2, pi/2], yaw (-pi, pi]");
}

std::vector<GazeAngles> draw_labels(std::size_t n, std::uint64_t seed, const AngleRange& range) {
  range.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pitch(range.pitch_min, range.pitch_max);
  std::uniform_real_distribution<double> yaw(range.yaw_min, range.yaw_max);
  std::vector<GazeAngles> labels(n);
  for (auto& l : labels) {
    l.pitch = pitch(rng);
    l.yaw = yaw(rng);
  }
  return labels;
}

DatasetManifest generate_dataset(std::size_t n, std::size_t size, std::uint64_t seed,
                                 const AngleRange& range, const std::filesystem::path& out_dir,
                                 const RenderOptions& options) {
  if (n < 1) throw InvalidArgument("generate_dataset: n must be >= 1");
  const auto labels = draw_labels(n, seed, range);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest m{n, size, out_dir / "labels.csv", out_dir / "images.bin"};
  std::ofstream csv(m.labels_csv);
  if (!csv) throw IoError("cannot open " + m.labels_csv.string() + " for writing");
  std::ofstream blob(m.images_blob, std::ios::binary);
  if (!blob) throw IoError("cannot open " + m.images_blob.string() + " for writing");
  csv << "index,pitch_rad,yaw_rad\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto sample = render_sample(labels[i], size, splitmix64(seed ^ (i * 0x2545f4914f6cdd1dULL)), options);
    csv << i << ',' << format_double(labels[i].pitch) << ',' << format_double(labels[i].yaw) << '\n';
    write_tensor(blob, sample.image, Dtype::F64);
  }
  if (!csv) throw IoError("failed writing " + m.labels_csv.string());
  if (!blob) throw IoError("failed writing " + m.images_blob.string());

  const auto manifest_path = out_dir / "manifest.txt";
  std::ofstream mf(manifest_path);
  if (!mf) throw IoError("cannot open " + manifest_path.string() + " for writing");
  mf << "format = frnet-dataset\nversion = 1\ncount = " << n << "\nimage_size = " << size
     << "\nlabels = labels.csv\nimages = images.bin\n";
  if (!mf) throw IoError("failed writing " + manifest_path.string());
  return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  if (path.empty()) throw IoError("dataset manifest path is empty");
  auto file = path;
  if (std::filesystem::is_directory(file)) file /= "manifest.txt";
  std::ifstream is(file);
  if (!is) throw IoError("cannot open dataset manifest " + file.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
  }
  if (kv["format"] != "frnet-dataset" || kv["version"] != "1")
    throw FormatError(file.string() + ": not a version-1 frnet dataset manifest");
  for (const char* key : {"count", "image_size", "labels", "images"})
    if (!kv.count(key)) throw FormatError(file.string() + ": missing key '" + key + "'");
  DatasetManifest m;
  m.count = static_cast<std::size_t>(parse_double(kv["count"], file.string()));
  m.image_size = static_cast<std::size_t>(parse_double(kv["image_size"], file.string()));
  const auto dir = file.parent_path();
  m.labels_csv = dir / kv["labels"];
  m.images_blob = dir / kv["images"];
  return m;
}

std::vector<SyntheticSample> load_dataset(const DatasetManifest& manifest) {
  std::ifstream csv(manifest.labels_csv);
  if (!csv) throw IoError("cannot open label file " + manifest.labels_csv.string());
  std::string line;
  if (!std::getline(csv, line) || line.rfind("index,pitch_rad,yaw_rad", 0) != 0)
    throw FormatError(manifest.labels_csv.string() + ": missing header index,pitch_rad,yaw_rad");
  std::vector<GazeAngles> labels;
  while (std::getline(csv, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw FormatError(manifest.labels_csv.string() + ": malformed row '" + line + "'");
    const auto index = parse_double(std::string_view(line).substr(0, c1), manifest.labels_csv.string());
    if (static_cast<std::size_t>(index) != labels.size())
      throw IntegrityError(manifest.labels_csv.string() + ": row index " + line.substr(0, c1) +
                           " out of order");
    labels.push_back({parse_double(std::string_view(line).substr(c1 + 1, c2 - c1 - 1),
                                   manifest.labels_csv.string()),
                      parse_double(std::string_view(line).substr(c2 + 1), manifest.labels_csv.string())});
  }
  if (labels.size() != manifest.count)
    throw IntegrityError(manifest.labels_csv.string() + ": " + std::to_string(labels.size()) +
                         " rows, manifest says " + std::to_string(manifest.count));

  std::ifstream blob(manifest.images_blob, std::ios::binary);
  if (!blob) throw IoError("cannot open image blob " + manifest.images_blob.string());
  std::vector<SyntheticSample> out;
  out.reserve(labels.size());
  const Shape expected{3, manifest.image_size, manifest.image_size};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Tensor image;
    try {
      image = read_tensor(blob);
    } catch (const IntegrityError& e) {
      throw IntegrityError(manifest.images_blob.string() + ": record " + std::to_string(i) + " of " +
                           std::to_string(labels.size()) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(manifest.images_blob.string() + ": record " + std::to_string(i) + ": " +
                        e.what());
    }
    if (image.shape() != expected)
      throw IntegrityError(manifest.images_blob.string() + ": record " + std::to_string(i) +
                           " has shape " + shape_string(image.shape()) + ", expected " +
                           shape_string(expected));
    out.push_back({std::move(image), labels[i]});
  }
  if (blob.peek() != std::char_traits<char>::eof())
    throw IntegrityError(manifest.images_blob.string() + ": more records than the manifest count " +
                         std::to_string(manifest.count));
  return out;
}

std::vector<SyntheticSample> load_dataset(const std::filesystem::path& manifest_path) {
  return load_dataset(read_manifest(manifest_path));
}

}  // namespace frnet::data
