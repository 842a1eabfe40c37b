// frnet: verification, cost reports, data generation, training and inference.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "frnet/data.hpp"
#include "frnet/error.hpp"
#include "frnet/nn.hpp"
#include "frnet/profile.hpp"
#include "frnet/serialize.hpp"
#include "frnet/train.hpp"
#include "frnet/verify.hpp"

namespace fs = std::filesystem;
using namespace frnet;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

struct ModelArgs {
  std::string config_path;
  std::size_t input_size = 0;
  std::vector<std::string> ablate;
  std::vector<std::string> set;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Model config file (key = value lines)");
    cmd->add_option("--input-size", input_size, "Override the input resolution");
    cmd->add_option("--ablate", ablate, "Ablation flag to enable (repeatable)");
    cmd->add_option("--set", set, "Override one config field, key=value (repeatable)");
  }

  nn::ModelConfig resolve(nn::ModelConfig fallback) const {
    nn::ModelConfig c = config_path.empty() ? fallback : nn::ModelConfig::load(config_path);
    if (input_size) c.input_size = input_size;
    for (const auto& kv : set) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
      c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& f : ablate) c.ablate(f);
    c.validate();
    return c;
  }
};

void echo_config(const nn::ModelConfig& c, std::uint64_t seed) {
  std::istringstream is(c.to_text());
  std::string line;
  std::cerr << "# effective config\n";
  while (std::getline(is, line)) std::cerr << "#   " << line << "\n";
  std::cerr << "#   seed = " << seed << "\n";
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int cmd_verify(const std::vector<std::string>& suites, const std::string& fault, std::uint64_t seed) {
  if (!fault.empty()) {
    const auto op = ad::op_from_name(fault);
    if (!op) throw InvalidArgument("--inject-fault: unknown op '" + fault + "'");
    ad::testing::inject_fault(*op);
    std::cout << "injected fault into the backward rule of " << fault << "\n";
  }
  std::vector<std::string> names = suites;
  if (names.empty())
    for (auto s : verify::kSuites) names.emplace_back(s);
  verify::Options opts;
  opts.seed = seed;
  bool all = true;
  for (const auto& name : names) {
    const auto r = verify::run_suite(name, opts);
    std::printf("%s %-8s %5zu cases  max error %.3e  %.2fs\n", r.passed() ? "PASS" : "FAIL", r.suite.c_str(),
                r.cases, r.max_error, r.seconds);
    for (const auto& f : r.failures) std::printf("    failed: %s\n", f.c_str());
    all = all && r.passed();
  }
  ad::testing::inject_fault(std::nullopt);
  return all ? kOk : kFailed;
}

int cmd_count(const ModelArgs& margs, bool assert_budget, bool json, bool csv, std::uint64_t seed) {
  const auto config = margs.resolve(nn::ModelConfig::paper());
  if (!json) echo_config(config, seed);
  const nn::FrNet model(config, seed);
  const auto report = profile::cost_report(model);
  if (json)
    std::cout << report.to_json() << "\n";
  else if (csv)
    std::cout << report.to_csv();
  else
    std::cout << report.to_table();
  if (!assert_budget) return kOk;
  bool ok = true;
  if (!report.params_within_budget()) {
    std::cerr << "budget: params " << report.total_params << " outside [" << profile::kParamsLow << ", "
              << profile::kParamsHigh << "]\n";
    ok = false;
  }
  if (!report.flops_within_budget()) {
    std::cerr << "budget: FLOPs " << report.total_flops << " outside [" << profile::kFlopsLow << ", "
              << profile::kFlopsHigh << "]\n";
    ok = false;
  }
  if (ok) std::cerr << "budget: params and FLOPs within bands\n";
  return ok ? kOk : kFailed;
}

int cmd_bench(const std::string& op, const std::vector<std::size_t>& sizes, std::size_t kernel,
              std::size_t repeats, bool inference, const ModelArgs& margs, bool json, std::uint64_t seed) {
  nlohmann::json j;
  if (!inference) {
    std::vector<profile::ScalingRow> rows;
    if (op == "spectral" || op == "both") {
      auto r = profile::bench_scaling(profile::ScalingOp::SpectralConv, sizes, kernel, repeats, seed);
      rows.insert(rows.end(), r.begin(), r.end());
    }
    if (op == "direct" || op == "both") {
      auto r = profile::bench_scaling(profile::ScalingOp::DirectConv, sizes, kernel, repeats, seed);
      rows.insert(rows.end(), r.begin(), r.end());
    }
    if (!json) {
      std::cout << profile::scaling_csv(rows);
      return kOk;
    }
    j["hardware"] = profile::hardware_descriptor();
    for (const auto& r : rows)
      j["scaling"].push_back({{"op", profile::scaling_op_name(r.op)}, {"size", r.size}, {"kernel", r.kernel},
                              {"repeats", r.repeats}, {"median_ms", r.median_ms}});
    std::cout << j.dump(2) << "\n";
    return kOk;
  }
  const auto config = margs.resolve(nn::ModelConfig::paper());
  if (!json) echo_config(config, seed);
  nn::FrNet model(config, seed);
  const auto rep = profile::bench_inference(model, std::max<std::size_t>(repeats, 10), 2, seed);
  if (json) {
    j = {{"input_size", rep.input_size}, {"repeats", rep.repeats}, {"median_ms", rep.median_ms},
         {"min_ms", rep.min_ms}, {"max_ms", rep.max_ms}, {"hardware", rep.hardware}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "input " << rep.input_size << "x" << rep.input_size << ": median " << fmt("%.3f", rep.median_ms)
              << " ms over " << rep.repeats << " runs (min " << fmt("%.3f", rep.min_ms) << ", max "
              << fmt("%.3f", rep.max_ms) << ")\nhardware: " << rep.hardware << "\n";
  }
  return kOk;
}

int cmd_gen_data(std::size_t n, std::size_t size, std::uint64_t seed, const std::string& out,
                 const data::AngleRange& range, const data::RenderOptions& render) {
  if (out.empty()) throw InvalidArgument("gen-data needs --out DIR");
  const auto m = data::generate_dataset(n, size, seed, range, out, render);
  std::cout << "wrote " << m.count << " samples of " << size << "x" << size << " to " << out << "\n";
  return kOk;
}

struct TrainArgs {
  std::string dataset;
  std::size_t n = 0;
  std::size_t epochs = 20;
  std::size_t batch = 16;
  std::string out = "frnet_run";
  double lr_base = 4e-4;
  double lr_decayed = 4e-5;
  std::size_t lr_decay_epoch = 10;
  std::size_t threads = 0;
};

int cmd_train(const TrainArgs& a, const ModelArgs& margs, std::uint64_t seed) {
  std::vector<data::SyntheticSample> samples;
  std::size_t image_size = 0;
  if (!a.dataset.empty()) {
    const auto m = data::read_manifest(a.dataset);
    image_size = m.image_size;
    samples = data::load_dataset(m);
  } else if (a.n > 0) {
    nn::ModelConfig base = margs.resolve(nn::ModelConfig::desk());
    image_size = base.input_size;
    const auto dir = fs::path(a.out) / "data";
    data::generate_dataset(a.n, image_size, seed, {}, dir);
    samples = data::load_dataset(dir);
  } else {
    throw IoError("train needs --dataset DIR or --n COUNT");
  }
  if (samples.empty()) throw InvalidArgument("dataset is empty");

  auto fallback = nn::ModelConfig::desk();
  fallback.input_size = image_size;
  const auto config = margs.resolve(fallback);
  if (config.input_size != image_size)
    throw InvalidArgument("config input_size " + std::to_string(config.input_size) + " does not match dataset images " +
                          std::to_string(image_size));
  echo_config(config, seed);

  train::TrainOptions opts;
  opts.epochs = a.epochs;
  opts.batch_size = a.batch;
  opts.schedule = {a.lr_base, a.lr_decayed, a.lr_decay_epoch};
  opts.seed = seed;
  opts.threads = a.threads ? a.threads : train::default_threads();
  opts.out_dir = a.out;
  std::cerr << "# schedule: lr_base = " << a.lr_base << ", lr_decayed = " << a.lr_decayed
            << ", lr_decay_epoch = " << a.lr_decay_epoch << ", batch = " << a.batch << ", threads = " << opts.threads
            << "\n";
  opts.on_epoch = [](const train::EpochRecord& e) {
    std::printf("epoch %3zu  lr %.1e  loss %.6f  angular error %.3f deg  %.1fs\n", e.epoch, e.lr, e.mean_loss,
                e.mean_angular_error_deg, e.wall_seconds);
    std::fflush(stdout);
  };
  nn::FrNet model(config, seed);
  train::train_loop(model, samples, opts);
  std::cout << "log and checkpoints in " << a.out << "\n";
  return kOk;
}

nn::FrNet load_model(const std::string& checkpoint) {
  if (checkpoint.empty()) throw IoError("no checkpoint given (pass --checkpoint FILE)");
  return nn::load_checkpoint(checkpoint);
}

int cmd_eval(const std::string& checkpoint, const std::string& dataset, std::size_t threads, bool json,
             std::uint64_t seed) {
  auto model = load_model(checkpoint);
  if (!json) echo_config(model.config(), seed);
  const auto m = data::read_manifest(dataset);
  if (m.count == 0) throw InvalidArgument("dataset " + dataset + " is empty");
  if (m.image_size != model.config().input_size)
    throw FormatError("dataset images are " + std::to_string(m.image_size) + "x" + std::to_string(m.image_size) +
                      ", checkpoint expects " + std::to_string(model.config().input_size));
  const auto samples = data::load_dataset(m);
  const auto r = train::evaluate(model, samples, threads ? threads : train::default_threads());
  if (json)
    std::cout << nlohmann::json{{"samples", samples.size()}, {"mean_angular_error_deg", r.mean_angular_error_deg},
                                {"mean_loss", r.mean_loss}}
                     .dump(2)
              << "\n";
  else
    std::cout << "mean angular error " << fmt("%.4f", r.mean_angular_error_deg) << " deg over " << samples.size()
              << " samples (mean loss " << fmt("%.6g", r.mean_loss) << ")\n";
  return kOk;
}

int cmd_infer(const std::string& checkpoint, const std::string& image_path, bool json, std::uint64_t seed) {
  auto model = load_model(checkpoint);
  if (!json) echo_config(model.config(), seed);
  const Tensor image = load_tensor(image_path);
  const std::size_t s = model.config().input_size;
  if (image.shape() != Shape{3, s, s})
    throw FormatError(image_path + ": input tensor has shape " + shape_string(image.shape()) + ", expected " +
                      shape_string({3, s, s}));
  const auto a = train::output_angles(model.predict(image));
  const double to_deg = 180.0 / std::numbers::pi;
  if (json) {
    std::cout << nlohmann::json{{"yaw_rad", a.yaw}, {"pitch_rad", a.pitch}, {"yaw_deg", a.yaw * to_deg},
                                {"pitch_deg", a.pitch * to_deg}}
                     .dump()
              << "\n";
  } else {
    std::printf("yaw   %+.6f rad  %+.4f deg\npitch %+.6f rad  %+.4f deg\n", a.yaw, a.yaw * to_deg, a.pitch,
                a.pitch * to_deg);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frnet: FFT residual gaze network toolkit"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* cmd) { cmd->add_option("--seed", seed, "Random seed (default 0)"); };

  auto* verify_cmd = app.add_subcommand("verify", "Run the oracle verification suites");
  std::vector<std::string> suites;
  std::string fault;
  verify_cmd->add_option("--suite", suites, "Suite to run: fft, conv, mask, grad, metrics (repeatable)")
      ->check(CLI::IsMember({"fft", "conv", "mask", "grad", "metrics"}));
  verify_cmd->add_option("--inject-fault", fault, "Perturb the backward rule of one op (harness self-test)");
  add_seed(verify_cmd);

  auto* count_cmd = app.add_subcommand("count", "Parameter and FLOP report");
  ModelArgs count_model;
  bool assert_budget = false, count_json = false, count_csv = false;
  count_model.add(count_cmd);
  count_cmd->add_flag("--assert-budget", assert_budget, "Exit 1 unless params and FLOPs are within the bands");
  count_cmd->add_flag("--json", count_json, "Machine-readable report");
  count_cmd->add_flag("--csv", count_csv, "CSV breakdown");
  add_seed(count_cmd);

  auto* bench_cmd = app.add_subcommand("bench", "Wall-clock benchmarks");
  std::string bench_op = "both";
  std::vector<std::size_t> sizes{32, 64, 128};
  std::size_t kernel = 0, repeats = 5;
  bool inference = false, bench_json = false;
  ModelArgs bench_model;
  bench_cmd->add_option("--op", bench_op, "spectral, direct or both")->check(CLI::IsMember({"spectral", "direct", "both"}));
  bench_cmd->add_option("--sizes", sizes, "Square sizes (powers of two)")->delimiter(',');
  bench_cmd->add_option("--kernel", kernel, "Kernel side; 0 means the full input size");
  bench_cmd->add_option("--repeats", repeats, "Timed samples per size (>= 5)");
  bench_cmd->add_flag("--inference", inference, "Time single-image model inference instead");
  bench_cmd->add_flag("--json", bench_json, "Machine-readable output");
  bench_model.add(bench_cmd);
  add_seed(bench_cmd);

  auto* gen_cmd = app.add_subcommand("gen-data", "Render a synthetic gaze dataset");
  std::size_t gen_n = 512, gen_size = 64;
  std::string gen_out;
  data::AngleRange range;
  data::RenderOptions render;
  gen_cmd->add_option("--n", gen_n, "Sample count");
  gen_cmd->add_option("--size", gen_size, "Image side (power of two, >= 32)");
  gen_cmd->add_option("--out", gen_out, "Output directory")->required();
  gen_cmd->add_option("--pitch-min", range.pitch_min);
  gen_cmd->add_option("--pitch-max", range.pitch_max);
  gen_cmd->add_option("--yaw-min", range.yaw_min);
  gen_cmd->add_option("--yaw-max", range.yaw_max);
  gen_cmd->add_option("--noise", render.noise_sigma, "Pixel noise sigma");
  gen_cmd->add_option("--jitter", render.brightness_jitter, "Brightness gain jitter");
  add_seed(gen_cmd);

  auto* train_cmd = app.add_subcommand("train", "Train on a dataset");
  TrainArgs targs;
  ModelArgs train_model;
  train_cmd->add_option("--dataset", targs.dataset, "Dataset directory or manifest");
  train_cmd->add_option("--n", targs.n, "Generate this many samples instead of loading a dataset");
  train_cmd->add_option("--epochs", targs.epochs);
  train_cmd->add_option("--batch", targs.batch);
  train_cmd->add_option("--out", targs.out, "Directory for log.csv and checkpoints");
  train_cmd->add_option("--lr-base", targs.lr_base);
  train_cmd->add_option("--lr-decayed", targs.lr_decayed);
  train_cmd->add_option("--lr-decay-epoch", targs.lr_decay_epoch);
  train_cmd->add_option("--threads", targs.threads, "Worker threads (default FRNET_THREADS or 1)");
  train_model.add(train_cmd);
  add_seed(train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Mean angular error of a checkpoint on a dataset");
  std::string eval_ckpt, eval_data;
  std::size_t eval_threads = 0;
  bool eval_json = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--dataset", eval_data)->required();
  eval_cmd->add_option("--threads", eval_threads);
  eval_cmd->add_flag("--json", eval_json);
  add_seed(eval_cmd);

  auto* infer_cmd = app.add_subcommand("infer", "Predict yaw and pitch for one image tensor");
  std::string infer_ckpt, infer_image;
  bool infer_json = false;
  infer_cmd->add_option("--checkpoint", infer_ckpt)->required();
  infer_cmd->add_option("--image", infer_image, "Tensor file holding a [3,S,S] image")->required();
  infer_cmd->add_flag("--json", infer_json);
  add_seed(infer_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*verify_cmd) return cmd_verify(suites, fault, seed);
    if (*count_cmd) return cmd_count(count_model, assert_budget, count_json, count_csv, seed);
    if (*bench_cmd) return cmd_bench(bench_op, sizes, kernel, repeats, inference, bench_model, bench_json, seed);
    if (*gen_cmd) return cmd_gen_data(gen_n, gen_size, seed, gen_out, range, render);
    if (*train_cmd) return cmd_train(targs, train_model, seed);
    if (*eval_cmd) return cmd_eval(eval_ckpt, eval_data, eval_threads, eval_json, seed);
    if (*infer_cmd) return cmd_infer(infer_ckpt, infer_image, infer_json, seed);
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kFailed;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kUsage;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
