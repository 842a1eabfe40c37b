#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "frnet/data.hpp"
#include "frnet/metrics.hpp"
#include "frnet/nn.hpp"

namespace frnet::train {

/// Step schedule on zero-based epoch index.
struct Schedule {
  double base_lr = 4e-4;
  double decayed_lr = 4e-5;
  std::size_t decay_epoch = 10;

  double lr(std::size_t epoch) const { return epoch < decay_epoch ? base_lr : decayed_lr; }
};

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWState {
  AdamWConfig config;
  std::size_t t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  AdamWState() = default;
  explicit AdamWState(std::span<ad::Parameter* const> params, AdamWConfig cfg = {});
};

/// theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta),
/// reading gradients from Parameter::grad. Frozen parameters are skipped.
void adamw_step(std::span<ad::Parameter* const> params, AdamWState& state, double lr);

/// Mean over elements of 0.5 d^2 / beta (|d| < beta) or |d| - 0.5 beta.
double smooth_l1(const Tensor& pred, const Tensor& target, double beta = 1.0);

/// Model outputs are [yaw, pitch]; labels store pitch first.
Tensor label_tensor(const metrics::GazeAngles& a);
metrics::GazeAngles output_angles(const Tensor& out);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lr = 0;
  double mean_loss = 0;
  double mean_angular_error_deg = 0;
  double wall_seconds = 0;
};

struct TrainOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  Schedule schedule;
  AdamWConfig optimizer;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  /// When set, log.csv and ckpt_epoch_NNN.frck are written here.
  std::filesystem::path out_dir;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainLog {
  Schedule schedule;
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;

  /// `# key = value` header lines, then epoch,lr,mean_loss,mean_angular_error_deg,wall_seconds.
  std::string to_csv(bool include_timing = true) const;
};

/// Default worker count: FRNET_THREADS when set and positive, else 1.
std::size_t default_threads();

/// Per-epoch shuffle from the seed; each batch runs per-sample forward/backward,
/// sums gradients in sample order and divides by the batch length before one
/// AdamW step. The epoch's loss and angular error average the per-sample values
/// seen during that epoch.
TrainLog train_loop(nn::FrNet& model, std::span<const data::SyntheticSample> dataset,
                    const TrainOptions& options);

struct EvalResult {
  double mean_angular_error_deg = 0;
  double mean_loss = 0;
  std::vector<metrics::GazeAngles> predictions;
};

EvalResult evaluate(nn::FrNet& model, std::span<const data::SyntheticSample> dataset,
                    std::size_t threads = 1);

}  // namespace frnet::train
