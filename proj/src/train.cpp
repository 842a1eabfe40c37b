#include "frnet/train.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace frnet::train {

namespace {

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct SampleResult {
  ad::GradientMap grads;
  double loss = 0;
  double error_deg = 0;
};

SampleResult run_sample(nn::FrNet& model, const data::SyntheticSample& s) {
  ad::Tape tape;
  ad::Var out = model.forward(tape, s.image);
  ad::Var loss = ad::smooth_l1(out, tape.constant(label_tensor(s.label)));
  SampleResult r;
  r.loss = static_cast<double>(loss.value()[0]);
  const auto pred = metrics::to_valid_range(output_angles(out.value()));
  r.error_deg = metrics::angular_error(metrics::angles_to_vector(s.label), metrics::angles_to_vector(pred));
  r.grads = tape.gradients(loss);
  return r;
}

std::string format_g(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general);
  return std::string(buf, res.ptr);
}

}  // namespace

AdamWState::AdamWState(std::span<ad::Parameter* const> params, AdamWConfig cfg) : config(cfg) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const auto* p : params) {
    m.emplace_back(p->value().shape());
    v.emplace_back(p->value().shape());
  }
}

void adamw_step(std::span<ad::Parameter* const> params, AdamWState& state, double lr) {
  if (state.m.empty() && !params.empty()) state = AdamWState(params, state.config);
  if (state.m.size() != params.size())
    throw InvalidArgument("adamw_step: optimizer state has " + std::to_string(state.m.size()) +
                          " slots for " + std::to_string(params.size()) + " parameters");
  const auto& c = state.config;
  ++state.t;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto* p = params[k];
    if (!p->trainable()) continue;
    auto& m = state.m[k].array();
    auto& v = state.v[k].array();
    const auto& g = p->grad().array();
    auto& theta = p->value().array();
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g * g;
    const auto m_hat = m / bc1;
    const auto v_hat = v / bc2;
    theta -= lr * (m_hat / (v_hat.sqrt() + c.eps) + c.weight_decay * theta);
  }
}

double smooth_l1(const Tensor& pred, const Tensor& target, double beta) {
  if (!(beta > 0)) throw InvalidArgument("smooth_l1: beta must be positive");
  if (pred.shape() != target.shape())
    throw ShapeError("smooth_l1: shape " + shape_string(pred.shape()) + " vs " +
                     shape_string(target.shape()));
  if (pred.size() == 0) throw ShapeError("smooth_l1: empty tensors");
  double total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = std::abs(static_cast<double>(pred[i]) - static_cast<double>(target[i]));
    total += d < beta ? 0.5 * d * d / beta : d - 0.5 * beta;
  }
  return total / static_cast<double>(pred.size());
}

Tensor label_tensor(const metrics::GazeAngles& a) {
  return Tensor({2}, {static_cast<real_t>(a.yaw), static_cast<real_t>(a.pitch)});
}

metrics::GazeAngles output_angles(const Tensor& out) {
  if (out.shape() != Shape{2}) throw ShapeError("model output must be [2], got " + shape_string(out.shape()));
  return {static_cast<double>(out[1]), static_cast<double>(out[0])};
}

std::string TrainLog::to_csv(bool include_timing) const {
  std::ostringstream os;
  os << "# lr_base = " << format_g(schedule.base_lr) << "\n"
     << "# lr_decayed = " << format_g(schedule.decayed_lr) << "\n"
     << "# lr_decay_epoch = " << schedule.decay_epoch << "\n"
     << "# batch_size = " << batch_size << "\n"
     << "# seed = " << seed << "\n";
  os << "epoch,lr,mean_loss,mean_angular_error_deg";
  if (include_timing) os << ",wall_seconds";
  os << "\n";
  for (const auto& e : epochs) {
    os << e.epoch << ',' << format_g(e.lr) << ',' << format_g(e.mean_loss) << ','
       << format_g(e.mean_angular_error_deg);
    if (include_timing) os << ',' << format_g(e.wall_seconds);
    os << "\n";
  }
  return os.str();
}

std::size_t default_threads() {
  if (const char* env = std::getenv("FRNET_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
  }
  return 1;
}

TrainLog train_loop(nn::FrNet& model, std::span<const data::SyntheticSample> dataset,
                    const TrainOptions& options) {
  if (dataset.empty()) throw InvalidArgument("train_loop: dataset is empty");
  if (options.batch_size == 0) throw InvalidArgument("train_loop: batch size must be >= 1");
  if (options.epochs == 0) throw InvalidArgument("train_loop: epochs must be >= 1");

  if (!options.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec) throw IoError("cannot create " + options.out_dir.string() + ": " + ec.message());
  }

  auto params = model.parameters();
  AdamWState state(params, options.optimizer);
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainLog log;
  log.schedule = options.schedule;
  log.batch_size = options.batch_size;
  log.seed = options.seed;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = options.schedule.lr(epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0, err_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t len = std::min(options.batch_size, order.size() - start);
      std::vector<SampleResult> results(len);
      parallel_for(len, options.threads,
                   [&](std::size_t i) { results[i] = run_sample(model, dataset[order[start + i]]); });
      ad::zero_grad(params);
      for (auto& r : results) {
        loss_sum += r.loss;
        err_sum += r.error_deg;
        for (auto* p : params) {
          const auto it = r.grads.find(p);
          if (it != r.grads.end()) p->grad().array() += it->second.array();
        }
      }
      const real_t inv = real_t(1) / static_cast<real_t>(len);
      for (auto* p : params) p->grad().array() *= inv;
      adamw_step(params, state, lr);
    }
    const double n = static_cast<double>(dataset.size());
    EpochRecord rec{epoch + 1, lr, loss_sum / n, err_sum / n,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
    log.epochs.push_back(rec);
    if (!options.out_dir.empty()) {
      char name[40];
      std::snprintf(name, sizeof name, "ckpt_epoch_%03zu.frck", epoch + 1);
      nn::save_checkpoint(options.out_dir / name, model);
      const auto log_path = options.out_dir / "log.csv";
      std::ofstream os(log_path);
      if (!os) throw IoError("cannot open " + log_path.string() + " for writing");
      os << log.to_csv();
      if (!os) throw IoError("failed writing " + log_path.string());
    }
    if (options.on_epoch) options.on_epoch(rec);
  }
  return log;
}

EvalResult evaluate(nn::FrNet& model, std::span<const data::SyntheticSample> dataset,
                    std::size_t threads) {
  if (dataset.empty()) throw InvalidArgument("evaluate: dataset is empty");
  EvalResult r;
  r.predictions.resize(dataset.size());
  std::vector<double> losses(dataset.size());
  parallel_for(dataset.size(), threads, [&](std::size_t i) {
    const Tensor out = model.predict(dataset[i].image);
    losses[i] = smooth_l1(out, label_tensor(dataset[i].label));
    r.predictions[i] = metrics::to_valid_range(output_angles(out));
  });
  std::vector<metrics::GazeAngles> truth(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) truth[i] = dataset[i].label;
  r.mean_angular_error_deg = metrics::mean_angular_error(r.predictions, truth);
  r.mean_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
  return r;
}

}  // namespace frnet::train
