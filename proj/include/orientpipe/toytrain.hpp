#pragma once

// Linear softmax classifier over synthetic orientation features, trained with
// either the cyclic soft-label loss or plain one-hot cross-entropy, to compare
// the two losses in isolation.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "orientpipe/angles.hpp"
#include "orientpipe/config.hpp"
#include "orientpipe/error.hpp"
#include "orientpipe/eval.hpp"

namespace orientpipe::toytrain {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kFeatureDim = 16;  // (cos, sin) + 14 nuisance channels

/// (cos a, sin a) with Gaussian noise sigma, then 14 standard-normal nuisance values.
inline Eigen::VectorXd make_features(double alpha_deg, double sigma, std::mt19937_64& rng) {
  if (sigma < 0.0) throw Error(Errc::InvalidArgument, "sigma must be >= 0");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd x(kFeatureDim);
  const double a = alpha_deg * angles::kDegToRad;
  const double n0 = gauss(rng), n1 = gauss(rng);
  x(0) = std::cos(a) + sigma * n0;
  x(1) = std::sin(a) + sigma * n1;
  for (int i = 2; i < kFeatureDim; ++i) x(i) = gauss(rng);
  return x;
}

inline Eigen::VectorXd make_features(double alpha_deg, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return make_features(alpha_deg, sigma, rng);
}

enum class Loss { Cyclic, OneHot };

inline std::string_view to_string(Loss l) { return l == Loss::Cyclic ? "cyclic" : "one-hot"; }

struct Dataset {
  RowMatrix features;       // n x d
  std::vector<double> angles;
};

inline Dataset make_dataset(std::size_t n, double sigma, std::mt19937_64& rng) {
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), kFeatureDim);
  ds.angles.resize(n);
  std::uniform_real_distribution<double> angle(0.0, 360.0);
  for (std::size_t i = 0; i < n; ++i) {
    ds.angles[i] = angle(rng);
    ds.features.row(static_cast<Eigen::Index>(i)) = make_features(ds.angles[i], sigma, rng).transpose();
  }
  return ds;
}

/// Target distributions per sample: soft labels for the cyclic loss, the
/// one-hot bin indicator otherwise.
inline RowMatrix targets(const Dataset& ds, const angles::BinSet& bins, Loss loss) {
  RowMatrix y(static_cast<Eigen::Index>(ds.angles.size()), bins.k());
  for (std::size_t i = 0; i < ds.angles.size(); ++i) {
    const auto dist = loss == Loss::Cyclic ? angles::soft_labels(ds.angles[i], bins)
                                           : angles::one_hot(angles::bin_of(ds.angles[i], bins), bins);
    for (int j = 0; j < bins.k(); ++j) y(static_cast<Eigen::Index>(i), j) = dist[static_cast<std::size_t>(j)];
  }
  return y;
}

struct ToyModel {
  Eigen::MatrixXd weights;  // k x d
  Eigen::VectorXd bias;     // k

  RowMatrix logits(const RowMatrix& x) const {
    RowMatrix z = x * weights.transpose();
    z.rowwise() += bias.transpose();
    return z;
  }
};

struct TrainOptions {
  Loss loss = Loss::Cyclic;
  int epochs = 500;
  double lr = 0.1;
  std::uint64_t seed = 1;
  double init_scale = 0.01;
};

struct TrainResult {
  ToyModel model;
  std::vector<double> history;  // mean training loss before each update
};

namespace detail {

// Mean loss and gradient w.r.t. the logits. Every row goes through the
// angles module's softmax/cross-entropy code.
inline double loss_and_grad(const RowMatrix& logits, const RowMatrix& y, RowMatrix& grad) {
  grad.resize(logits.rows(), logits.cols());
  const auto k = static_cast<std::size_t>(logits.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    std::span<const double> z(logits.row(i).data(), k);
    std::span<const double> t(y.row(i).data(), k);
    std::span<double> g(grad.row(i).data(), k);
    angles::softmax_cross_entropy_grad(z, t, g);
    // grad = p - y, so the probabilities are recoverable without a second softmax.
    double row_loss = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      if (t[j] != 0.0) row_loss -= t[j] * std::log(g[j] + t[j]);
    loss += row_loss;
  }
  const double n = static_cast<double>(logits.rows());
  grad /= n;
  return loss / n;
}

}  // namespace detail

/// Full-batch gradient descent on mean cross-entropy against `y`.
inline TrainResult train(const Dataset& ds, const RowMatrix& y, const TrainOptions& opt) {
  if (ds.angles.empty()) throw Error(Errc::EmptyInput, "empty training set");
  if (!(opt.lr > 0.0)) throw Error(Errc::InvalidArgument, "learning rate must be > 0");
  if (y.rows() != ds.features.rows()) throw Error(Errc::DimensionMismatch, "targets do not match features");
  const auto k = y.cols();
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, opt.init_scale);
  TrainResult res;
  res.model.weights = Eigen::MatrixXd::NullaryExpr(k, kFeatureDim, [&] { return gauss(rng); });
  res.model.bias = Eigen::VectorXd::Zero(k);

  RowMatrix grad;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    const RowMatrix z = res.model.logits(ds.features);
    const double loss = detail::loss_and_grad(z, y, grad);
    if (epoch == 0) {
      // the batched rows must agree with the public per-sample gradient
      const std::vector<double> row(z.row(0).data(), z.row(0).data() + k);
      const std::vector<double> target(y.row(0).data(), y.row(0).data() + k);
      const auto check = angles::cyclic_cross_entropy_grad(row, angles::SoftLabels(target));
      for (Eigen::Index j = 0; j < k; ++j) {
        if (std::fabs(check[static_cast<std::size_t>(j)] / static_cast<double>(z.rows()) - grad(0, j)) > 1e-12) {
          throw Error(Errc::DimensionMismatch, "batched gradient disagrees with the angles module");
        }
      }
    }
    if (!std::isfinite(loss) || (!res.history.empty() && loss > 10.0 * res.history.front())) {
      throw Error(Errc::DivergenceDetected, "loss " + std::to_string(loss) + " at epoch " + std::to_string(epoch));
    }
    res.history.push_back(loss);
    res.model.weights -= opt.lr * grad.transpose() * ds.features;
    res.model.bias -= opt.lr * grad.colwise().sum().transpose();
  }
  return res;
}

/// Predicted probability rows for every sample.
inline RowMatrix predict(const ToyModel& m, const RowMatrix& features) {
  RowMatrix z = m.logits(features);
  RowMatrix p(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    angles::softmax(std::span<const double>(z.row(i).data(), static_cast<std::size_t>(z.cols())),
                    std::span<double>(p.row(i).data(), static_cast<std::size_t>(z.cols())));
  }
  return p;
}

struct Evaluation {
  eval::ErrorSummary summary;
  eval::ConfusionMatrix confusion;
  std::vector<double> predicted;  // decoded angles
  std::vector<double> truth;
  double accuracy = 0.0;
};

inline Evaluation evaluate(const ToyModel& m, const Dataset& ds, const angles::BinSet& bins,
                           angles::DecodeMode mode = angles::DecodeMode::ArgmaxCenter) {
  const RowMatrix p = predict(m, ds.features);
  std::vector<int> pred_bins, true_bins;
  Evaluation ev{{}, eval::ConfusionMatrix(bins.k()), {}, ds.angles, 0.0};
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const std::span<const double> row(p.row(i).data(), static_cast<std::size_t>(p.cols()));
    const double angle = angles::decode_angle(row, bins, mode);
    ev.predicted.push_back(angle);
    pred_bins.push_back(angles::bin_of(angle, bins));
    true_bins.push_back(angles::bin_of(ds.angles[static_cast<std::size_t>(i)], bins));
  }
  ev.summary = eval::summarize(ev.predicted, ds.angles);
  ev.confusion = eval::confusion(pred_bins, true_bins, bins.k());
  ev.accuracy = ev.confusion.band_fraction(0);
  return ev;
}

// --- experiment ---------------------------------------------------------------------

struct ExperimentConfig {
  int k = 12;
  double sigma = 0.1;
  std::size_t n_train = 2400;
  std::size_t n_val = 1200;
  std::size_t n_test = 1200;
  int epochs = 500;
  double lr = 0.1;
  std::uint64_t seed = 1;  // first seed; the others follow consecutively
  int n_seeds = 5;
  std::string decode = "argmax-center";
};

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  config::Reader r(j, "toytrain config");
  ExperimentConfig c;
  c.k = r.get("k", c.k);
  c.sigma = r.get("sigma", c.sigma);
  c.n_train = r.get("n_train", c.n_train);
  c.n_val = r.get("n_val", c.n_val);
  c.n_test = r.get("n_test", c.n_test);
  c.epochs = r.get("epochs", c.epochs);
  c.lr = r.get("lr", c.lr);
  c.seed = r.get("seed", c.seed);
  c.n_seeds = r.get("n_seeds", c.n_seeds);
  c.decode = r.get("decode", c.decode);
  r.finish();
  if (c.k < 2 || c.sigma < 0.0 || c.n_train == 0 || c.n_test == 0 || c.epochs < 0 || !(c.lr > 0.0) || c.n_seeds < 1 ||
      (c.decode != "argmax-center" && c.decode != "circular-mean")) {
    throw Error(Errc::InvalidConfig, "toytrain config out of range");
  }
  return c;
}

struct RunResult {
  Loss loss;
  std::uint64_t seed;
  double final_loss;
  Evaluation validation;
  Evaluation test;
};

struct ExperimentResult {
  std::vector<RunResult> runs;  // loss-major, seeds in order
  double seconds = 0.0;

  double mean_test_meae(Loss l) const {
    double s = 0.0;
    int n = 0;
    for (const auto& r : runs)
      if (r.loss == l) {
        s += r.test.summary.meae;
        ++n;
      }
    return n == 0 ? 0.0 : s / n;
  }

  /// Test confusion summed over seeds.
  eval::ConfusionMatrix pooled_confusion(Loss l, int k) const {
    eval::ConfusionMatrix cm(k);
    for (const auto& r : runs)
      if (r.loss == l)
        for (int t = 1; t <= k; ++t)
          for (int p = 1; p <= k; ++p)
            for (std::uint64_t c = 0; c < r.test.confusion.at(t, p); ++c) cm.add(t, p);
    return cm;
  }
};

/// Trains both losses on the same data for each seed.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const angles::BinSet bins(cfg.k);
  const auto mode = cfg.decode == "circular-mean" ? angles::DecodeMode::CircularMean : angles::DecodeMode::ArgmaxCenter;
  ExperimentResult out;
  std::vector<RunResult> cyclic, one_hot;
  for (int s = 0; s < cfg.n_seeds; ++s) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(s);
    std::mt19937_64 rng(seed);
    const Dataset train_set = make_dataset(cfg.n_train, cfg.sigma, rng);
    const Dataset val_set = make_dataset(std::max<std::size_t>(cfg.n_val, 1), cfg.sigma, rng);
    const Dataset test_set = make_dataset(cfg.n_test, cfg.sigma, rng);
    for (Loss loss : {Loss::Cyclic, Loss::OneHot}) {
      TrainOptions opt{loss, cfg.epochs, cfg.lr, seed};
      const TrainResult tr = train(train_set, targets(train_set, bins, loss), opt);
      RunResult r{loss, seed, tr.history.empty() ? 0.0 : tr.history.back(), evaluate(tr.model, val_set, bins, mode),
                  evaluate(tr.model, test_set, bins, mode)};
      (loss == Loss::Cyclic ? cyclic : one_hot).push_back(std::move(r));
    }
  }
  for (auto& r : cyclic) out.runs.push_back(std::move(r));
  for (auto& r : one_hot) out.runs.push_back(std::move(r));
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace orientpipe::toytrain
