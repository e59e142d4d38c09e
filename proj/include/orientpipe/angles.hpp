#pragma once

// Orientation bins, the cyclic soft-label distribution and its cross-entropy
// loss, plus the circular helpers used when resampling sensor headings.
//
// All angles are degrees. Field convention: 0 points to the right side of the
// pitch, 90 to the top sideline, measured counterclockwise.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <type_traits>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "orientpipe/error.hpp"

namespace orientpipe::angles {

inline constexpr double kFullTurn = 360.0;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

/// Wraps any finite angle into [0, 360).
inline double normalize(double deg) {
  double r = std::fmod(deg, kFullTurn);
  if (r < 0.0) r += kFullTurn;
  // -tiny + 360 rounds to 360
  if (r >= kFullTurn) r -= kFullTurn;
  return r;
}

/// Rounds to the 6-decimal serialization grid, staying in [0, 360).
inline double round_for_output(double deg) { return normalize(std::round(normalize(deg) * 1e6) / 1e6); }

/// Wraps into [-180, 180).
inline double normalize_signed(double deg) {
  double r = normalize(deg + 180.0) - 180.0;
  return r;
}

/// Shortest unsigned arc between two angles, in [0, 180].
inline double arc_length(double a, double b) {
  const double d = std::fabs(normalize(a) - normalize(b));
  return std::min(d, kFullTurn - d);
}

/// Squared shortest arc divided by 90. Ranges over [0, 360].
inline double cyclic_distance(double alpha, double r) {
  const double d = arc_length(alpha, r);
  return d * d / 90.0;
}

// Equal cyclic partition of the circle. Bin j (1-based) covers
// [width*(j-1), width*j) and is centred at width*(j-1) + width/2.
class BinSet {
 public:
  explicit BinSet(int k = 12) : k_(k) {
    if (k < 2) throw Error(Errc::InvalidArgument, "BinSet needs k >= 2, got " + std::to_string(k));
    width_ = kFullTurn / k;
    centers_.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) centers_[static_cast<std::size_t>(j)] = width_ * j + width_ / 2.0;
  }

  int k() const noexcept { return k_; }
  double width() const noexcept { return width_; }
  std::span<const double> centers() const noexcept { return centers_; }
  /// Center of 1-based bin j.
  double center(int j) const { return centers_.at(static_cast<std::size_t>(j - 1)); }

  bool operator==(const BinSet& other) const noexcept { return k_ == other.k_; }

 private:
  int k_;
  double width_;
  std::vector<double> centers_;
};

struct SoftLabelsTag {};
struct ProbVectorTag {};

// A length-k probability vector. The tag separates ground-truth soft labels
// from model predictions; ProbVector additionally requires strictly positive
// entries so its logarithm is finite.
template <class Tag>
class Distribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  Distribution() = default;

  explicit Distribution(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw Error(Errc::EmptyInput, "empty probability vector");
    double sum = 0.0;
    for (double v : values_) {
      if (!std::isfinite(v) || v < 0.0 || (kStrictlyPositive && v <= 0.0)) {
        throw Error(Errc::InvalidArgument, "probability entry out of range");
      }
      sum += v;
    }
    if (std::fabs(sum - 1.0) > kSumTolerance) {
      throw Error(Errc::InvalidArgument, "probabilities sum to " + std::to_string(sum));
    }
  }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const Distribution&) const = default;

 private:
  static constexpr bool kStrictlyPositive = std::is_same_v<Tag, ProbVectorTag>;
  std::vector<double> values_;
};

using SoftLabels = Distribution<SoftLabelsTag>;
using ProbVector = Distribution<ProbVectorTag>;

/// Numerically stable softmax into `out` (same length as `logits`).
inline void softmax(std::span<const double> logits, std::span<double> out) {
  if (logits.size() != out.size()) throw Error(Errc::DimensionMismatch, "softmax output size");
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    out[j] = std::exp(logits[j] - peak);
    sum += out[j];
  }
  for (double& v : out) v /= sum;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  softmax(logits, out);
  return out;
}

/// Soft labels y_j proportional to exp(-cyclic_distance(alpha, r_j)).
inline SoftLabels soft_labels(double alpha, const BinSet& bins) {
  std::vector<double> neg_phi(static_cast<std::size_t>(bins.k()));
  for (std::size_t j = 0; j < neg_phi.size(); ++j) neg_phi[j] = -cyclic_distance(alpha, bins.centers()[j]);
  return SoftLabels(softmax(neg_phi));
}

/// One-hot distribution on 1-based bin j.
inline SoftLabels one_hot(int j, const BinSet& bins) {
  if (j < 1 || j > bins.k()) throw Error(Errc::IndexOutOfRange, "bin index " + std::to_string(j));
  std::vector<double> y(static_cast<std::size_t>(bins.k()), 0.0);
  y[static_cast<std::size_t>(j - 1)] = 1.0;
  return SoftLabels(std::move(y));
}

/// Shannon entropy in nats; 0 * ln 0 taken as 0.
inline double entropy(const SoftLabels& y) {
  double h = 0.0;
  for (double v : y.values())
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

/// -sum_j y_j ln x_j
inline double cross_entropy(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::DimensionMismatch, "cross_entropy length mismatch");
  double loss = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (y[j] != 0.0) loss -= y[j] * std::log(x[j]);
  return loss;
}

inline double cyclic_cross_entropy(const ProbVector& x, const SoftLabels& y) {
  return cross_entropy(x.values(), y.values());
}

/// Gradient of cross_entropy(softmax(logits), target) with respect to the
/// logits, written into `grad`: softmax(logits) - target.
inline void softmax_cross_entropy_grad(std::span<const double> logits, std::span<const double> target,
                                       std::span<double> grad) {
  if (logits.size() != target.size() || grad.size() != logits.size()) {
    throw Error(Errc::DimensionMismatch, "gradient length mismatch");
  }
  softmax(logits, grad);
  for (std::size_t j = 0; j < grad.size(); ++j) grad[j] -= target[j];
}

inline std::vector<double> cyclic_cross_entropy_grad(std::span<const double> logits, const SoftLabels& y) {
  std::vector<double> grad(logits.size());
  softmax_cross_entropy_grad(logits, y.values(), grad);
  return grad;
}

/// 1-based bin containing alpha. Boundaries belong to the upper bin.
inline int bin_of(double alpha, const BinSet& bins) {
  const double a = normalize(alpha);
  int j = static_cast<int>(std::floor(a / bins.width())) + 1;
  return std::clamp(j, 1, bins.k());
}

enum class DecodeMode { ArgmaxCenter, CircularMean };

inline std::string_view to_string(DecodeMode mode) {
  return mode == DecodeMode::ArgmaxCenter ? "argmax-center" : "circular-mean";
}

/// Angle represented by a bin distribution. Argmax ties go to the lowest index.
inline double decode_angle(std::span<const double> x, const BinSet& bins,
                           DecodeMode mode = DecodeMode::ArgmaxCenter) {
  if (x.size() != static_cast<std::size_t>(bins.k())) throw Error(Errc::DimensionMismatch, "decode length");
  if (mode == DecodeMode::ArgmaxCenter) {
    const auto best = std::max_element(x.begin(), x.end());  // first maximum
    return bins.centers()[static_cast<std::size_t>(best - x.begin())];
  }
  double s = 0.0, c = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    s += x[j] * std::sin(bins.centers()[j] * kDegToRad);
    c += x[j] * std::cos(bins.centers()[j] * kDegToRad);
  }
  if (std::hypot(s, c) < 1e-9) throw Error(Errc::DegenerateMean, "zero resultant length");
  return normalize(std::atan2(s, c) * kRadToDeg);
}

template <class Tag>
double decode_angle(const Distribution<Tag>& x, const BinSet& bins, DecodeMode mode = DecodeMode::ArgmaxCenter) {
  return decode_angle(x.values(), bins, mode);
}

struct ArcSample {
  double degrees;
  // a and b were exactly antipodal; the counterclockwise arc was taken
  bool antipodal;
};

/// Interpolates along the shortest arc from a (t = 0) to b (t = 1).
inline ArcSample circular_interpolate(double a, double b, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(Errc::InvalidArgument, "interpolation parameter outside [0, 1]");
  double delta = normalize(b - a);  // [0, 360)
  if (delta > 180.0) delta -= kFullTurn;
  const bool antipodal = delta == 180.0;
  if (t == 1.0) return {normalize(b), antipodal};
  return {normalize(a + t * delta), antipodal};
}

struct EulerOrientation {
  double roll_x = 0.0;
  double pitch_y = 0.0;
  double yaw_z = 0.0;

  EulerOrientation() = default;
  EulerOrientation(double roll, double pitch, double yaw)
      : roll_x(wrap(roll)), pitch_y(wrap(pitch)), yaw_z(wrap(yaw)) {}

 private:
  static double wrap(double deg) {
    if (!std::isfinite(deg)) throw Error(Errc::InvalidArgument, "non-finite Euler angle");
    return normalize_signed(deg);
  }
};

inline constexpr std::string_view kEulerConvention =
    "intrinsic Z-Y-X (yaw, pitch, roll); torso normal = device +X axis; "
    "heading = azimuth of the horizontal projection, counterclockwise from field +x toward the top sideline";

/// Heading of the torso normal: rotate device +X by Rz(yaw) Ry(pitch) Rx(roll),
/// drop the vertical component, take the azimuth.
inline double euler_to_heading(const EulerOrientation& e) {
  using Eigen::AngleAxisd;
  using Eigen::Vector3d;
  const Eigen::Matrix3d rotation = (AngleAxisd(e.yaw_z * kDegToRad, Vector3d::UnitZ()) *
                                    AngleAxisd(e.pitch_y * kDegToRad, Vector3d::UnitY()) *
                                    AngleAxisd(e.roll_x * kDegToRad, Vector3d::UnitX()))
                                       .toRotationMatrix();
  const Vector3d forward = rotation * Vector3d::UnitX();
  if (std::hypot(forward.x(), forward.y()) < 1e-6) {
    throw Error(Errc::GimbalProjectionDegenerate, "torso normal is vertical");
  }
  return normalize(std::atan2(forward.y(), forward.x()) * kRadToDeg);
}

}  // namespace orientpipe::angles
