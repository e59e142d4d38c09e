#pragma once

// Circular error metrics and confusion matrices over orientation bins.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "orientpipe/angles.hpp"
#include "orientpipe/error.hpp"

namespace orientpipe::eval {

/// Shortest-arc absolute difference in [0, 180].
inline double angular_abs_error(double pred, double truth) {
  const double d = std::fmod(std::fabs(pred - truth), 360.0);
  return std::min(d, 360.0 - d);
}

struct ErrorSummary {
  double meae = 0.0;  // mean absolute error, degrees
  double mdae = 0.0;  // median absolute error, degrees
  std::size_t n = 0;
};

/// Mean and median of a list of absolute errors. Even n takes the mean of
/// the two central values.
inline ErrorSummary summarize_errors(std::vector<double> errors) {
  if (errors.empty()) throw Error(Errc::EmptyInput, "no errors to summarize");
  ErrorSummary s;
  s.n = errors.size();
  std::sort(errors.begin(), errors.end());
  double sum = 0.0;
  for (double e : errors) sum += e;
  s.meae = sum / static_cast<double>(s.n);
  const std::size_t mid = s.n / 2;
  s.mdae = s.n % 2 == 1 ? errors[mid] : 0.5 * (errors[mid - 1] + errors[mid]);
  return s;
}

inline ErrorSummary summarize(std::span<const double> preds, std::span<const double> truths) {
  if (preds.size() != truths.size()) throw Error(Errc::LengthMismatch, "prediction and truth lengths differ");
  if (preds.empty()) throw Error(Errc::EmptyInput, "no predictions");
  std::vector<double> errors(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) errors[i] = angular_abs_error(preds[i], truths[i]);
  return summarize_errors(std::move(errors));
}

// Rows are ground-truth bins, columns predicted bins; both 1-based in the API.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int k) : k_(k), counts_(static_cast<std::size_t>(k * k), 0) {
    if (k < 1) throw Error(Errc::InvalidArgument, "confusion matrix needs k >= 1");
  }

  int k() const noexcept { return k_; }

  void add(int truth, int pred) {
    if (truth < 1 || truth > k_ || pred < 1 || pred > k_) {
      throw Error(Errc::IndexOutOfRange,
                  "bin pair (" + std::to_string(truth) + ", " + std::to_string(pred) + ") outside 1.." +
                      std::to_string(k_));
    }
    ++counts_[index(truth, pred)];
  }

  std::uint64_t at(int truth, int pred) const { return counts_.at(index(truth, pred)); }

  std::uint64_t row_sum(int truth) const {
    std::uint64_t s = 0;
    for (int p = 1; p <= k_; ++p) s += at(truth, p);
    return s;
  }

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }

  /// Fraction of samples predicted within `radius` bins of the truth,
  /// measured cyclically. radius 0 is accuracy, radius 1 the tridiagonal band.
  double band_fraction(int radius) const {
    const std::uint64_t n = total();
    if (n == 0) return 0.0;
    std::uint64_t in_band = 0;
    for (int t = 1; t <= k_; ++t)
      for (int p = 1; p <= k_; ++p) {
        const int d = std::abs(t - p);
        if (std::min(d, k_ - d) <= radius) in_band += at(t, p);
      }
    return static_cast<double>(in_band) / static_cast<double>(n);
  }

 private:
  std::size_t index(int truth, int pred) const { return static_cast<std::size_t>((truth - 1) * k_ + (pred - 1)); }

  int k_;
  std::vector<std::uint64_t> counts_;
};

inline ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths, int k) {
  if (preds.size() != truths.size()) throw Error(Errc::LengthMismatch, "prediction and truth lengths differ");
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < preds.size(); ++i) cm.add(truths[i], preds[i]);
  return cm;
}

// --- exports -----------------------------------------------------------------

// One row of the results table: validation and test summaries per experiment.
struct TableRow {
  std::string experiment;
  std::optional<ErrorSummary> validation;
  std::optional<ErrorSummary> test;
};

inline void write_table_csv(std::ostream& os, std::span<const TableRow> rows) {
  os << "experiment,MEAE_v,MDAE_v,MEAE_t,MDAE_t\n";
  auto cell = [&os](const std::optional<ErrorSummary>& s, bool mean) {
    if (s) os << std::fixed << std::setprecision(6) << (mean ? s->meae : s->mdae);
  };
  for (const auto& r : rows) {
    os << r.experiment << ',';
    cell(r.validation, true);
    os << ',';
    cell(r.validation, false);
    os << ',';
    cell(r.test, true);
    os << ',';
    cell(r.test, false);
    os << '\n';
  }
}

/// CSV grid with a header row of predicted bins and a leading truth column.
inline void write_confusion_csv(std::ostream& os, const ConfusionMatrix& cm) {
  os << "truth\\pred";
  for (int p = 1; p <= cm.k(); ++p) os << ",b" << p;
  os << '\n';
  for (int t = 1; t <= cm.k(); ++t) {
    os << 'b' << t;
    for (int p = 1; p <= cm.k(); ++p) os << ',' << cm.at(t, p);
    os << '\n';
  }
}

/// gnuplot `matrix` layout: whitespace-separated rows, row-normalised.
inline void write_confusion_gnuplot(std::ostream& os, const ConfusionMatrix& cm) {
  os << "# rows: truth bin 1..k, columns: predicted bin 1..k, row-normalised\n";
  for (int t = 1; t <= cm.k(); ++t) {
    const double n = static_cast<double>(cm.row_sum(t));
    for (int p = 1; p <= cm.k(); ++p) {
      if (p > 1) os << ' ';
      os << std::fixed << std::setprecision(6) << (n > 0.0 ? static_cast<double>(cm.at(t, p)) / n : 0.0);
    }
    os << '\n';
  }
}

}  // namespace orientpipe::eval
