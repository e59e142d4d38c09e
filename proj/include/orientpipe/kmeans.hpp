#pragma once

// Lloyd's k-means with k-means++ seeding over fixed-dimension points.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "orientpipe/error.hpp"

namespace orientpipe::kmeans {

template <std::size_t D>
using Point = std::array<double, D>;

template <std::size_t D>
double squared_distance(const Point<D>& a, const Point<D>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < D; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

struct Options {
  std::size_t k = 3;
  std::uint64_t seed = 0;
  int max_iterations = 300;
  double tolerance = 1e-6;  // max centroid shift (Euclidean) to stop
};

template <std::size_t D>
struct Result {
  std::vector<Point<D>> centroids;
  std::vector<std::size_t> counts;
  int iterations = 0;
  bool converged = false;
};

/// Index of the closest centroid; ties go to the lowest index.
template <std::size_t D>
std::size_t nearest(const std::vector<Point<D>>& centroids, const Point<D>& p) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(centroids[c], p);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

/// Runs on a lexicographically sorted copy of the input so the result does
/// not depend on input order.
template <std::size_t D>
Result<D> fit(std::vector<Point<D>> points, const Options& opt) {
  if (opt.k == 0 || points.size() < opt.k) {
    throw Error(Errc::TooFewSamples, "k-means needs at least k samples");
  }
  std::sort(points.begin(), points.end());
  std::mt19937_64 rng(opt.seed);

  // k-means++ seeding. When every remaining point coincides with a chosen
  // centroid the seed is duplicated and the extra clusters stay empty.
  Result<D> out;
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  out.centroids.push_back(points[pick(rng)]);
  std::vector<double> d2(points.size());
  while (out.centroids.size() < opt.k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      d2[i] = squared_distance(points[i], out.centroids[nearest(out.centroids, points[i])]);
      total += d2[i];
    }
    if (total <= 0.0) {
      out.centroids.push_back(out.centroids.back());
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    std::size_t chosen = points.size() - 1;
    for (std::size_t i = 0; i < points.size(); ++i) {
      target -= d2[i];
      if (target <= 0.0 && d2[i] > 0.0) {
        chosen = i;
        break;
      }
    }
    out.centroids.push_back(points[chosen]);
  }

  std::vector<std::size_t> label(points.size(), 0);
  out.counts.assign(opt.k, 0);
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    std::fill(out.counts.begin(), out.counts.end(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      label[i] = nearest(out.centroids, points[i]);
      ++out.counts[label[i]];
    }
    std::vector<Point<D>> next(opt.k, Point<D>{});
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t d = 0; d < D; ++d) next[label[i]][d] += points[i][d];
    double shift = 0.0;
    for (std::size_t c = 0; c < opt.k; ++c) {
      if (out.counts[c] == 0) {
        next[c] = out.centroids[c];  // empty cluster keeps its centroid
        continue;
      }
      for (double& v : next[c]) v /= static_cast<double>(out.counts[c]);
      shift = std::max(shift, std::sqrt(squared_distance(next[c], out.centroids[c])));
    }
    out.centroids = std::move(next);
    out.iterations = iter + 1;
    if (shift < opt.tolerance) {
      out.converged = true;
      break;
    }
  }
  // final counts against the final centroids
  std::fill(out.counts.begin(), out.counts.end(), 0);
  for (const auto& p : points) ++out.counts[nearest(out.centroids, p)];
  return out;
}

}  // namespace orientpipe::kmeans
