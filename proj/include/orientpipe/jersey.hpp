#pragma once

// Jersey colour features (quantised HSV + LAB histograms) and the k-means
// model that separates the tracked team from opponents and outliers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "orientpipe/error.hpp"
#include "orientpipe/kmeans.hpp"

namespace orientpipe::jersey {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;  // row-major

  RgbImage() = default;
  RgbImage(int w, int h, Rgb fill = {}) : width(w), height(h), pixels(static_cast<std::size_t>(w * h), fill) {}

  bool empty() const noexcept { return pixels.empty(); }
  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y * width + x)]; }
  const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y * width + x)]; }
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

inline GrayImage to_grayscale(const RgbImage& img) {
  GrayImage out{img.width, img.height, {}};
  out.pixels.reserve(img.pixels.size());
  for (const Rgb& p : img.pixels) {
    const double y = kLumaR * p.r + kLumaG * p.g + kLumaB * p.b;
    out.pixels.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L)));
  }
  return out;
}

// --- binary PPM (P6) / PGM (P5) --------------------------------------------

namespace detail {
inline std::string next_token(std::istream& in) {
  std::string tok;
  while (in >> tok) {
    if (tok.front() == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    return tok;
  }
  throw Error(Errc::Parse, "truncated PNM header");
}
}  // namespace detail

inline RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  if (detail::next_token(in) != "P6") throw Error(Errc::Parse, path.string() + " is not a binary PPM");
  const int w = std::stoi(detail::next_token(in));
  const int h = std::stoi(detail::next_token(in));
  const int maxval = std::stoi(detail::next_token(in));
  if (w <= 0 || h <= 0 || maxval != 255) throw Error(Errc::Parse, "unsupported PPM geometry in " + path.string());
  in.get();  // single whitespace before raster
  RgbImage img(w, h);
  std::vector<char> raw(static_cast<std::size_t>(w * h * 3));
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw Error(Errc::Parse, "short PPM raster");
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = {static_cast<std::uint8_t>(raw[3 * i]), static_cast<std::uint8_t>(raw[3 * i + 1]),
                     static_cast<std::uint8_t>(raw[3 * i + 2])};
  }
  return img;
}

inline void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  for (const Rgb& p : img.pixels) {
    out.put(static_cast<char>(p.r));
    out.put(static_cast<char>(p.g));
    out.put(static_cast<char>(p.b));
  }
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

// --- colour spaces -----------------------------------------------------------

struct Hsv {
  double h;  // [0, 360)
  double s;  // [0, 1]
  double v;  // [0, 1]
};

inline Hsv to_hsv(Rgb p) {
  const double r = p.r / 255.0, g = p.g / 255.0, b = p.b / 255.0;
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double chroma = mx - mn;
  double h = 0.0;
  if (chroma > 0.0) {
    if (mx == r) h = 60.0 * std::fmod((g - b) / chroma, 6.0);
    else if (mx == g) h = 60.0 * ((b - r) / chroma + 2.0);
    else h = 60.0 * ((r - g) / chroma + 4.0);
  }
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  return {h, mx > 0.0 ? chroma / mx : 0.0, mx};
}

struct Lab {
  double l;  // [0, 100]
  double a;
  double b;
};

/// sRGB (D65) to CIE L*a*b*.
inline Lab to_lab(Rgb p) {
  auto linear = [](std::uint8_t c) {
    const double v = c / 255.0;
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
  };
  const double r = linear(p.r), g = linear(p.g), b = linear(p.b);
  const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
  const double y = (0.2126729 * r + 0.7151522 * g + 0.0721750 * b) / 1.00000;
  const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
  auto f = [](double t) {
    constexpr double eps = 216.0 / 24389.0, kappa = 24389.0 / 27.0;
    return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
  };
  const double fx = f(x), fy = f(y), fz = f(z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

// --- features ----------------------------------------------------------------

inline constexpr std::size_t kBinsPerChannel = 8;
inline constexpr std::size_t kChannels = 6;
inline constexpr std::size_t kFeatureSize = kBinsPerChannel * kChannels;  // 48
inline constexpr std::size_t kHalf = kFeatureSize / 2;

// HSV histogram (h, s, v) followed by LAB histogram (l, a, b); each half
// sums to one.
using JerseyFeature = kmeans::Point<kFeatureSize>;

inline std::size_t quantize(double value, double lo, double hi) {
  const double t = (value - lo) / (hi - lo);
  const auto bin = static_cast<long>(std::floor(t * static_cast<double>(kBinsPerChannel)));
  return static_cast<std::size_t>(std::clamp(bin, 0L, static_cast<long>(kBinsPerChannel) - 1));
}

inline JerseyFeature jersey_feature(const RgbImage& crop) {
  if (crop.empty()) throw Error(Errc::EmptyCrop, "crop has no pixels");
  JerseyFeature f{};
  for (const Rgb& p : crop.pixels) {
    const Hsv hsv = to_hsv(p);
    const Lab lab = to_lab(p);
    f[0 * kBinsPerChannel + quantize(hsv.h, 0.0, 360.0)] += 1.0;
    f[1 * kBinsPerChannel + quantize(hsv.s, 0.0, 1.0)] += 1.0;
    f[2 * kBinsPerChannel + quantize(hsv.v, 0.0, 1.0)] += 1.0;
    f[3 * kBinsPerChannel + quantize(lab.l, 0.0, 100.0)] += 1.0;
    f[4 * kBinsPerChannel + quantize(lab.a, -128.0, 128.0)] += 1.0;
    f[5 * kBinsPerChannel + quantize(lab.b, -128.0, 128.0)] += 1.0;
  }
  const double per_half = 3.0 * static_cast<double>(crop.pixels.size());
  for (double& v : f) v /= per_half;
  return f;
}

// --- clustering --------------------------------------------------------------

enum class Role { Home, Away, Outlier };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::Home: return "home";
    case Role::Away: return "away";
    case Role::Outlier: return "outlier";
  }
  return "?";
}

struct ClusterModel {
  kmeans::Result<kFeatureSize> clusters;
  std::vector<Role> roles;  // one per centroid

  Role role_of(const JerseyFeature& f) const { return roles[kmeans::nearest(clusters.centroids, f)]; }
};

/// Clusters are labelled by descending member count: largest home, smallest
/// outlier, the rest away. With `home_reference`, the cluster nearest to it
/// is home instead and the remaining ones keep the size rule.
inline ClusterModel fit_jersey_clusters(const std::vector<JerseyFeature>& features, std::uint64_t seed,
                                        std::size_t k = 3,
                                        const std::optional<JerseyFeature>& home_reference = std::nullopt) {
  kmeans::Options opt;
  opt.k = k;
  opt.seed = seed;
  ClusterModel model;
  model.clusters = kmeans::fit(features, opt);

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return model.clusters.counts[a] > model.clusters.counts[b]; });
  if (home_reference) {
    const std::size_t home = kmeans::nearest(model.clusters.centroids, *home_reference);
    std::erase(order, home);
    order.insert(order.begin(), home);
  }
  model.roles.assign(k, Role::Away);
  model.roles[order.front()] = Role::Home;
  if (k >= 3) model.roles[order.back()] = Role::Outlier;
  return model;
}

}  // namespace orientpipe::jersey
