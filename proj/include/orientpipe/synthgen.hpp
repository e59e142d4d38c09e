#pragma once

// Synthetic match scenarios with known ground truth: smooth player paths,
// sensor tracks at 100/10 Hz, a panning/zooming broadcast camera, noisy
// detections with flat-colour jersey crops, and corner annotations.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "orientpipe/angles.hpp"
#include "orientpipe/config.hpp"
#include "orientpipe/error.hpp"
#include "orientpipe/fusion.hpp"
#include "orientpipe/geometry.hpp"
#include "orientpipe/io.hpp"
#include "orientpipe/jersey.hpp"

namespace orientpipe::synthgen {

namespace fs = std::filesystem;
using Json = nlohmann::json;

struct SynthConfig {
  int n_players = 10;  // players wearing sensors (home team)
  int n_away = 10;
  int n_referees = 1;
  double duration_s = 60.0;
  double fps = 25.0;
  std::uint64_t seed = 7;
  double field_length_m = 105.0;
  double field_width_m = 68.0;
  double min_spacing_m = 4.0;
  double heading_noise_deg = 20.0;
  double jitter_m = 0.0;   // detection foot-point noise on the pitch (sigma, per axis)
  double jitter_px = 0.0;  // detection foot-point noise in the image (sigma, per axis)
  double miss_rate = 0.0;
  double clock_offset_s = 0.0;  // sensor clock = video clock + offset
  double pan_amp_m = 0.0;
  double pan_period_s = 20.0;
  double zoom_amp = 0.0;
  double zoom_period_s = 15.0;
  int annotation_interval = 1;
  double annotation_noise_px = 0.0;
  double image_width = 1920.0;
  double image_height = 1080.0;
  double focal_px = 1000.0;
  double geo_origin_lat = 41.380;
  double geo_origin_lon = 2.120;
  double gate_m = 2.0;
  int k_bins = 12;
  int crop_variants = 4;

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw Error(Errc::InvalidConfig, what);
    };
    require(n_players >= 1, "n_players must be >= 1");
    require(n_away >= 0 && n_referees >= 0, "team sizes must be >= 0");
    require(duration_s > 0.0, "duration_s must be > 0");
    require(fps > 0.0, "fps must be > 0");
    require(field_length_m > 20.0 && field_width_m > 20.0, "field too small");
    require(miss_rate >= 0.0 && miss_rate < 1.0, "miss_rate must be in [0, 1)");
    require(jitter_m >= 0.0 && jitter_px >= 0.0 && annotation_noise_px >= 0.0, "noise must be >= 0");
    require(min_spacing_m >= 0.0, "min_spacing_m must be >= 0");
    require(annotation_interval >= 1, "annotation_interval must be >= 1");
    require(pan_period_s > 0.0 && zoom_period_s > 0.0, "periods must be > 0");
    require(zoom_amp >= 0.0 && zoom_amp < 0.9, "zoom_amp must be in [0, 0.9)");
    require(gate_m > 0.0, "gate_m must be > 0");
    require(k_bins >= 2, "k_bins must be >= 2");
    require(crop_variants >= 1, "crop_variants must be >= 1");
    require(focal_px > 0.0 && image_width > 0.0 && image_height > 0.0, "camera intrinsics must be > 0");
  }
};

inline SynthConfig synth_config_from_json(const Json& j) {
  config::Reader r(j, "synth config");
  SynthConfig c;
  c.n_players = r.get("n_players", c.n_players);
  c.n_away = r.get("n_away", c.n_away);
  c.n_referees = r.get("n_referees", c.n_referees);
  c.duration_s = r.get("duration_s", c.duration_s);
  c.fps = r.get("fps", c.fps);
  c.seed = r.get("seed", c.seed);
  c.field_length_m = r.get("field_length_m", c.field_length_m);
  c.field_width_m = r.get("field_width_m", c.field_width_m);
  c.min_spacing_m = r.get("min_spacing_m", c.min_spacing_m);
  c.heading_noise_deg = r.get("heading_noise_deg", c.heading_noise_deg);
  c.jitter_m = r.get("jitter_m", c.jitter_m);
  c.jitter_px = r.get("jitter_px", c.jitter_px);
  c.miss_rate = r.get("miss_rate", c.miss_rate);
  c.clock_offset_s = r.get("clock_offset_s", c.clock_offset_s);
  c.pan_amp_m = r.get("pan_amp_m", c.pan_amp_m);
  c.pan_period_s = r.get("pan_period_s", c.pan_period_s);
  c.zoom_amp = r.get("zoom_amp", c.zoom_amp);
  c.zoom_period_s = r.get("zoom_period_s", c.zoom_period_s);
  c.annotation_interval = r.get("annotation_interval", c.annotation_interval);
  c.annotation_noise_px = r.get("annotation_noise_px", c.annotation_noise_px);
  c.image_width = r.get("image_width", c.image_width);
  c.image_height = r.get("image_height", c.image_height);
  c.focal_px = r.get("focal_px", c.focal_px);
  c.geo_origin_lat = r.get("geo_origin_lat", c.geo_origin_lat);
  c.geo_origin_lon = r.get("geo_origin_lon", c.geo_origin_lon);
  c.gate_m = r.get("gate_m", c.gate_m);
  c.k_bins = r.get("k_bins", c.k_bins);
  c.crop_variants = r.get("crop_variants", c.crop_variants);
  r.finish();
  return c;
}

inline Json to_json(const SynthConfig& c) {
  return Json{{"n_players", c.n_players},
              {"n_away", c.n_away},
              {"n_referees", c.n_referees},
              {"duration_s", c.duration_s},
              {"fps", c.fps},
              {"seed", c.seed},
              {"field_length_m", c.field_length_m},
              {"field_width_m", c.field_width_m},
              {"min_spacing_m", c.min_spacing_m},
              {"heading_noise_deg", c.heading_noise_deg},
              {"jitter_m", c.jitter_m},
              {"jitter_px", c.jitter_px},
              {"miss_rate", c.miss_rate},
              {"clock_offset_s", c.clock_offset_s},
              {"pan_amp_m", c.pan_amp_m},
              {"pan_period_s", c.pan_period_s},
              {"zoom_amp", c.zoom_amp},
              {"zoom_period_s", c.zoom_period_s},
              {"annotation_interval", c.annotation_interval},
              {"annotation_noise_px", c.annotation_noise_px},
              {"image_width", c.image_width},
              {"image_height", c.image_height},
              {"focal_px", c.focal_px},
              {"geo_origin_lat", c.geo_origin_lat},
              {"geo_origin_lon", c.geo_origin_lon},
              {"gate_m", c.gate_m},
              {"k_bins", c.k_bins},
              {"crop_variants", c.crop_variants}};
}

enum class Team { Home, Away, Referee };

// Smooth bounded path: anchor plus two sinusoids per axis.
struct Trajectory {
  Eigen::Vector2d anchor;
  double amplitude = 0.0;
  std::array<double, 2> wx{}, wy{}, px{}, py{};  // angular frequencies, phases
  static constexpr std::array<double, 2> kMix{0.6, 0.4};

  Eigen::Vector2d position(double t) const {
    Eigen::Vector2d p = anchor;
    for (int i = 0; i < 2; ++i) {
      p.x() += amplitude * kMix[i] * std::sin(wx[i] * t + px[i]);
      p.y() += amplitude * kMix[i] * std::sin(wy[i] * t + py[i]);
    }
    return p;
  }

  Eigen::Vector2d velocity(double t) const {
    Eigen::Vector2d v = Eigen::Vector2d::Zero();
    for (int i = 0; i < 2; ++i) {
      v.x() += amplitude * kMix[i] * wx[i] * std::cos(wx[i] * t + px[i]);
      v.y() += amplitude * kMix[i] * wy[i] * std::cos(wy[i] * t + py[i]);
    }
    return v;
  }
};

struct Person {
  std::string id;
  Team team;
  Trajectory path;
};

// Orientation knots on the 10 Hz sensor grid, already rounded to what the
// sensor file stores.
struct HeadingTrack {
  std::vector<double> sensor_t;
  std::vector<double> heading;  // field convention, degrees
};

struct TruthRow {
  std::int64_t frame_id = 0;
  std::string player_id;
  double true_alpha = 0.0;    // compensated orientation
  double true_heading = 0.0;  // orientation before compensation
  geometry::FieldPoint true_field_pos;
  std::optional<fusion::Box> box;  // detection box when the player was detected
};

struct Scenario {
  SynthConfig config;
  std::vector<Person> people;
  std::vector<HeadingTrack> headings;  // parallel to the home players (first n_players people)
  std::vector<fusion::Detection> detections;
  std::vector<fusion::SensorSample> sensor;
  io::Annotations annotations;
  std::vector<TruthRow> truth;
  std::map<std::string, jersey::RgbImage> crops;
  std::string home_reference_crop;
  std::size_t visible_player_frames = 0;  // home players fully inside the image
};

// --- camera ----------------------------------------------------------------------

/// Ground plane (field, meters) to image (pixels) for a pinhole camera standing
/// behind the bottom sideline, panning along x and zooming over time.
inline Eigen::Matrix3d field_to_image(const SynthConfig& c, double t) {
  const double two_pi = 2.0 * std::numbers::pi;
  // World frame: field x, field y, z pointing into the ground.
  const Eigen::Vector3d center(c.field_length_m / 2.0, c.field_width_m + 30.0, -20.0);
  const Eigen::Vector3d target(c.field_length_m / 2.0 + c.pan_amp_m * std::sin(two_pi * t / c.pan_period_s),
                               c.field_width_m / 2.0, 0.0);
  const Eigen::Vector3d up(0.0, 0.0, -1.0);
  const Eigen::Vector3d forward = (target - center).normalized();
  const Eigen::Vector3d right = forward.cross(up).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d rot;
  rot.row(0) = right.transpose();
  rot.row(1) = down.transpose();
  rot.row(2) = forward.transpose();
  const double f = c.focal_px * (1.0 + c.zoom_amp * std::sin(two_pi * t / c.zoom_period_s));
  Eigen::Matrix3d k;
  k << f, 0, c.image_width / 2.0, 0, f, c.image_height / 2.0, 0, 0, 1;
  Eigen::Matrix3d plane;
  plane.col(0) = rot.col(0);
  plane.col(1) = rot.col(1);
  plane.col(2) = -rot * center;
  Eigen::Matrix3d h = k * plane;
  return h / h(2, 2);
}

/// Image position and camera depth of a field point.
inline std::pair<Eigen::Vector2d, double> project(const Eigen::Matrix3d& h, const Eigen::Vector2d& p) {
  const Eigen::Vector3d q = h * p.homogeneous();
  return {q.head<2>() / q.z(), q.z()};
}

// --- field landmarks / geo ---------------------------------------------------------

struct Landmark {
  std::string label;
  Eigen::Vector2d pos;
};

inline std::vector<Landmark> landmarks(const SynthConfig& c) {
  const double l = c.field_length_m, w = c.field_width_m, mid = w / 2.0;
  return {{"corner_NW", {0, 0}},
          {"corner_NE", {l, 0}},
          {"corner_SE", {l, w}},
          {"corner_SW", {0, w}},
          {"halfway_N", {l / 2, 0}},
          {"halfway_S", {l / 2, w}},
          {"center_spot", {l / 2, mid}},
          {"box_W_N", {16.5, mid - 20.16}},
          {"box_W_S", {16.5, mid + 20.16}},
          {"box_W_goal_N", {0, mid - 20.16}},
          {"box_W_goal_S", {0, mid + 20.16}},
          {"box_E_N", {l - 16.5, mid - 20.16}},
          {"box_E_S", {l - 16.5, mid + 20.16}},
          {"box_E_goal_N", {l, mid - 20.16}},
          {"box_E_goal_S", {l, mid + 20.16}},
          {"six_W_N", {5.5, mid - 9.16}},
          {"six_W_S", {5.5, mid + 9.16}},
          {"six_E_N", {l - 5.5, mid - 9.16}},
          {"six_E_S", {l - 5.5, mid + 9.16}},
          {"penalty_W", {11.0, mid}},
          {"penalty_E", {l - 11.0, mid}}};
}

inline constexpr double kMetersPerDegreeLat = 111320.0;

inline geometry::GeoPoint field_to_geo(const SynthConfig& c, const Eigen::Vector2d& p) {
  const double m_lon = kMetersPerDegreeLat * std::cos(c.geo_origin_lat * angles::kDegToRad);
  return {c.geo_origin_lat - p.y() / kMetersPerDegreeLat, c.geo_origin_lon + p.x() / m_lon};
}

/// Euler angles whose device +X axis has the given horizontal heading.
inline angles::EulerOrientation heading_to_euler(double heading, double pitch, double roll) {
  return angles::EulerOrientation(roll, pitch, angles::normalize_signed(heading));
}

namespace detail {

inline double reparse(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return std::strtod(buf, nullptr);
}

// Independent shortest-arc interpolation used for ground truth.
inline double truth_interpolate(double a, double b, double t) {
  double d = std::remainder(b - a, 360.0);
  if (d == -180.0) d = 180.0;
  double r = std::fmod(a + t * d, 360.0);
  if (r < 0.0) r += 360.0;
  return r >= 360.0 ? r - 360.0 : r;
}

inline jersey::RgbImage make_crop(jersey::Rgb shirt, jersey::Rgb shorts, std::mt19937_64& rng) {
  constexpr int w = 24, h = 48;
  jersey::RgbImage img(w, h);
  std::uniform_int_distribution<int> noise(-10, 10);
  auto jitter = [&](std::uint8_t c) { return static_cast<std::uint8_t>(std::clamp(c + noise(rng), 0, 255)); };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const jersey::Rgb base = y < h * 6 / 10 ? shirt : shorts;
      img.at(x, y) = {jitter(base.r), jitter(base.g), jitter(base.b)};
    }
  return img;
}

inline std::string player_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "P%02d", i + 1);
  return buf;
}

}  // namespace detail

/// Builds the whole scenario in memory. Deterministic for a given config.
inline Scenario generate(const SynthConfig& cfg) {
  cfg.validate();
  Scenario sc;
  sc.config = cfg;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;

  // Home players on a grid whose spacing and motion amplitude keep every
  // pair at least min_spacing_m apart at all times.
  const int n = cfg.n_players;
  const int cols = static_cast<int>(std::ceil(std::sqrt(n * cfg.field_length_m / cfg.field_width_m)));
  const int rows = (n + cols - 1) / cols;
  const double sx = cfg.field_length_m / cols, sy = cfg.field_width_m / rows;
  const double amplitude = std::min(8.0, (std::min(sx, sy) - cfg.min_spacing_m) / (2.0 * std::sqrt(2.0)));
  if (amplitude <= 0.0) throw Error(Errc::InvalidConfig, "min_spacing_m cannot be honoured on this pitch");

  auto random_path = [&](Eigen::Vector2d anchor, double amp) {
    Trajectory tr;
    tr.anchor = anchor;
    tr.amplitude = amp;
    for (int i = 0; i < 2; ++i) {
      tr.wx[i] = two_pi / (10.0 + 30.0 * unit(rng));
      tr.wy[i] = two_pi / (10.0 + 30.0 * unit(rng));
      tr.px[i] = two_pi * unit(rng);
      tr.py[i] = two_pi * unit(rng);
    }
    return tr;
  };
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d anchor((i % cols + 0.5) * sx, (i / cols + 0.5) * sy);
    sc.people.push_back({detail::player_id(i), Team::Home, random_path(anchor, amplitude)});
  }
  for (int i = 0; i < cfg.n_away; ++i) {
    // Offset half a grid cell from the home anchors, kept on the pitch.
    const Eigen::Vector2d anchor(std::clamp((i % cols + 1.0) * sx, amplitude, cfg.field_length_m - amplitude),
                                 std::clamp((i / cols % rows + 1.0) * sy, amplitude, cfg.field_width_m - amplitude));
    char id[16];
    std::snprintf(id, sizeof id, "A%02d", i + 1);
    sc.people.push_back({id, Team::Away, random_path(anchor, amplitude)});
  }
  for (int i = 0; i < cfg.n_referees; ++i) {
    const Eigen::Vector2d anchor(cfg.field_length_m / 2.0, cfg.field_width_m / 2.0);
    char id[16];
    std::snprintf(id, sizeof id, "R%02d", i + 1);
    sc.people.push_back({id, Team::Referee, random_path(anchor, std::min(15.0, cfg.field_width_m / 4.0))});
  }

  // Sensor tracks. Samples sit on a 10 ms grid of the sensor clock and span
  // the video with a small margin; every tenth carries orientation.
  const auto first_tick = static_cast<long long>(std::floor((cfg.clock_offset_s - 0.2) * 100.0));
  const auto last_tick = static_cast<long long>(std::ceil((cfg.clock_offset_s + cfg.duration_s + 0.2) * 100.0));
  std::uniform_real_distribution<double> heading_noise(-cfg.heading_noise_deg, cfg.heading_noise_deg);
  std::uniform_real_distribution<double> pitch_dist(-20.0, 20.0), roll_dist(-30.0, 30.0);
  sc.headings.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Person& p = sc.people[static_cast<std::size_t>(i)];
    HeadingTrack& track = sc.headings[static_cast<std::size_t>(i)];
    for (long long tick = first_tick; tick <= last_tick; ++tick) {
      const double sensor_t = detail::reparse("%.6f", static_cast<double>(tick) / 100.0);
      const double video_t = sensor_t - cfg.clock_offset_s;
      fusion::SensorSample s;
      s.player_id = p.id;
      s.t = sensor_t;
      const auto geo = field_to_geo(cfg, p.path.position(video_t));
      s.pos = {detail::reparse("%.10f", geo.lat), detail::reparse("%.10f", geo.lon)};
      if (tick % 10 == 0) {
        const Eigen::Vector2d v = p.path.velocity(video_t);
        const double heading = geometry::field_vector_angle(v) + heading_noise(rng);
        const auto e = heading_to_euler(heading, pitch_dist(rng), roll_dist(rng));
        s.orient = angles::EulerOrientation(detail::reparse("%.6f", e.roll_x), detail::reparse("%.6f", e.pitch_y),
                                            detail::reparse("%.6f", e.yaw_z));
        track.sensor_t.push_back(sensor_t);
        track.heading.push_back(angles::normalize(s.orient->yaw_z));
      }
      sc.sensor.push_back(std::move(s));
    }
  }

  // Crops: a few noisy variants per team.
  const std::array<std::pair<jersey::Rgb, jersey::Rgb>, 3> kits{{{{200, 30, 40}, {235, 235, 235}},
                                                                  {{30, 60, 190}, {20, 20, 60}},
                                                                  {{230, 220, 40}, {15, 15, 15}}}};
  const std::array<const char*, 3> team_names{"home", "away", "referee"};
  for (std::size_t t = 0; t < kits.size(); ++t)
    for (int v = 0; v < cfg.crop_variants; ++v)
      sc.crops["crops/" + std::string(team_names[t]) + "_" + std::to_string(v) + ".ppm"] =
          detail::make_crop(kits[t].first, kits[t].second, rng);
  sc.home_reference_crop = "crops/home_0.ppm";

  // Corner annotations: the sensor->field correspondences once, image->field
  // every annotation_interval frames.
  for (const auto& lm : landmarks(cfg)) {
    const auto geo = field_to_geo(cfg, lm.pos);
    sc.annotations[{io::DomainPair::SensorField, 0}].push_back(
        {Eigen::Vector2d(detail::reparse("%.10f", geo.lon), detail::reparse("%.10f", geo.lat)), lm.pos, lm.label});
  }

  const auto n_frames = static_cast<std::int64_t>(std::floor(cfg.duration_s * cfg.fps));
  const double box_aspect = 0.45, player_height_m = 1.8;
  std::vector<std::size_t> order(sc.people.size());
  for (std::int64_t f = 0; f < n_frames; ++f) {
    const double t = static_cast<double>(f) / cfg.fps;
    const Eigen::Matrix3d h_fi = field_to_image(cfg, t);
    const Eigen::Matrix3d h_if = h_fi.inverse();

    if (f % cfg.annotation_interval == 0) {
      std::vector<geometry::Correspondence> pts;
      for (const auto& lm : landmarks(cfg)) {
        const auto [px, depth] = project(h_fi, lm.pos);
        const Eigen::Vector2d noisy = px + cfg.annotation_noise_px * Eigen::Vector2d(gauss(rng), gauss(rng));
        if (depth <= 0.1 || px.x() < 0 || px.y() < 0 || px.x() > cfg.image_width || px.y() > cfg.image_height) continue;
        pts.push_back({noisy, lm.pos, lm.label});
      }
      if (pts.size() >= 4) sc.annotations[{io::DomainPair::ImageField, f}] = std::move(pts);
    }

    // Truth heading of every home player at this frame from its knots.
    const double sensor_t = static_cast<double>(f) / cfg.fps + cfg.clock_offset_s;
    std::vector<fusion::Detection> frame_dets;
    for (std::size_t i = 0; i < sc.people.size(); ++i) {
      const Person& p = sc.people[i];
      const Eigen::Vector2d pos = p.path.position(t);
      // Always draw the same random numbers so noise settings do not shift the stream.
      const Eigen::Vector2d jitter_m(gauss(rng), gauss(rng));
      const Eigen::Vector2d jitter_px(gauss(rng), gauss(rng));
      const double miss_draw = unit(rng);
      const std::size_t variant = static_cast<std::size_t>(unit(rng) * cfg.crop_variants);

      const auto [foot, depth] = project(h_fi, pos);
      const double scale = (project(h_fi, pos + Eigen::Vector2d(1.0, 0.0)).first - foot).norm();
      const double bh = player_height_m * scale, bw = box_aspect * bh;
      const Eigen::Vector2d seen =
          project(h_fi, pos + cfg.jitter_m * jitter_m).first + cfg.jitter_px * jitter_px;
      const fusion::Box box{seen.x() - bw / 2.0, seen.y() - bh, bw, bh};
      const bool visible = depth > 0.1 && box.x >= 0.0 && box.y >= 0.0 && box.x + box.w <= cfg.image_width &&
                           box.y + box.h <= cfg.image_height;
      const bool detected = visible && miss_draw >= cfg.miss_rate;

      if (p.team == Team::Home && visible) {
        ++sc.visible_player_frames;
        const HeadingTrack& track = sc.headings[i];
        const double pos_in_track = (sensor_t - track.sensor_t.front()) / 0.1;
        auto lo = static_cast<std::size_t>(std::clamp(std::floor(pos_in_track), 0.0,
                                                      static_cast<double>(track.sensor_t.size() - 2)));
        const double w = (sensor_t - track.sensor_t[lo]) / (track.sensor_t[lo + 1] - track.sensor_t[lo]);
        const double heading = detail::truth_interpolate(track.heading[lo], track.heading[lo + 1], w);
        const Eigen::Vector2d f0 = (h_if * (foot + Eigen::Vector2d(1.0, 0.0)).homogeneous()).hnormalized();
        const Eigen::Vector2d f1 = (h_if * foot.homogeneous()).hnormalized();
        const double zero_angle = std::atan2(-(f0 - f1).y(), (f0 - f1).x()) * angles::kRadToDeg;
        TruthRow row;
        row.frame_id = f;
        row.player_id = p.id;
        row.true_heading = heading;
        row.true_alpha = angles::normalize(heading - zero_angle);
        row.true_field_pos = {pos.x(), pos.y()};
        if (detected) row.box = box;
        sc.truth.push_back(std::move(row));
      }
      if (detected) {
        const char* team = p.team == Team::Home ? "home" : p.team == Team::Away ? "away" : "referee";
        frame_dets.push_back({f, box, "crops/" + std::string(team) + "_" + std::to_string(variant) + ".ppm"});
      }
    }
    std::shuffle(frame_dets.begin(), frame_dets.end(), rng);
    for (auto& d : frame_dets) sc.detections.push_back(std::move(d));
  }
  return sc;
}

// --- on-disk layout -------------------------------------------------------------------

inline Json to_json(const TruthRow& r) {
  Json j{{"frame_id", r.frame_id},
         {"player_id", r.player_id},
         {"true_alpha", r.true_alpha},
         {"true_heading", r.true_heading},
         {"true_field_pos", {r.true_field_pos.x, r.true_field_pos.y}}};
  j["box"] = r.box ? Json{r.box->x, r.box->y, r.box->w, r.box->h} : Json(nullptr);
  return j;
}

inline std::vector<TruthRow> read_truth(const fs::path& path) {
  std::vector<TruthRow> out;
  io::for_each_jsonl(path, [&](const Json& j) {
    TruthRow r;
    r.frame_id = j.at("frame_id").get<std::int64_t>();
    r.player_id = j.at("player_id").get<std::string>();
    r.true_alpha = j.at("true_alpha").get<double>();
    r.true_heading = j.value("true_heading", 0.0);
    const auto pos = j.at("true_field_pos").get<std::vector<double>>();
    r.true_field_pos = {pos.at(0), pos.at(1)};
    if (j.contains("box") && !j["box"].is_null()) {
      const auto b = j["box"].get<std::vector<double>>();
      r.box = fusion::Box{b.at(0), b.at(1), b.at(2), b.at(3)};
    }
    out.push_back(std::move(r));
  });
  return out;
}

/// Fusion configuration matching the scenario, as written next to it.
inline Json build_config_json(const Scenario& sc) {
  const auto& c = sc.config;
  return Json{{"gate_m", c.gate_m},
              {"fps", c.fps},
              {"clock_offset_s", c.clock_offset_s},
              {"field_length_m", c.field_length_m},
              {"field_width_m", c.field_width_m},
              {"k_bins", c.k_bins},
              {"seed", c.seed},
              {"image_width", c.image_width},
              {"image_height", c.image_height},
              {"home_reference_crop", sc.home_reference_crop}};
}

/// Writes detections.jsonl, sensor.csv, annotations.csv, truth.jsonl,
/// crops/*.ppm, build_config.json and scenario.json into `dir`.
inline void write_scenario(const Scenario& sc, const fs::path& dir) {
  fs::create_directories(dir / "crops");
  {
    auto out = io::open_output(dir / "detections.jsonl");
    for (const auto& d : sc.detections) out << io::to_json(d).dump() << '\n';
  }
  {
    auto out = io::open_output(dir / "sensor.csv");
    io::write_sensor_header(out);
    for (const auto& s : sc.sensor) io::write_sensor_row(out, s);
  }
  {
    auto out = io::open_output(dir / "annotations.csv");
    io::write_annotations_header(out);
    for (const auto& [key, pairs] : sc.annotations)
      for (const auto& c : pairs) io::write_annotation_row(out, key.frame_id, c.label.value_or(""), c.src, c.dst, key.pair);
  }
  {
    auto out = io::open_output(dir / "truth.jsonl");
    for (const auto& r : sc.truth) out << to_json(r).dump() << '\n';
  }
  for (const auto& [ref, img] : sc.crops) jersey::write_ppm(dir / ref, img);
  {
    auto out = io::open_output(dir / "build_config.json");
    out << build_config_json(sc).dump(2) << '\n';
  }
  {
    auto out = io::open_output(dir / "scenario.json");
    out << Json{{"config", to_json(sc.config)},
                {"visible_player_frames", sc.visible_player_frames},
                {"detections", sc.detections.size()},
                {"sensor_rows", sc.sensor.size()},
                {"euler_convention", std::string(angles::kEulerConvention)}}
               .dump(2)
        << '\n';
  }
}

// --- in-memory pipeline inputs and scoring ------------------------------------------------

/// Fusion inputs equivalent to reading the written files back.
inline fusion::DatasetInputs dataset_inputs(const Scenario& sc) {
  fusion::DatasetInputs in;
  in.detections = sc.detections;
  in.sensor = sc.sensor;
  const auto est = io::estimate_all(sc.annotations);
  io::add_to_tracks(est.ok, in.image_to_field, in.sensor_to_field);
  std::map<std::string, jersey::JerseyFeature> feats;
  for (const auto& [ref, img] : sc.crops) feats.emplace(ref, jersey::jersey_feature(img));
  for (const auto& d : in.detections) in.features.emplace_back(feats.at(*d.crop_ref));
  in.home_reference = feats.at(sc.home_reference_crop);
  return in;
}

inline fusion::FusionConfig fusion_config(const SynthConfig& c) {
  fusion::FusionConfig f;
  f.gate_m = c.gate_m;
  f.fps = c.fps;
  f.clock_offset_s = c.clock_offset_s;
  f.field_length_m = c.field_length_m;
  f.field_width_m = c.field_width_m;
  f.k_bins = c.k_bins;
  f.seed = c.seed;
  f.image_width = c.image_width;
  f.image_height = c.image_height;
  return f;
}

struct Score {
  std::size_t visible = 0;   // truth rows
  std::size_t detected = 0;  // truth rows with a detection
  std::size_t records = 0;
  std::size_t correct = 0;   // record box equals the player's true detection box
  std::size_t wrong = 0;
  double max_angle_error = 0.0;  // over correct records
  double mean_angle_error = 0.0;

  double identity_accuracy() const { return detected == 0 ? 1.0 : static_cast<double>(correct) / detected; }
};

inline bool same_box(const fusion::Box& a, const fusion::Box& b) {
  constexpr double tol = 1e-6;
  return std::fabs(a.x - b.x) <= tol && std::fabs(a.y - b.y) <= tol && std::fabs(a.w - b.w) <= tol &&
         std::fabs(a.h - b.h) <= tol;
}

inline Score score(const std::vector<fusion::MatchedRecord>& records, const std::vector<TruthRow>& truth) {
  Score s;
  std::map<std::pair<std::int64_t, std::string>, const TruthRow*> by_key;
  for (const auto& r : truth) {
    by_key[{r.frame_id, r.player_id}] = &r;
    ++s.visible;
    if (r.box) ++s.detected;
  }
  double err_sum = 0.0;
  for (const auto& rec : records) {
    ++s.records;
    const auto it = by_key.find({rec.frame_id, rec.player_id});
    if (it == by_key.end() || !it->second->box || !same_box(*it->second->box, rec.box)) {
      ++s.wrong;
      continue;
    }
    ++s.correct;
    const double d = angles::arc_length(rec.alpha_compensated, it->second->true_alpha);
    s.max_angle_error = std::max(s.max_angle_error, d);
    err_sum += d;
  }
  s.mean_angle_error = s.correct == 0 ? 0.0 : err_sum / static_cast<double>(s.correct);
  return s;
}

}  // namespace orientpipe::synthgen
