#pragma once

// File formats: corner annotations (CSV), homographies (JSON), detections
// (JSONL), sensor tracks (CSV), matched records (JSONL) and the dataset
// manifest (JSON).

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "orientpipe/angles.hpp"
#include "orientpipe/config.hpp"
#include "orientpipe/error.hpp"
#include "orientpipe/fusion.hpp"
#include "orientpipe/geometry.hpp"
#include "orientpipe/jersey.hpp"

namespace orientpipe::io {

using Json = nlohmann::json;
namespace fs = std::filesystem;

// --- small CSV helpers ---------------------------------------------------------

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(std::string_view cell, std::string_view what) {
  cell = trim(cell);
  T value{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    throw Error(Errc::Parse, "bad " + std::string(what) + " value '" + std::string(cell) + "'");
  }
  return value;
}

inline std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return in;
}

inline std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  return out;
}

/// Reads a CSV with a required header; returns rows as cell vectors keyed by
/// the header order given in `columns`.
inline std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::span<const std::string_view> columns) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::Parse, path.string() + ": missing header");
  const auto header = split_csv(trim(line));
  std::vector<std::size_t> index;
  for (auto col : columns) {
    std::size_t found = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == col) found = i;
    if (found == header.size()) throw Error(Errc::Parse, path.string() + ": missing column " + std::string(col));
    index.push_back(found);
  }
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw Error(Errc::Parse, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                   std::to_string(header.size()) + " cells");
    }
    std::vector<std::string> row;
    for (std::size_t i : index) row.emplace_back(trim(cells[i]));
    rows.push_back(std::move(row));
  }
  return rows;
}

// --- corner annotations ----------------------------------------------------------

enum class DomainPair { ImageField, SensorField };

inline std::string_view to_string(DomainPair p) { return p == DomainPair::ImageField ? "IF" : "SF"; }

inline std::pair<geometry::Domain, geometry::Domain> domains(DomainPair p) {
  return p == DomainPair::ImageField ? std::pair{geometry::Domain::Image, geometry::Domain::Field}
                                     : std::pair{geometry::Domain::Sensor, geometry::Domain::Field};
}

struct AnnotationKey {
  DomainPair pair;
  std::int64_t frame_id;
  auto operator<=>(const AnnotationKey&) const = default;
};

// SF rows carry the geographic point as src_x = lon, src_y = lat.
using Annotations = std::map<AnnotationKey, std::vector<geometry::Correspondence>>;

inline Annotations read_annotations(const fs::path& path) {
  static constexpr std::string_view cols[] = {"frame_id", "label", "src_x", "src_y", "dst_x", "dst_y", "domain_pair"};
  Annotations out;
  for (const auto& row : read_csv(path, cols)) {
    DomainPair pair;
    if (row[6] == "IF") pair = DomainPair::ImageField;
    else if (row[6] == "SF") pair = DomainPair::SensorField;
    else throw Error(Errc::Parse, path.string() + ": unknown domain_pair '" + row[6] + "'");
    geometry::Correspondence c{{parse_number<double>(row[2], "src_x"), parse_number<double>(row[3], "src_y")},
                               {parse_number<double>(row[4], "dst_x"), parse_number<double>(row[5], "dst_y")},
                               row[1].empty() ? std::nullopt : std::optional<std::string>(row[1])};
    out[{pair, parse_number<std::int64_t>(row[0], "frame_id")}].push_back(std::move(c));
  }
  return out;
}

inline void write_annotations_header(std::ostream& os) { os << "frame_id,label,src_x,src_y,dst_x,dst_y,domain_pair\n"; }

inline void write_annotation_row(std::ostream& os, std::int64_t frame, std::string_view label,
                                 const Eigen::Vector2d& src, const Eigen::Vector2d& dst, DomainPair pair) {
  char buf[256];
  std::snprintf(buf, sizeof buf, ",%.10f,%.10f,%.6f,%.6f,", src.x(), src.y(), dst.x(), dst.y());
  os << frame << ',' << label << buf << to_string(pair) << '\n';
}

struct EstimatedHomography {
  AnnotationKey key;
  geometry::Homography h;
  double max_reprojection_error;
};

struct EstimationFailure {
  AnnotationKey key;
  std::string message;
  Errc code;
};

struct EstimationResult {
  std::vector<EstimatedHomography> ok;
  std::vector<EstimationFailure> failed;
};

inline EstimationResult estimate_all(const Annotations& ann) {
  EstimationResult out;
  for (const auto& [key, pairs] : ann) {
    const auto [src, dst] = domains(key.pair);
    try {
      auto h = geometry::estimate_homography(pairs, src, dst);
      const double err = geometry::max_reprojection_error(h, pairs);
      out.ok.push_back({key, std::move(h), err});
    } catch (const Error& e) {
      out.failed.push_back({key, e.what(), e.code()});
    }
  }
  return out;
}

// --- homography JSON -------------------------------------------------------------

inline Json to_json(const geometry::Homography& h) {
  const auto m = h.row_major();
  return Json{{"m", std::vector<double>(m.begin(), m.end())},
              {"src", std::string(geometry::to_string(h.src()))},
              {"dst", std::string(geometry::to_string(h.dst()))}};
}

inline geometry::Homography homography_from_json(const Json& j) {
  try {
    const auto m = j.at("m").get<std::vector<double>>();
    if (m.size() != 9) throw Error(Errc::Parse, "homography needs 9 entries");
    Eigen::Matrix3d mat;
    mat << m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7], m[8];
    return geometry::Homography(mat, geometry::domain_from_string(j.at("src").get<std::string>()),
                                geometry::domain_from_string(j.at("dst").get<std::string>()));
  } catch (const Json::exception& e) {
    throw Error(Errc::Parse, std::string("homography JSON: ") + e.what());
  }
}

inline Json homographies_to_json(const std::vector<EstimatedHomography>& hs) {
  Json arr = Json::array();
  for (const auto& e : hs) {
    Json j = to_json(e.h);
    j["frame_id"] = e.key.frame_id;
    j["domain_pair"] = std::string(to_string(e.key.pair));
    j["max_reprojection_error"] = e.max_reprojection_error;
    arr.push_back(std::move(j));
  }
  return Json{{"homographies", std::move(arr)}};
}

/// Splits homographies into the image->field and sensor->field tracks.
inline void add_to_tracks(const std::vector<EstimatedHomography>& hs, fusion::HomographyTrack& image_to_field,
                          fusion::HomographyTrack& sensor_to_field) {
  for (const auto& e : hs) (e.key.pair == DomainPair::ImageField ? image_to_field : sensor_to_field).insert(e.key.frame_id, e.h);
}

inline std::vector<EstimatedHomography> read_homographies(const fs::path& path) {
  auto in = open_input(path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::Parse, path.string() + ": " + e.what());
  }
  std::vector<EstimatedHomography> out;
  try {
    for (const auto& h : j.at("homographies")) {
      const std::string pair = h.at("domain_pair").get<std::string>();
      out.push_back({{pair == "SF" ? DomainPair::SensorField : DomainPair::ImageField, h.at("frame_id").get<std::int64_t>()},
                     homography_from_json(h),
                     h.value("max_reprojection_error", 0.0)});
    }
  } catch (const Json::exception& e) {
    throw Error(Errc::Parse, path.string() + ": " + e.what());
  }
  return out;
}

// --- detections -----------------------------------------------------------------

inline Json to_json(const fusion::Detection& d) {
  Json j{{"frame_id", d.frame_id}, {"x", d.box.x}, {"y", d.box.y}, {"w", d.box.w}, {"h", d.box.h}};
  j["crop_ref"] = d.crop_ref ? Json(*d.crop_ref) : Json(nullptr);
  return j;
}

template <class F>
void for_each_jsonl(const fs::path& path, F&& f) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      f(Json::parse(line));
    } catch (const Json::exception& e) {
      throw Error(Errc::Parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline std::vector<fusion::Detection> read_detections(const fs::path& path) {
  std::vector<fusion::Detection> out;
  for_each_jsonl(path, [&](const Json& j) {
    fusion::Detection d;
    d.frame_id = j.at("frame_id").get<std::int64_t>();
    d.box = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(), j.at("h").get<double>()};
    if (!(d.box.w > 0.0 && d.box.h > 0.0)) throw Error(Errc::Parse, path.string() + ": box with non-positive size");
    if (j.contains("crop_ref") && !j["crop_ref"].is_null()) d.crop_ref = j["crop_ref"].get<std::string>();
    out.push_back(std::move(d));
  });
  return out;
}

/// Jersey features for each detection. Crop references resolve relative to
/// `base_dir`; unreadable or missing crops yield nullopt. Each distinct crop
/// is decoded once.
inline std::vector<std::optional<jersey::JerseyFeature>> load_features(const std::vector<fusion::Detection>& dets,
                                                                       const fs::path& base_dir) {
  std::unordered_map<std::string, std::optional<jersey::JerseyFeature>> cache;
  std::vector<std::optional<jersey::JerseyFeature>> out;
  out.reserve(dets.size());
  for (const auto& d : dets) {
    if (!d.crop_ref) {
      out.emplace_back();
      continue;
    }
    auto it = cache.find(*d.crop_ref);
    if (it == cache.end()) {
      std::optional<jersey::JerseyFeature> f;
      try {
        f = jersey::jersey_feature(jersey::read_ppm(base_dir / *d.crop_ref));
      } catch (const Error&) {
      }
      it = cache.emplace(*d.crop_ref, f).first;
    }
    out.push_back(it->second);
  }
  return out;
}

// --- sensor CSV -----------------------------------------------------------------

inline std::vector<fusion::SensorSample> read_sensor(const fs::path& path) {
  static constexpr std::string_view cols[] = {"player_id", "t_seconds", "lat", "lon", "roll", "pitch", "yaw"};
  std::vector<fusion::SensorSample> out;
  for (const auto& row : read_csv(path, cols)) {
    fusion::SensorSample s;
    s.player_id = row[0];
    if (s.player_id.empty()) throw Error(Errc::Parse, path.string() + ": empty player_id");
    s.t = parse_number<double>(row[1], "t_seconds");
    s.pos = {parse_number<double>(row[2], "lat"), parse_number<double>(row[3], "lon")};
    if (s.pos.lat < -90.0 || s.pos.lat > 90.0 || s.pos.lon < -180.0 || s.pos.lon > 180.0) {
      throw Error(Errc::Parse, path.string() + ": latitude/longitude out of range");
    }
    const int present = !row[4].empty() + !row[5].empty() + !row[6].empty();
    if (present == 3) {
      s.orient = angles::EulerOrientation(parse_number<double>(row[4], "roll"), parse_number<double>(row[5], "pitch"),
                                          parse_number<double>(row[6], "yaw"));
    } else if (present != 0) {
      throw Error(Errc::Parse, path.string() + ": partial orientation on a row of " + s.player_id);
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_sensor_header(std::ostream& os) { os << "player_id,t_seconds,lat,lon,roll,pitch,yaw\n"; }

inline void write_sensor_row(std::ostream& os, const fusion::SensorSample& s) {
  char buf[256];
  if (s.orient) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.10f,%.10f,%.6f,%.6f,%.6f\n", s.player_id.c_str(), s.t, s.pos.lat,
                  s.pos.lon, s.orient->roll_x, s.orient->pitch_y, s.orient->yaw_z);
  } else {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.10f,%.10f,,,\n", s.player_id.c_str(), s.t, s.pos.lat, s.pos.lon);
  }
  os << buf;
}

// --- matched records / manifest ---------------------------------------------------

inline Json to_json(const fusion::MatchedRecord& r) {
  Json j{{"frame_id", r.frame_id},
         {"player_id", r.player_id},
         {"box", {r.box.x, r.box.y, r.box.w, r.box.h}},
         {"alpha_raw", angles::round_for_output(r.alpha_raw)},
         {"alpha_compensated", r.alpha_compensated},
         {"bin", r.bin},
         {"soft", std::vector<double>(r.soft.values().begin(), r.soft.values().end())},
         {"grayscale", r.grayscale},
         {"match_distance_m", r.match_distance_m}};
  j["crop_ref"] = r.crop_ref ? Json(*r.crop_ref) : Json(nullptr);
  return j;
}

inline void write_records(const fs::path& path, const std::vector<fusion::MatchedRecord>& records) {
  auto out = open_output(path);
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline Json to_json(const angles::BinSet& bins) {
  return Json{{"k", bins.k()},
              {"width", bins.width()},
              {"centers", std::vector<double>(bins.centers().begin(), bins.centers().end())}};
}

inline Json to_json(const fusion::BuildReport& r) {
  return Json{{"detections_in", r.detections_in},
              {"detections_dropped_bounds", r.detections_dropped_bounds},
              {"detections_without_crop", r.detections_without_crop},
              {"detections_filtered", r.detections_filtered},
              {"detections_unmapped", r.detections_unmapped},
              {"detections_matched", r.detections_matched},
              {"frames_total", r.frames_total},
              {"frames_skipped", r.frames_skipped},
              {"sensor_no_coverage", r.sensor_no_coverage},
              {"sensor_off_field", r.sensor_off_field},
              {"heading_antipodal", r.heading_antipodal},
              {"compensation_failures", r.compensation_failures},
              {"mean_match_distance_m", r.mean_match_distance_m},
              {"jersey_filter_applied", r.jersey_filter_applied},
              {"cluster_sizes", r.cluster_sizes},
              {"cluster_roles", r.cluster_roles}};
}

inline Json convention_json() {
  return Json{{"angles", "degrees in [0, 360); 0 = toward the right goal, 90 = toward the top sideline, counterclockwise"},
              {"bins", "bin j covers [width*(j-1), width*j), boundaries belong to the upper bin"},
              {"euler", std::string(angles::kEulerConvention)},
              {"zero_vector", "apparent zero-vector of 1 pixel along +x at the box foot point"}};
}

struct BuildSettings {
  fusion::FusionConfig fusion;
  std::optional<std::string> home_reference_crop;  // relative to the detections file
};

/// Reads the `build` configuration; every key is optional.
inline BuildSettings build_settings_from_json(const Json& j) {
  config::Reader r(j, "build config");
  BuildSettings s;
  auto& f = s.fusion;
  f.gate_m = r.get("gate_m", f.gate_m);
  f.fps = r.get("fps", f.fps);
  f.clock_offset_s = r.get("clock_offset_s", f.clock_offset_s);
  f.field_length_m = r.get("field_length_m", f.field_length_m);
  f.field_width_m = r.get("field_width_m", f.field_width_m);
  f.k_bins = r.get("k_bins", f.k_bins);
  f.seed = r.get("seed", f.seed);
  f.jersey_filter = r.get("jersey_filter", f.jersey_filter);
  f.grayscale = r.get("grayscale", f.grayscale);
  f.image_width = r.get("image_width", f.image_width);
  f.image_height = r.get("image_height", f.image_height);
  f.brightness_jitter = r.get("brightness_jitter", f.brightness_jitter);
  f.contrast_jitter = r.get("contrast_jitter", f.contrast_jitter);
  const std::string ref = r.get("home_reference_crop", std::string());
  if (!ref.empty()) s.home_reference_crop = ref;
  r.finish();
  if (!(f.gate_m > 0.0) || !(f.fps > 0.0) || f.k_bins < 2 || !(f.image_width > 0.0) || !(f.image_height > 0.0) ||
      !(f.field_length_m > 0.0) || !(f.field_width_m > 0.0) || f.brightness_jitter < 0.0 || f.contrast_jitter < 0.0) {
    throw Error(Errc::InvalidConfig, "build config out of range");
  }
  return s;
}

inline Json to_json(const fusion::FusionConfig& f) {
  return Json{{"gate_m", f.gate_m},
              {"fps", f.fps},
              {"clock_offset_s", f.clock_offset_s},
              {"field_length_m", f.field_length_m},
              {"field_width_m", f.field_width_m},
              {"k_bins", f.k_bins},
              {"seed", f.seed},
              {"jersey_filter", f.jersey_filter},
              {"grayscale", f.grayscale},
              {"image_width", f.image_width},
              {"image_height", f.image_height},
              {"brightness_jitter", f.brightness_jitter},
              {"contrast_jitter", f.contrast_jitter}};
}

inline Json manifest_json(const angles::BinSet& bins, const fusion::BuildReport& report,
                          const fusion::FusionConfig& config, std::string_view config_hash) {
  return Json{{"bins", to_json(bins)},
              {"convention", convention_json()},
              {"counts", to_json(report)},
              {"config", to_json(config)},
              {"augmentation",
               {{"brightness", {-config.brightness_jitter, config.brightness_jitter}},
                {"contrast", {-config.contrast_jitter, config.contrast_jitter}},
                {"grayscale", config.grayscale}}},
              {"config_hash", std::string(config_hash)},
              {"grayscale_weights", {jersey::kLumaR, jersey::kLumaG, jersey::kLumaB}}};
}

}  // namespace orientpipe::io
