#pragma once

// Dataset completion: pair video detections with wearable-sensor tracks in
// the field domain and label every matched box with its compensated
// orientation.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "orientpipe/angles.hpp"
#include "orientpipe/assignment.hpp"
#include "orientpipe/error.hpp"
#include "orientpipe/geometry.hpp"
#include "orientpipe/jersey.hpp"

namespace orientpipe::fusion {

using geometry::FieldPoint;
using geometry::GeoPoint;
using geometry::Homography;
using geometry::ImagePoint;

struct Box {
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
  bool operator==(const Box&) const = default;

  /// Middle of the bottom edge, where the player touches the ground.
  ImagePoint foot() const { return {x + w / 2.0, y + h}; }
};

struct Detection {
  std::int64_t frame_id = 0;
  Box box;
  std::optional<std::string> crop_ref;
};

struct SensorSample {
  std::string player_id;
  double t = 0.0;  // seconds, sensor clock
  GeoPoint pos;
  std::optional<angles::EulerOrientation> orient;  // only on the 10 Hz rows
};

/// Clamps a box to the frame; false when nothing is left.
inline bool clamp_to_frame(Box& b, double width, double height) {
  const double x0 = std::clamp(b.x, 0.0, width), y0 = std::clamp(b.y, 0.0, height);
  const double x1 = std::clamp(b.x + b.w, 0.0, width), y1 = std::clamp(b.y + b.h, 0.0, height);
  b = {x0, y0, x1 - x0, y1 - y0};
  return b.w > 0.0 && b.h > 0.0;
}

inline FieldPoint map_detection(const Detection& d, const Homography& h_if) {
  return geometry::map_point<FieldPoint>(h_if, d.box.foot());
}

// --- matching ----------------------------------------------------------------

struct MatchPair {
  std::size_t detection;
  std::string player_id;
  double distance_m;
};

struct AssignmentResult {
  std::vector<MatchPair> pairs;
  std::vector<std::size_t> unmatched_detections;
  std::vector<std::string> unmatched_players;

  double total_distance() const {
    double s = 0.0;
    for (const auto& p : pairs) s += p.distance_m;
    return s;
  }
};

/// Gated minimum-distance assignment between detections and sensor players.
/// Maximises the number of pairs within `gate_m`, then minimises their summed
/// Euclidean distance.
inline AssignmentResult match_frame(std::span<const FieldPoint> detections,
                                    std::span<const std::pair<std::string, FieldPoint>> players, double gate_m) {
  if (!(gate_m > 0.0)) throw Error(Errc::InvalidArgument, "gate must be positive");
  std::vector<std::vector<double>> dist(detections.size(), std::vector<double>(players.size()));
  for (std::size_t i = 0; i < detections.size(); ++i)
    for (std::size_t j = 0; j < players.size(); ++j)
      dist[i][j] = std::hypot(detections[i].x - players[j].second.x, detections[i].y - players[j].second.y);

  AssignmentResult out;
  std::vector<bool> det_used(detections.size(), false), player_used(players.size(), false);
  for (const auto& p : assignment::solve_gated(dist, gate_m)) {
    out.pairs.push_back({p.row, players[p.col].first, p.cost});
    det_used[p.row] = true;
    player_used[p.col] = true;
  }
  for (std::size_t i = 0; i < detections.size(); ++i)
    if (!det_used[i]) out.unmatched_detections.push_back(i);
  for (std::size_t j = 0; j < players.size(); ++j)
    if (!player_used[j]) out.unmatched_players.push_back(players[j].first);
  return out;
}

// --- homographies per frame ----------------------------------------------------

// Homographies keyed by annotated frame; other frames use the nearest
// annotated one, ties toward the earlier frame.
class HomographyTrack {
 public:
  void insert(std::int64_t frame, Homography h) { by_frame_.insert_or_assign(frame, std::move(h)); }
  bool empty() const noexcept { return by_frame_.empty(); }
  std::size_t size() const noexcept { return by_frame_.size(); }
  const std::map<std::int64_t, Homography>& frames() const noexcept { return by_frame_; }

  const Homography& nearest(std::int64_t frame) const {
    if (by_frame_.empty()) throw Error(Errc::EmptyInput, "no homographies available");
    auto after = by_frame_.lower_bound(frame);
    if (after == by_frame_.end()) return std::prev(after)->second;
    if (after->first == frame || after == by_frame_.begin()) return after->second;
    auto before = std::prev(after);
    return (frame - before->first) <= (after->first - frame) ? before->second : after->second;
  }

 private:
  std::map<std::int64_t, Homography> by_frame_;
};

// --- sensor / video synchronisation ------------------------------------------

struct PlayerState {
  std::string player_id;
  GeoPoint pos;
  double heading = 0.0;
  bool antipodal = false;  // heading bracket was exactly 180 degrees apart
};

struct SyncResult {
  std::map<std::int64_t, std::vector<PlayerState>> frames;  // players sorted by id
  std::size_t no_coverage = 0;                              // skipped player-frames
  std::size_t antipodal = 0;
};

namespace detail {

inline constexpr double kTimeSnap = 1e-9;

struct Bracket {
  std::size_t lo;
  std::size_t hi;
  double t;  // interpolation weight of hi
};

inline std::optional<Bracket> bracket(std::span<const double> times, double t) {
  if (times.empty() || t < times.front() - kTimeSnap || t > times.back() + kTimeSnap) return std::nullopt;
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - times.begin());
  if (hi < times.size() && std::fabs(times[hi] - t) <= kTimeSnap) return Bracket{hi, hi, 0.0};
  if (hi > 0 && std::fabs(times[hi - 1] - t) <= kTimeSnap) return Bracket{hi - 1, hi - 1, 0.0};
  if (hi == 0 || hi == times.size()) return std::nullopt;
  const std::size_t lo = hi - 1;
  return Bracket{lo, hi, (t - times[lo]) / (times[hi] - times[lo])};
}

struct PlayerTrack {
  std::vector<double> pos_t;
  std::vector<GeoPoint> pos;
  std::vector<double> orient_t;
  std::vector<std::optional<double>> heading;  // nullopt when the torso normal is vertical
};

}  // namespace detail

/// Resamples each player's track at video frame times. Sensor time of frame f
/// is f / fps + clock_offset_s. Position is interpolated linearly between the
/// bracketing samples; heading is converted from Euler angles at the
/// bracketing orientation samples and interpolated along the shortest arc.
inline SyncResult synchronize(const std::vector<SensorSample>& sensor, std::span<const std::int64_t> frames,
                              double fps, double clock_offset_s) {
  if (!(fps > 0.0)) throw Error(Errc::InvalidArgument, "fps must be positive");
  std::map<std::string, detail::PlayerTrack> tracks;
  for (const auto& s : sensor) {
    auto& tr = tracks[s.player_id];
    if (!tr.pos_t.empty() && !(s.t > tr.pos_t.back())) {
      throw Error(Errc::UnsortedInput, "timestamps of player " + s.player_id + " are not strictly increasing");
    }
    tr.pos_t.push_back(s.t);
    tr.pos.push_back(s.pos);
    if (s.orient) {
      tr.orient_t.push_back(s.t);
      try {
        tr.heading.emplace_back(angles::euler_to_heading(*s.orient));
      } catch (const Error&) {
        tr.heading.emplace_back(std::nullopt);
      }
    }
  }

  SyncResult out;
  for (std::int64_t f : frames) {
    const double t = static_cast<double>(f) / fps + clock_offset_s;
    auto& states = out.frames[f];
    for (const auto& [id, tr] : tracks) {
      const auto pb = detail::bracket(tr.pos_t, t);
      const auto ob = detail::bracket(tr.orient_t, t);
      if (!pb || !ob || !tr.heading[ob->lo] || !tr.heading[ob->hi]) {
        ++out.no_coverage;
        continue;
      }
      const GeoPoint& a = tr.pos[pb->lo];
      const GeoPoint& b = tr.pos[pb->hi];
      const GeoPoint pos{a.lat + pb->t * (b.lat - a.lat), a.lon + pb->t * (b.lon - a.lon)};
      const auto heading = angles::circular_interpolate(*tr.heading[ob->lo], *tr.heading[ob->hi], ob->t);
      if (heading.antipodal) ++out.antipodal;
      states.push_back({id, pos, heading.degrees, heading.antipodal});
    }
  }
  return out;
}

// --- dataset build -------------------------------------------------------------

struct MatchedRecord {
  std::int64_t frame_id = 0;
  std::string player_id;
  Box box;
  std::optional<std::string> crop_ref;
  double alpha_raw = 0.0;          // synchronised sensor heading
  double alpha_compensated = 0.0;  // on the 6-decimal output grid
  int bin = 0;
  angles::SoftLabels soft;
  bool grayscale = true;
  double match_distance_m = 0.0;
};

struct FusionConfig {
  double gate_m = 2.0;
  double fps = 25.0;
  double clock_offset_s = 0.0;
  double field_length_m = 105.0;
  double field_width_m = 68.0;
  int k_bins = 12;
  std::uint64_t seed = 0;
  bool jersey_filter = true;
  bool grayscale = true;
  double image_width = 1920.0;
  double image_height = 1080.0;
  double brightness_jitter = 0.2;
  double contrast_jitter = 0.2;
  unsigned threads = 1;
};

struct DatasetInputs {
  std::vector<Detection> detections;
  std::vector<SensorSample> sensor;
  HomographyTrack image_to_field;
  HomographyTrack sensor_to_field;
  std::vector<std::optional<jersey::JerseyFeature>> features;  // parallel to detections; may be empty
  std::optional<jersey::JerseyFeature> home_reference;
};

struct BuildReport {
  std::size_t detections_in = 0;
  std::size_t detections_dropped_bounds = 0;  // empty after clamping to the frame
  std::size_t detections_without_crop = 0;
  std::size_t detections_filtered = 0;        // away team or outliers
  std::size_t detections_unmapped = 0;        // at infinity or off the pitch
  std::size_t detections_matched = 0;
  std::size_t frames_total = 0;
  std::size_t frames_skipped = 0;             // no sensor coverage at all
  std::size_t sensor_no_coverage = 0;         // player-frames without coverage
  std::size_t sensor_off_field = 0;
  std::size_t heading_antipodal = 0;
  std::size_t compensation_failures = 0;
  double mean_match_distance_m = 0.0;
  bool jersey_filter_applied = false;
  std::vector<std::size_t> cluster_sizes;
  std::vector<std::string> cluster_roles;
};

struct Dataset {
  std::vector<MatchedRecord> records;
  BuildReport report;
};

namespace detail {

struct FrameOutcome {
  std::vector<MatchedRecord> records;
  std::size_t unmapped = 0;
  std::size_t off_field = 0;
  std::size_t compensation_failures = 0;
  bool skipped = false;
};

inline bool on_pitch(const FieldPoint& p, const FusionConfig& cfg) {
  constexpr double margin = 5.0;
  return std::isfinite(p.x) && std::isfinite(p.y) && p.x >= -margin && p.x <= cfg.field_length_m + margin &&
         p.y >= -margin && p.y <= cfg.field_width_m + margin;
}

inline FrameOutcome process_frame(std::int64_t frame, std::span<const Detection* const> detections,
                                  const std::vector<PlayerState>& states, const DatasetInputs& in,
                                  const FusionConfig& cfg, const angles::BinSet& bins) {
  FrameOutcome out;
  if (states.empty()) {
    out.skipped = true;
    return out;
  }
  const Homography& h_if = in.image_to_field.nearest(frame);
  const Homography& h_sf = in.sensor_to_field.nearest(frame);

  std::vector<FieldPoint> det_pts;
  std::vector<const Detection*> det_refs;
  for (const Detection* d : detections) {
    try {
      const FieldPoint p = map_detection(*d, h_if);
      if (!on_pitch(p, cfg)) {
        ++out.unmapped;
        continue;
      }
      det_pts.push_back(p);
      det_refs.push_back(d);
    } catch (const Error&) {
      ++out.unmapped;
    }
  }

  std::vector<std::pair<std::string, FieldPoint>> players;
  std::vector<const PlayerState*> player_refs;
  for (const auto& s : states) {
    try {
      const auto p = geometry::map_point<FieldPoint>(h_sf, s.pos);
      if (!on_pitch(p, cfg)) {
        ++out.off_field;
        continue;
      }
      players.emplace_back(s.player_id, p);
      player_refs.push_back(&s);
    } catch (const Error&) {
      ++out.off_field;
    }
  }

  const AssignmentResult match = match_frame(det_pts, players, cfg.gate_m);
  for (const auto& pair : match.pairs) {
    const Detection& d = *det_refs[pair.detection];
    const auto player = std::find_if(player_refs.begin(), player_refs.end(),
                                     [&](const PlayerState* s) { return s->player_id == pair.player_id; });
    MatchedRecord rec;
    rec.frame_id = frame;
    rec.player_id = pair.player_id;
    rec.box = d.box;
    rec.crop_ref = d.crop_ref;
    rec.alpha_raw = (*player)->heading;
    try {
      rec.alpha_compensated = angles::round_for_output(geometry::compensate_angle(rec.alpha_raw, d.box.foot(), h_if));
    } catch (const Error&) {
      ++out.compensation_failures;
      continue;
    }
    rec.bin = angles::bin_of(rec.alpha_compensated, bins);
    rec.soft = angles::soft_labels(rec.alpha_compensated, bins);
    rec.grayscale = cfg.grayscale;
    rec.match_distance_m = pair.distance_m;
    out.records.push_back(std::move(rec));
  }
  std::sort(out.records.begin(), out.records.end(),
            [](const MatchedRecord& a, const MatchedRecord& b) { return a.player_id < b.player_id; });
  return out;
}

}  // namespace detail

/// Runs the whole pairing pipeline. Frames are processed independently
/// (optionally on several threads); the output order is always frame_id then
/// player_id.
inline Dataset build_dataset(const DatasetInputs& in, const FusionConfig& cfg) {
  if (in.image_to_field.empty()) throw Error(Errc::EmptyInput, "no image->field homographies");
  if (in.sensor_to_field.empty()) throw Error(Errc::EmptyInput, "no sensor->field homography");
  if (!in.features.empty() && in.features.size() != in.detections.size()) {
    throw Error(Errc::LengthMismatch, "jersey features do not line up with detections");
  }
  const angles::BinSet bins(cfg.k_bins);
  Dataset ds;
  BuildReport& rep = ds.report;
  rep.detections_in = in.detections.size();

  // Jersey filtering is a sequential stage over every crop in the stream.
  std::optional<jersey::ClusterModel> model;
  if (cfg.jersey_filter) {
    std::vector<jersey::JerseyFeature> feats;
    for (const auto& f : in.features)
      if (f) feats.push_back(*f);
    if (feats.size() >= 3) {
      model = jersey::fit_jersey_clusters(feats, cfg.seed, 3, in.home_reference);
      rep.jersey_filter_applied = true;
      rep.cluster_sizes = model->clusters.counts;
      for (auto r : model->roles) rep.cluster_roles.emplace_back(jersey::to_string(r));
    }
  }

  std::vector<Detection> kept;
  kept.reserve(in.detections.size());
  for (std::size_t i = 0; i < in.detections.size(); ++i) {
    Detection d = in.detections[i];
    if (!clamp_to_frame(d.box, cfg.image_width, cfg.image_height)) {
      ++rep.detections_dropped_bounds;
      continue;
    }
    const bool has_feature = !in.features.empty() && in.features[i].has_value();
    if (!has_feature) ++rep.detections_without_crop;
    if (model && has_feature && model->role_of(*in.features[i]) != jersey::Role::Home) {
      ++rep.detections_filtered;
      continue;
    }
    kept.push_back(std::move(d));
  }

  std::map<std::int64_t, std::vector<const Detection*>> by_frame;
  for (const auto& d : kept) by_frame[d.frame_id].push_back(&d);
  std::vector<std::int64_t> frames;
  frames.reserve(by_frame.size());
  for (const auto& [f, _] : by_frame) frames.push_back(f);
  rep.frames_total = frames.size();

  const SyncResult sync = synchronize(in.sensor, frames, cfg.fps, cfg.clock_offset_s);
  rep.sensor_no_coverage = sync.no_coverage;
  rep.heading_antipodal = sync.antipodal;

  std::vector<detail::FrameOutcome> outcomes(frames.size());
  const unsigned n_threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(frames.size())));
  std::vector<std::exception_ptr> failures(n_threads);
  auto worker = [&](unsigned w) {
    try {
      for (std::size_t i = w; i < frames.size(); i += n_threads) {
        const auto& dets = by_frame.at(frames[i]);
        outcomes[i] = detail::process_frame(frames[i], dets, sync.frames.at(frames[i]), in, cfg, bins);
      }
    } catch (...) {
      failures[w] = std::current_exception();
    }
  };
  if (n_threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(worker, w);
  }
  for (const auto& e : failures)
    if (e) std::rethrow_exception(e);

  double distance_sum = 0.0;
  for (auto& o : outcomes) {
    rep.frames_skipped += o.skipped ? 1 : 0;
    rep.detections_unmapped += o.unmapped;
    rep.sensor_off_field += o.off_field;
    rep.compensation_failures += o.compensation_failures;
    for (auto& r : o.records) {
      distance_sum += r.match_distance_m;
      ds.records.push_back(std::move(r));
    }
  }
  rep.detections_matched = ds.records.size();
  rep.mean_match_distance_m = ds.records.empty() ? 0.0 : distance_sum / static_cast<double>(ds.records.size());
  return ds;
}

}  // namespace orientpipe::fusion
