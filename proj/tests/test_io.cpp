#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "orientpipe/io.hpp"

using namespace orientpipe;
namespace fs = std::filesystem;
using Catch::Matchers::WithinAbs;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "orientpipe_test_io";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::Io;
}

}  // namespace

TEST_CASE("csv splitting and header lookup") {
  const auto cells = io::split_csv("a, b,,c");
  REQUIRE(cells.size() == 4);
  CHECK(cells[2].empty());
  const auto p = scratch("cols.csv");
  write_text(p, "z,y,x\n3,2,1\n\n6,5,4\n");
  static constexpr std::string_view cols[] = {"x", "z"};
  const auto rows = io::read_csv(p, cols);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"1", "3"});
  CHECK(rows[1] == std::vector<std::string>{"4", "6"});

  static constexpr std::string_view missing[] = {"w"};
  CHECK(code_of([&] { io::read_csv(p, missing); }) == Errc::Parse);
  write_text(p, "x,z\n1\n");
  CHECK(code_of([&] { io::read_csv(p, cols); }) == Errc::Parse);
  CHECK(code_of([&] { io::read_csv(scratch("absent.csv"), cols); }) == Errc::Io);
  CHECK(exit_code(Errc::Io) == 1);
  CHECK(exit_code(Errc::Parse) == 1);
  CHECK(exit_code(Errc::DegenerateConfiguration) == 2);
}

TEST_CASE("annotation rows round trip and estimate") {
  const auto p = scratch("ann.csv");
  {
    std::ofstream out(p);
    io::write_annotations_header(out);
    const Eigen::Vector2d img[] = {{100, 600}, {900, 620}, {850, 100}, {150, 120}, {500, 300}};
    const Eigen::Vector2d fld[] = {{0, 0}, {105, 0}, {105, 68}, {0, 68}, {52.5, 34}};
    for (int i = 0; i < 5; ++i) io::write_annotation_row(out, 3, "c" + std::to_string(i), img[i], fld[i], io::DomainPair::ImageField);
    // collinear: fails with a degenerate configuration
    for (int i = 0; i < 4; ++i)
      io::write_annotation_row(out, 4, "", Eigen::Vector2d(i, i), Eigen::Vector2d(2 * i, 2 * i), io::DomainPair::ImageField);
  }
  const auto ann = io::read_annotations(p);
  REQUIRE(ann.size() == 2);
  const auto& first = ann.at({io::DomainPair::ImageField, 3});
  REQUIRE(first.size() == 5);
  CHECK(first[0].label == std::optional<std::string>("c0"));
  CHECK(first[4].dst.x() == 52.5);
  CHECK_FALSE(ann.at({io::DomainPair::ImageField, 4})[0].label.has_value());

  const auto est = io::estimate_all(ann);
  REQUIRE(est.ok.size() == 1);
  REQUIRE(est.failed.size() == 1);
  CHECK(est.failed[0].key.frame_id == 4);
  CHECK(exit_code(est.failed[0].code) == 2);

  // homographies survive JSON
  const auto jp = scratch("h.json");
  std::ofstream(jp) << io::homographies_to_json(est.ok).dump(2);
  const auto back = io::read_homographies(jp);
  REQUIRE(back.size() == 1);
  CHECK(back[0].key.frame_id == 3);
  CHECK((back[0].h.matrix() - est.ok[0].h.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(back[0].h.src() == geometry::Domain::Image);
  CHECK(back[0].h.dst() == geometry::Domain::Field);

  write_text(p, "frame_id,label,src_x,src_y,dst_x,dst_y,domain_pair\n1,a,0,0,0,0,XY\n");
  CHECK(code_of([&] { io::read_annotations(p); }) == Errc::Parse);
  write_text(p, "frame_id,label,src_x,src_y,dst_x,dst_y,domain_pair\n1,a,zero,0,0,0,IF\n");
  CHECK(code_of([&] { io::read_annotations(p); }) == Errc::Parse);
}

TEST_CASE("detections jsonl") {
  const auto p = scratch("det.jsonl");
  write_text(p,
             "{\"frame_id\":0,\"x\":1,\"y\":2,\"w\":3,\"h\":4,\"crop_ref\":\"c.ppm\"}\n"
             "\n"
             "{\"frame_id\":1,\"x\":5,\"y\":6,\"w\":7,\"h\":8,\"crop_ref\":null}\n");
  const auto dets = io::read_detections(p);
  REQUIRE(dets.size() == 2);
  CHECK(dets[0].crop_ref == std::optional<std::string>("c.ppm"));
  CHECK_FALSE(dets[1].crop_ref.has_value());
  CHECK(dets[1].box.h == 8.0);
  CHECK(io::to_json(dets[0])["w"] == 3.0);

  // missing crops give no feature rather than an error
  const auto feats = io::load_features(dets, p.parent_path());
  REQUIRE(feats.size() == 2);
  CHECK_FALSE(feats[0].has_value());

  write_text(p, "{\"frame_id\":0,\"x\":1,\"y\":2,\"w\":0,\"h\":4}\n");
  CHECK(code_of([&] { io::read_detections(p); }) == Errc::Parse);
  write_text(p, "{\"frame_id\":0,\n");
  CHECK(code_of([&] { io::read_detections(p); }) == Errc::Parse);
}

TEST_CASE("sensor csv") {
  const auto p = scratch("sensor.csv");
  {
    std::ofstream out(p);
    io::write_sensor_header(out);
    fusion::SensorSample a{"P01", 0.5, {48.1, 11.5}, std::nullopt};
    fusion::SensorSample b{"P01", 0.6, {48.1000001, 11.5000002}, angles::EulerOrientation(1.5, -2.25, 270.0)};
    io::write_sensor_row(out, a);
    io::write_sensor_row(out, b);
  }
  const auto s = io::read_sensor(p);
  REQUIRE(s.size() == 2);
  CHECK_FALSE(s[0].orient.has_value());
  REQUIRE(s[1].orient.has_value());
  CHECK(s[1].orient->pitch_y == -2.25);
  CHECK_THAT(s[1].pos.lat, WithinAbs(48.1000001, 1e-10));

  write_text(p, "player_id,t_seconds,lat,lon,roll,pitch,yaw\nP01,0,48,11,1,,\n");
  CHECK(code_of([&] { io::read_sensor(p); }) == Errc::Parse);
  write_text(p, "player_id,t_seconds,lat,lon,roll,pitch,yaw\nP01,0,148,11,,,\n");
  CHECK(code_of([&] { io::read_sensor(p); }) == Errc::Parse);
}

TEST_CASE("build settings are strict") {
  const auto s = io::build_settings_from_json(nlohmann::json{{"gate_m", 1.5}, {"home_reference_crop", "crops/h.ppm"}});
  CHECK(s.fusion.gate_m == 1.5);
  CHECK(s.home_reference_crop == std::optional<std::string>("crops/h.ppm"));
  CHECK_FALSE(io::build_settings_from_json(nlohmann::json::object()).home_reference_crop.has_value());
  CHECK(code_of([] { io::build_settings_from_json(nlohmann::json{{"gate", 1.5}}); }) == Errc::InvalidConfig);
  CHECK(code_of([] { io::build_settings_from_json(nlohmann::json{{"gate_m", -1.0}}); }) == Errc::InvalidConfig);
  CHECK(code_of([] { io::build_settings_from_json(nlohmann::json{{"k_bins", "twelve"}}); }) == Errc::InvalidConfig);
}

TEST_CASE("manifest records bins, counts, config and augmentation") {
  fusion::FusionConfig f;
  f.brightness_jitter = 0.2;
  fusion::BuildReport r;
  r.detections_matched = 7;
  const auto m = io::manifest_json(angles::BinSet(12), r, f, "abc");
  CHECK(m["bins"]["k"] == 12);
  CHECK(m["bins"]["centers"].size() == 12);
  CHECK(m["counts"]["detections_matched"] == 7);
  CHECK(m["config"]["gate_m"] == f.gate_m);
  CHECK(m["augmentation"]["brightness"][0] == -0.2);
  CHECK(m["config_hash"] == "abc");
  CHECK(m.contains("convention"));
  CHECK(config::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(config::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(config::hex64(255) == "00000000000000ff");
}
