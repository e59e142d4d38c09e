// orientpipe: command-line front end for the orientation ground-truth pipeline.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "orientpipe/orientpipe.hpp"

namespace fs = std::filesystem;
using orientpipe::Errc;
using orientpipe::Error;
using Json = nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  bool quiet = false;
};

unsigned thread_cap() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const char* env = std::getenv("ORIENTPIPE_THREADS");
  if (env == nullptr || *env == '\0') return hw;
  const auto n = orientpipe::io::parse_number<long long>(env, "ORIENTPIPE_THREADS");
  if (n < 1) throw Error(Errc::InvalidConfig, "ORIENTPIPE_THREADS must be >= 1");
  return static_cast<unsigned>(std::min<long long>(n, 1024));
}

Json config_or_empty(const std::string& path) {
  return path.empty() ? Json::object() : orientpipe::config::load_json(path);
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw Error(Errc::Io, std::string("missing --") + what);
  if (!fs::is_regular_file(path)) throw Error(Errc::Io, std::string(what) + " not found: " + path);
}

// --- homography ---------------------------------------------------------------------

int cmd_homography(const Globals& g, const std::string& annotations) {
  namespace io = orientpipe::io;
  require_file(annotations, "annotations");
  const auto result = io::estimate_all(io::read_annotations(annotations));
  fs::create_directories(g.out);
  auto out = io::open_output(fs::path(g.out) / "homographies.json");
  out << io::homographies_to_json(result.ok).dump(2) << '\n';
  if (!g.quiet) {
    for (const auto& e : result.ok) {
      std::printf("%s frame %lld: max reprojection error %.3e\n", std::string(io::to_string(e.key.pair)).c_str(),
                  static_cast<long long>(e.key.frame_id), e.max_reprojection_error);
    }
  }
  int status = 0;
  for (const auto& f : result.failed) {
    std::fprintf(stderr, "error: %s frame %lld: %s: %s\n", std::string(io::to_string(f.key.pair)).c_str(),
                 static_cast<long long>(f.key.frame_id), std::string(orientpipe::to_string(f.code)).c_str(),
                 f.message.c_str());
    status = std::max(status, orientpipe::exit_code(f.code));
  }
  return status;
}

// --- build --------------------------------------------------------------------------

struct BuildArgs {
  std::string detections, sensor, annotations, homographies, export_crops;
};

int cmd_build(const Globals& g, const BuildArgs& a) {
  namespace io = orientpipe::io;
  namespace fusion = orientpipe::fusion;
  require_file(a.detections, "detections");
  require_file(a.sensor, "sensor");
  if (a.annotations.empty() == a.homographies.empty()) {
    throw Error(Errc::Io, "exactly one of --annotations and --homographies is required");
  }
  require_file(a.annotations.empty() ? a.homographies : a.annotations,
               a.annotations.empty() ? "homographies" : "annotations");

  auto settings = io::build_settings_from_json(config_or_empty(g.config));
  if (g.seed) settings.fusion.seed = *g.seed;
  settings.fusion.threads = thread_cap();

  fusion::DatasetInputs in;
  in.detections = io::read_detections(a.detections);
  in.sensor = io::read_sensor(a.sensor);
  std::vector<io::EstimatedHomography> hs;
  if (!a.homographies.empty()) {
    hs = io::read_homographies(a.homographies);
  } else {
    auto est = io::estimate_all(io::read_annotations(a.annotations));
    for (const auto& f : est.failed) {
      std::fprintf(stderr, "warning: %s frame %lld skipped: %s\n", std::string(io::to_string(f.key.pair)).c_str(),
                   static_cast<long long>(f.key.frame_id), f.message.c_str());
    }
    hs = std::move(est.ok);
  }
  io::add_to_tracks(hs, in.image_to_field, in.sensor_to_field);

  const fs::path base = fs::path(a.detections).parent_path();
  if (settings.fusion.jersey_filter) {
    in.features = io::load_features(in.detections, base);
    if (settings.home_reference_crop) {
      in.home_reference = orientpipe::jersey::jersey_feature(orientpipe::jersey::read_ppm(base / *settings.home_reference_crop));
    }
  }

  const auto ds = fusion::build_dataset(in, settings.fusion);
  const fs::path out(g.out);
  fs::create_directories(out);
  io::write_records(out / "dataset.jsonl", ds.records);

  // The hash covers the effective configuration, not the thread count.
  const Json effective = io::to_json(settings.fusion);
  const std::string hash = orientpipe::config::hex64(orientpipe::config::fnv1a(effective.dump()));
  {
    auto os = io::open_output(out / "manifest.json");
    os << io::manifest_json(orientpipe::angles::BinSet(settings.fusion.k_bins), ds.report, settings.fusion, hash).dump(2)
       << '\n';
  }
  {
    auto os = io::open_output(out / "report.json");
    os << io::to_json(ds.report).dump(2) << '\n';
  }

  if (!a.export_crops.empty()) {
    const fs::path dir(a.export_crops);
    fs::create_directories(dir);
    for (const auto& r : ds.records) {
      if (!r.crop_ref) continue;
      try {
        const auto img = orientpipe::jersey::read_ppm(base / *r.crop_ref);
        orientpipe::jersey::write_pgm(dir / (std::to_string(r.frame_id) + "_" + r.player_id + ".pgm"),
                                      orientpipe::jersey::to_grayscale(img));
      } catch (const Error& e) {
        std::fprintf(stderr, "warning: %s\n", e.what());
      }
    }
  }

  if (!g.quiet) {
    const auto& r = ds.report;
    const std::size_t candidates = r.detections_in - r.detections_filtered - r.detections_dropped_bounds;
    const double rate =
        candidates == 0 ? 0.0 : 100.0 * static_cast<double>(r.detections_matched) / static_cast<double>(candidates);
    std::printf("detections        %zu in, %zu matched (%.2f%% of candidate detections)\n", r.detections_in,
                r.detections_matched, rate);
    std::printf("filtered          %zu by jersey, %zu out of frame, %zu unmapped, %zu without crop\n",
                r.detections_filtered, r.detections_dropped_bounds, r.detections_unmapped, r.detections_without_crop);
    std::printf("frames            %zu total, %zu skipped\n", r.frames_total, r.frames_skipped);
    std::printf("sensor            %zu player-frames without coverage, %zu off field, %zu antipodal\n",
                r.sensor_no_coverage, r.sensor_off_field, r.heading_antipodal);
    std::printf("match distance    %.4f m mean\n", r.mean_match_distance_m);
    std::printf("config hash       %s\n", hash.c_str());
  }
  return 0;
}

// --- synth --------------------------------------------------------------------------

int cmd_synth(const Globals& g) {
  namespace synthgen = orientpipe::synthgen;
  auto cfg = synthgen::synth_config_from_json(config_or_empty(g.config));
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  const auto sc = synthgen::generate(cfg);
  synthgen::write_scenario(sc, g.out);
  if (!g.quiet) {
    std::printf("wrote %zu detections, %zu sensor rows, %zu truth rows to %s\n", sc.detections.size(), sc.sensor.size(),
                sc.truth.size(), g.out.c_str());
  }
  return 0;
}

// --- eval ---------------------------------------------------------------------------

using Key = std::pair<std::int64_t, std::string>;

std::map<Key, double> read_angles(const std::string& path) {
  std::map<Key, double> out;
  orientpipe::io::for_each_jsonl(path, [&](const Json& j) {
    Key key{j.at("frame_id").get<std::int64_t>(), j.at("player_id").get<std::string>()};
    double angle = 0.0;
    if (j.contains("alpha_compensated")) angle = j["alpha_compensated"].get<double>();
    else if (j.contains("alpha")) angle = j["alpha"].get<double>();
    else if (j.contains("true_alpha")) angle = j["true_alpha"].get<double>();
    else throw Error(Errc::Parse, path + ": row without an angle field");
    if (!out.emplace(key, angle).second) {
      throw Error(Errc::Parse, path + ": duplicate key (" + std::to_string(key.first) + ", " + key.second + ")");
    }
  });
  return out;
}

struct EvalArgs {
  std::string pred, truth, experiment = "run", split = "test";
  int k = 12;
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
  namespace eval = orientpipe::eval;
  namespace angles = orientpipe::angles;
  require_file(a.pred, "pred");
  require_file(a.truth, "truth");
  const auto pred = read_angles(a.pred);
  const auto truth = read_angles(a.truth);
  const angles::BinSet bins(a.k);
  std::vector<double> p, t;
  std::vector<int> pb, tb;
  for (const auto& [key, v] : truth) {
    const auto it = pred.find(key);
    if (it == pred.end()) {
      throw Error(Errc::LengthMismatch, "no prediction for (" + std::to_string(key.first) + ", " + key.second + ")");
    }
    p.push_back(it->second);
    t.push_back(v);
    pb.push_back(angles::bin_of(it->second, bins));
    tb.push_back(angles::bin_of(v, bins));
  }
  if (pred.size() != truth.size()) {
    for (const auto& [key, _] : pred)
      if (!truth.contains(key)) {
        throw Error(Errc::LengthMismatch, "no truth for (" + std::to_string(key.first) + ", " + key.second + ")");
      }
  }
  const auto summary = eval::summarize(p, t);
  const auto cm = eval::confusion(pb, tb, a.k);

  const fs::path out(g.out);
  fs::create_directories(out);
  eval::TableRow row{a.experiment, std::nullopt, std::nullopt};
  (a.split == "validation" ? row.validation : row.test) = summary;
  {
    auto os = orientpipe::io::open_output(out / "metrics.csv");
    eval::write_table_csv(os, std::span<const eval::TableRow>(&row, 1));
  }
  {
    auto os = orientpipe::io::open_output(out / "confusion.csv");
    eval::write_confusion_csv(os, cm);
  }
  {
    auto os = orientpipe::io::open_output(out / "confusion.dat");
    eval::write_confusion_gnuplot(os, cm);
  }
  if (!g.quiet) {
    std::printf("%s (%s): n=%zu MEAE=%.4f MDAE=%.4f accuracy=%.4f within-one-bin=%.4f\n", a.experiment.c_str(),
                a.split.c_str(), summary.n, summary.meae, summary.mdae, cm.band_fraction(0), cm.band_fraction(1));
  }
  return 0;
}

// --- toytrain -----------------------------------------------------------------------

int cmd_toytrain(const Globals& g) {
  namespace toytrain = orientpipe::toytrain;
  namespace eval = orientpipe::eval;
  namespace io = orientpipe::io;
  auto cfg = toytrain::experiment_config_from_json(config_or_empty(g.config));
  if (g.seed) cfg.seed = *g.seed;
  const auto res = toytrain::run_experiment(cfg);

  const fs::path out(g.out);
  fs::create_directories(out);
  {
    auto os = io::open_output(out / "results.csv");
    os << "loss,seed,final_loss,MEAE_v,MDAE_v,MEAE_t,MDAE_t,accuracy_t,within_one_bin_t\n";
    for (const auto& r : res.runs) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", r.final_loss, r.validation.summary.meae,
                    r.validation.summary.mdae, r.test.summary.meae, r.test.summary.mdae, r.test.accuracy,
                    r.test.confusion.band_fraction(1));
      os << toytrain::to_string(r.loss) << ',' << r.seed << ',' << buf << '\n';
    }
  }

  const std::string suffix = "_k" + std::to_string(cfg.k);
  std::vector<eval::TableRow> table;
  for (auto loss : {toytrain::Loss::Cyclic, toytrain::Loss::OneHot}) {
    const std::string name = loss == toytrain::Loss::Cyclic ? "cyclic" : "onehot";
    eval::ErrorSummary v, t;
    int n = 0;
    std::ofstream pred = io::open_output(out / ("predictions_" + name + ".jsonl"));
    std::optional<std::ofstream> truth;
    if (loss == toytrain::Loss::Cyclic) truth = io::open_output(out / "truth.jsonl");
    for (const auto& r : res.runs) {
      if (r.loss != loss) continue;
      v.meae += r.validation.summary.meae;
      v.mdae += r.validation.summary.mdae;
      t.meae += r.test.summary.meae;
      t.mdae += r.test.summary.mdae;
      v.n += r.validation.summary.n;
      t.n += r.test.summary.n;
      ++n;
      const std::string player = "seed" + std::to_string(r.seed);
      for (std::size_t i = 0; i < r.test.predicted.size(); ++i) {
        pred << Json{{"frame_id", i}, {"player_id", player}, {"alpha", r.test.predicted[i]}}.dump() << '\n';
        if (truth) *truth << Json{{"frame_id", i}, {"player_id", player}, {"true_alpha", r.test.truth[i]}}.dump() << '\n';
      }
    }
    v.meae /= n;
    v.mdae /= n;
    t.meae /= n;
    t.mdae /= n;
    table.push_back({name + suffix, v, t});
    const auto cm = res.pooled_confusion(loss, cfg.k);
    auto csv = io::open_output(out / ("confusion_" + name + ".csv"));
    eval::write_confusion_csv(csv, cm);
    auto dat = io::open_output(out / ("confusion_" + name + ".dat"));
    eval::write_confusion_gnuplot(dat, cm);
  }
  {
    auto os = io::open_output(out / "table.csv");
    eval::write_table_csv(os, table);
  }
  if (!g.quiet) {
    for (const auto& row : table) {
      std::printf("%-12s MEAE_v %.3f  MDAE_v %.3f  MEAE_t %.3f  MDAE_t %.3f\n", row.experiment.c_str(),
                  row.validation->meae, row.validation->mdae, row.test->meae, row.test->mdae);
    }
    std::printf("%d seeds in %.2f s\n", cfg.n_seeds, res.seconds);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orientation ground truth from wearable sensors and video detections"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "JSON configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "random seed override");
  app.add_option("--out", g.out, "output directory");
  app.add_flag("--quiet", g.quiet, "suppress progress output");

  std::string annotations;
  auto* homography = app.add_subcommand("homography", "estimate homographies from corner annotations");
  homography->add_option("--annotations", annotations, "annotations CSV")->required();

  BuildArgs build_args;
  auto* build = app.add_subcommand("build", "match detections with sensor data and write the dataset");
  build->add_option("--detections", build_args.detections, "detections JSONL")->required();
  build->add_option("--sensor", build_args.sensor, "sensor CSV")->required();
  build->add_option("--annotations", build_args.annotations, "annotations CSV");
  build->add_option("--homographies", build_args.homographies, "homographies JSON");
  build->add_option("--export-crops", build_args.export_crops, "directory for grayscale crops");

  auto* synth = app.add_subcommand("synth", "generate a synthetic scenario");

  EvalArgs eval_args;
  auto* evaluate = app.add_subcommand("eval", "score predictions against truth");
  evaluate->add_option("--pred", eval_args.pred, "prediction JSONL")->required();
  evaluate->add_option("--truth", eval_args.truth, "truth JSONL")->required();
  evaluate->add_option("--k", eval_args.k, "number of bins")->check(CLI::Range(2, 3600));
  evaluate->add_option("--experiment", eval_args.experiment, "row label");
  evaluate->add_option("--split", eval_args.split, "validation or test")->check(CLI::IsMember({"validation", "test"}));

  auto* toy = app.add_subcommand("toytrain", "compare cyclic and one-hot losses on synthetic features");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*homography) return cmd_homography(g, annotations);
    if (*build) return cmd_build(g, build_args);
    if (*synth) return cmd_synth(g);
    if (*evaluate) return cmd_eval(g, eval_args);
    if (*toy) return cmd_toytrain(g);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", std::string(orientpipe::to_string(e.code())).c_str(), e.what());
    return orientpipe::exit_code(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
