// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "orientpipe/orientpipe.hpp"

using namespace orientpipe;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void run(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o{false, ""};
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s %2d %-22s %s; %.3f s (limit %g s)%s\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs,
              budget_s, in_time ? "" : " over budget");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome loss_ordering() {
  toytrain::ExperimentConfig cfg;  // k 12, sigma 0.1, 2400 train, 1200 test, 5 seeds
  const auto r = toytrain::run_experiment(cfg);
  const double c = r.mean_test_meae(toytrain::Loss::Cyclic), o = r.mean_test_meae(toytrain::Loss::OneHot);
  return {c <= o, fmt("MEAE_t cyclic %.3f, one-hot %.3f", c, o)};
}

Outcome quantisation() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 360.0);
  bool ok = true;
  std::string detail;
  for (auto [k, bound, mean, tol] : {std::tuple{12, 15.0, 7.5, 0.1}, std::tuple{24, 7.5, 3.75, 0.05}}) {
    const angles::BinSet bins(k);
    std::vector<double> pred, truth;
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const double a = u(rng);
      const double d = bins.center(angles::bin_of(a, bins));
      worst = std::max(worst, eval::angular_abs_error(d, a));
      pred.push_back(d);
      truth.push_back(a);
    }
    const double meae = eval::summarize(pred, truth).meae;
    ok = ok && worst <= bound && std::fabs(meae - mean) <= tol;
    detail += fmt("k=%d max %.6f MEAE %.4f ", k, worst, meae);
  }
  return {ok, detail};
}

Outcome gradient() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> logit(-3.0, 3.0), angle(0.0, 360.0);
  double worst = 0.0;
  for (int k : {12, 24}) {
    const angles::BinSet bins(k);
    for (int n = 0; n < 1000; ++n) {
      std::vector<double> z(static_cast<std::size_t>(k));
      for (double& v : z) v = logit(rng);
      const auto y = angles::soft_labels(angle(rng), bins);
      const auto loss = [&](const std::vector<double>& x) {
        return angles::cyclic_cross_entropy(angles::ProbVector(angles::softmax(x)), y);
      };
      const auto g = angles::cyclic_cross_entropy_grad(z, y);
      const double h = 1e-5;
      double diff2 = 0.0, norm2 = 0.0;
      for (std::size_t j = 0; j < z.size(); ++j) {
        auto zp = z, zm = z;
        zp[j] += h;
        zm[j] -= h;
        const double fd = (loss(zp) - loss(zm)) / (2.0 * h);
        diff2 += (fd - g[j]) * (fd - g[j]);
        norm2 += g[j] * g[j];
      }
      worst = std::max(worst, std::sqrt(diff2 / norm2));
    }
  }
  return {worst < 1e-6, fmt("max relative error %.3e over 2000 pairs", worst)};
}

Outcome soft_labels() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 360.0);
  const angles::BinSet bins(12);
  double norm_err = 0.0, shift_err = 0.0;
  for (int n = 0; n < 1000000; ++n) {
    const double a = u(rng);
    const auto y = angles::soft_labels(a, bins);
    const auto ys = angles::soft_labels(a + bins.width(), bins);
    double s = 0.0;
    for (std::size_t j = 0; j < 12; ++j) {
      s += y[j];
      shift_err = std::max(shift_err, std::fabs(ys[(j + 1) % 12] - y[j]));
    }
    norm_err = std::max(norm_err, std::fabs(s - 1.0));
  }
  const auto b = angles::soft_labels(30.0, bins);
  const double boundary = std::fabs(b[0] - b[1]);
  return {norm_err <= 1e-9 && shift_err <= 1e-12 && boundary <= 1e-12,
          fmt("normalisation %.2e, shift %.2e, |y1-y2| at 30 deg %.2e", norm_err, shift_err, boundary)};
}

Outcome hungarian() {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> count(1, 7);
  std::uniform_real_distribution<double> pos(0.0, 12.0);
  const double gate = 3.0;
  int discrepancies = 0;
  for (int n = 0; n < 10000; ++n) {
    std::vector<geometry::FieldPoint> dets(static_cast<std::size_t>(count(rng)));
    std::vector<std::pair<std::string, geometry::FieldPoint>> players(static_cast<std::size_t>(count(rng)));
    std::vector<std::pair<double, double>> d_raw, p_raw;
    for (auto& d : dets) {
      d = {pos(rng), pos(rng)};
      d_raw.emplace_back(d.x, d.y);
    }
    for (std::size_t j = 0; j < players.size(); ++j) {
      players[j] = {"P" + std::to_string(j), {pos(rng), pos(rng)}};
      p_raw.emplace_back(players[j].second.x, players[j].second.y);
    }
    const auto got = fusion::match_frame(dets, players, gate);
    const auto best = oracle::gated_assignment(d_raw, p_raw, gate);
    if (got.pairs.size() != best.matched || std::fabs(got.total_distance() - best.total) > 1e-9) ++discrepancies;
  }
  return {discrepancies == 0, fmt("%d discrepancies in 10000 instances", discrepancies)};
}

Outcome homography_recovery() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> diag(0.5, 2.0), shear(-0.5, 0.5), shift(-100.0, 100.0),
      persp(-3e-4, 3e-4), pt(0.0, 1000.0);
  double entry_err = 0.0, reproj = 0.0;
  for (int n = 0; n < 100; ++n) {
    Eigen::Matrix3d m;
    m << diag(rng), shear(rng), shift(rng), shear(rng), diag(rng), shift(rng), persp(rng), persp(rng), 1.0;
    std::vector<geometry::Correspondence> pairs;
    for (int i = 0; i < 6; ++i) {
      const Eigen::Vector2d s(pt(rng), pt(rng));
      pairs.push_back({s, (m * s.homogeneous()).hnormalized(), std::nullopt});
    }
    const auto h = geometry::estimate_homography(pairs);
    const Eigen::Matrix3d got = h.matrix() / h.matrix()(2, 2);
    entry_err = std::max(entry_err, (got - m).cwiseAbs().maxCoeff());
    reproj = std::max(reproj, geometry::max_reprojection_error(h, pairs));
  }
  return {entry_err <= 1e-6 && reproj < 1e-9, fmt("max entry error %.2e, reprojection %.2e", entry_err, reproj)};
}

Outcome compensation() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> angle(0.0, 360.0), scale(0.05, 20.0), shift(-500.0, 500.0),
      pt(0.0, 1920.0);
  double worst = 0.0, identity = 0.0;
  for (int n = 0; n < 100; ++n) {
    const double theta = angle(rng), s = scale(rng), t = theta * angles::kDegToRad;
    Eigen::Matrix3d m;
    m << s * std::cos(t), s * std::sin(t), shift(rng), -s * std::sin(t), s * std::cos(t), shift(rng), 0, 0, 1;
    const geometry::Homography h(m, geometry::Domain::Image, geometry::Domain::Field);
    const geometry::ImagePoint p{pt(rng), pt(rng)};
    const double alpha = angle(rng);
    worst = std::max(worst, angles::arc_length(geometry::compensate_angle(alpha, p, h), angles::normalize(alpha - theta)));
    const auto id = geometry::Homography::identity(geometry::Domain::Image, geometry::Domain::Field);
    identity = std::max(identity, angles::arc_length(geometry::compensate_angle(alpha, p, id), alpha));
  }
  return {worst <= 1e-9 && identity == 0.0, fmt("max error %.2e, identity error %.2e", worst, identity)};
}

Outcome end_to_end() {
  synthgen::SynthConfig c;  // 10 players, 60 s, 25 fps, 4 m spacing, 2 m gate
  c.n_players = 10;
  c.duration_s = 60.0;
  c.fps = 25.0;
  c.min_spacing_m = 4.0;
  c.gate_m = 2.0;
  const auto build = [](const synthgen::SynthConfig& cfg) {
    const auto sc = synthgen::generate(cfg);
    auto ds = fusion::build_dataset(synthgen::dataset_inputs(sc), synthgen::fusion_config(cfg));
    return std::pair{synthgen::score(ds.records, sc.truth), std::move(ds.records)};
  };
  const auto [clean, clean_records] = build(c);
  c.jitter_m = 0.5;
  const auto [noisy, noisy_records] = build(c);
  const auto [again, again_records] = build(c);
  bool same = noisy_records.size() == again_records.size();
  for (std::size_t i = 0; same && i < noisy_records.size(); ++i) {
    const auto &a = noisy_records[i], &b = again_records[i];
    same = a.frame_id == b.frame_id && a.player_id == b.player_id && a.alpha_compensated == b.alpha_compensated &&
           synthgen::same_box(a.box, b.box);
  }
  const bool ok = clean.identity_accuracy() == 1.0 && clean.max_angle_error < 1e-6 && clean.detected > 0 &&
                  noisy.identity_accuracy() >= 0.99 && same;
  return {ok, fmt("clean %zu/%zu, max angle error %.2e; jitter 0.5 m %.4f; deterministic %s", clean.correct,
                  clean.detected, clean.max_angle_error, noisy.identity_accuracy(), same ? "yes" : "no")};
}

Outcome metrics() {
  const bool example = eval::angular_abs_error(10, 350) == 20.0;
  // errors 10, 20, 30, 170: mean 57.5, median 25
  const auto s = eval::summarize(std::vector<double>{10, 340, 30, 190}, std::vector<double>{0, 0, 0, 0});
  const bool hand = s.meae == 57.5 && s.mdae == 25.0;
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> bin(1, 12);
  std::vector<int> p(10000), t(10000);
  std::vector<std::uint64_t> count(13, 0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = bin(rng);
    t[i] = bin(rng);
    ++count[static_cast<std::size_t>(t[i])];
  }
  const auto cm = eval::confusion(p, t, 12);
  bool rows = true;
  for (int k = 1; k <= 12; ++k) rows = rows && cm.row_sum(k) == count[static_cast<std::size_t>(k)];
  return {example && hand && rows, fmt("example %s, hand-built %.2f/%.2f, row sums %s", example ? "ok" : "bad", s.meae,
                                       s.mdae, rows ? "ok" : "bad")};
}

}  // namespace

int main() {
  run(1, "reproducibility", 1.0, [] {
    return Outcome{true, "statement only: real-footage numbers need the original video, sensors and network; "
                         "criteria 2-9 substitute"};
  });
  run(2, "loss ordering", 60.0, loss_ordering);
  run(3, "quantisation bound", 1.0, quantisation);
  run(4, "gradient", 5.0, gradient);
  run(5, "soft labels", 10.0, soft_labels);
  run(6, "hungarian", 30.0, hungarian);
  run(7, "homography recovery", 1.0, homography_recovery);
  run(8, "compensation", 1.0, compensation);
  run(9, "end to end", 120.0, end_to_end);
  run(10, "metrics", 1.0, metrics);
  std::printf("%s: %d failing criteria\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
