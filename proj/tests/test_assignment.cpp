#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "orientpipe/assignment.hpp"

using namespace orientpipe;
using namespace orientpipe::assignment;

namespace {

// Exhaustive search over every injection of the smaller side into the larger.
template <class Cost>
Cost brute_force_min(const std::vector<std::vector<Cost>>& c) {
  const std::size_t n = c.size(), m = c.front().size();
  const bool flip = n > m;
  const std::size_t small = std::min(n, m), large = std::max(n, m);
  std::vector<std::size_t> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  Cost best = CostTraits<Cost>::infinity();
  do {
    Cost total{};
    for (std::size_t i = 0; i < small; ++i) total = total + (flip ? c[perm[i]][i] : c[i][perm[i]]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

template <class Cost>
Cost cost_of(const std::vector<std::vector<Cost>>& c, const std::vector<std::optional<std::size_t>>& a) {
  Cost total{};
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i]) total = total + c[i][*a[i]];
  return total;
}

}  // namespace

TEST_CASE("solve on small integer matrices") {
  const std::vector<std::vector<int>> c = {{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
  const auto a = solve(c);
  CHECK(cost_of(c, a) == 5);
  CHECK(brute_force_min(c) == 5);
}

TEST_CASE("solve handles rectangular matrices in both orientations") {
  const std::vector<std::vector<double>> wide = {{1.0, 9.0, 0.5}, {2.0, 0.1, 7.0}};
  auto a = solve(wide);
  REQUIRE(a.size() == 2);
  CHECK(*a[0] == 2);
  CHECK(*a[1] == 1);
  const std::vector<std::vector<double>> tall = {{1.0, 9.0}, {0.5, 7.0}, {2.0, 0.1}};
  a = solve(tall);
  CHECK_FALSE(a[0].has_value());
  CHECK(*a[1] == 0);
  CHECK(*a[2] == 1);
  CHECK(solve(std::vector<std::vector<double>>{}).empty());
  CHECK_THROWS_AS(solve(std::vector<std::vector<double>>{{1.0, 2.0}, {1.0}}), Error);
}

TEST_CASE("solve equals exhaustive search on random instances") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::uniform_int_distribution<int> ui(0, 20);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = dim(rng), m = dim(rng);
    std::vector<std::vector<double>> c(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(m)));
    std::vector<std::vector<long long>> ci(static_cast<std::size_t>(n), std::vector<long long>(static_cast<std::size_t>(m)));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = u(rng);
        ci[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = ui(rng);  // many ties
      }
    REQUIRE(std::fabs(cost_of(c, solve(c)) - brute_force_min(c)) < 1e-9);
    REQUIRE(cost_of(ci, solve(ci)) == brute_force_min(ci));
  }
}

TEST_CASE("GatedCost ordering") {
  CHECK(GatedCost{0, 100.0} < GatedCost{1, 0.0});
  CHECK(GatedCost{1, 1.0} < GatedCost{1, 2.0});
  const auto s = GatedCost{1, 2.0} + GatedCost{0, 3.0};
  CHECK(s.forbidden == 1);
  CHECK(s.distance == 5.0);
}

TEST_CASE("solve_gated prefers more admissible matches over lower distance") {
  // Row 0 could take column 0 cheaply, but then row 1 has nothing in range.
  const std::vector<std::vector<double>> d = {{0.1, 1.9}, {1.0, 5.0}};
  const auto pairs = solve_gated(d, 2.0);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].col == 1);
  CHECK(pairs[1].col == 0);
  CHECK_THROWS_AS(solve_gated(d, 0.0), Error);
}

TEST_CASE("solve_gated never reports pairs beyond the gate") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::vector<double>> d(5, std::vector<double>(4));
    for (auto& row : d)
      for (auto& v : row) v = u(rng);
    for (const auto& p : solve_gated(d, 1.5)) REQUIRE(p.cost <= 1.5);
  }
}
