#pragma once

// Rectangular linear assignment (Hungarian method, shortest augmenting path
// form with row/column potentials), plus a gated variant that forbids pairs
// farther apart than a threshold.

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "orientpipe/error.hpp"

namespace orientpipe::assignment {

// Cost type requirements: totally ordered abelian group (+, -, <) with
// Cost{} as zero and an `infinity()` greater than any reachable sum.
template <class Cost>
struct CostTraits {
  static Cost infinity() {
    if constexpr (std::numeric_limits<Cost>::has_infinity) return std::numeric_limits<Cost>::infinity();
    else return std::numeric_limits<Cost>::max() / 4;
  }
};

/// Minimum-cost assignment for an n x m matrix with n <= m.
/// Returns, for each row, the assigned column.
template <class Cost>
std::vector<std::size_t> solve_rows_le_cols(const std::vector<std::vector<Cost>>& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return {};
  const std::size_t m = cost.front().size();
  if (n > m) throw Error(Errc::DimensionMismatch, "solver expects rows <= cols");
  const Cost inf = CostTraits<Cost>::infinity();

  // 1-based internal indexing; column 0 is the virtual source.
  std::vector<Cost> u(n + 1, Cost{}), v(m + 1, Cost{});
  std::vector<std::size_t> row_of_col(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    std::size_t j0 = 0;
    std::vector<Cost> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = row_of_col[j0];
      Cost delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const Cost reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (reduced < minv[j]) {
          minv[j] = reduced;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[row_of_col[j]] = u[row_of_col[j]] + delta;
          v[j] = v[j] - delta;
        } else {
          minv[j] = minv[j] - delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> col_of_row(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (row_of_col[j] != 0) col_of_row[row_of_col[j] - 1] = j - 1;
  return col_of_row;
}

/// Minimum-cost assignment for any rectangular matrix. Entry i of the result
/// is the column matched to row i, or nullopt when row i is left over
/// (only possible when rows outnumber columns).
template <class Cost>
std::vector<std::optional<std::size_t>> solve(const std::vector<std::vector<Cost>>& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return {};
  const std::size_t m = cost.front().size();
  for (const auto& row : cost)
    if (row.size() != m) throw Error(Errc::DimensionMismatch, "ragged cost matrix");
  std::vector<std::optional<std::size_t>> result(n);
  if (m == 0) return result;
  if (n <= m) {
    const auto cols = solve_rows_le_cols(cost);
    for (std::size_t i = 0; i < n; ++i) result[i] = cols[i];
    return result;
  }
  std::vector<std::vector<Cost>> transposed(m, std::vector<Cost>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) transposed[j][i] = cost[i][j];
  const auto rows = solve_rows_le_cols(transposed);
  for (std::size_t j = 0; j < m; ++j) result[rows[j]] = j;
  return result;
}

// Lexicographic cost used for gating: first the number of forbidden pairs
// that had to be used, then the summed distance of the allowed ones. Solving
// with it maximises the number of allowed matches and, among those
// assignments, minimises total distance.
struct GatedCost {
  long long forbidden = 0;
  double distance = 0.0;

  friend GatedCost operator+(GatedCost a, GatedCost b) { return {a.forbidden + b.forbidden, a.distance + b.distance}; }
  friend GatedCost operator-(GatedCost a, GatedCost b) { return {a.forbidden - b.forbidden, a.distance - b.distance}; }
  friend bool operator<(GatedCost a, GatedCost b) {
    if (a.forbidden != b.forbidden) return a.forbidden < b.forbidden;
    return a.distance < b.distance;
  }
};

template <>
struct CostTraits<GatedCost> {
  static GatedCost infinity() {
    return {std::numeric_limits<long long>::max() / 4, std::numeric_limits<double>::infinity()};
  }
};

struct Pair {
  std::size_t row;
  std::size_t col;
  double cost;
};

/// Gated rectangular assignment over a distance matrix. Pairs with
/// distance > gate are never reported.
inline std::vector<Pair> solve_gated(const std::vector<std::vector<double>>& distance, double gate) {
  if (!(gate > 0.0)) throw Error(Errc::InvalidArgument, "gate must be positive");
  std::vector<std::vector<GatedCost>> cost(distance.size());
  for (std::size_t i = 0; i < distance.size(); ++i) {
    cost[i].reserve(distance[i].size());
    for (double d : distance[i]) cost[i].push_back(d <= gate ? GatedCost{0, d} : GatedCost{1, 0.0});
  }
  std::vector<Pair> pairs;
  const auto assigned = solve(cost);
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    if (!assigned[i]) continue;
    const double d = distance[i][*assigned[i]];
    if (d <= gate) pairs.push_back({i, *assigned[i], d});
  }
  return pairs;
}

}  // namespace orientpipe::assignment
