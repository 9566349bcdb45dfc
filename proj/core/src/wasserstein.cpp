#include "mfgc/wasserstein.hpp"

#include "mfgc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mfgc {

namespace {

constexpr int kMaxAssignmentSize = 256;

// W_p between two 1-d uniform empirical measures, exact for any sizes:
// integrate |F^{-1} - G^{-1}|^p over the merged quantile breakpoints.
double w1d(std::vector<double> u, std::vector<double> v, int order) {
  std::sort(u.begin(), u.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = u.size();
  const std::size_t m = v.size();
  double acc = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  double level = 0.0;
  while (i < n && j < m) {
    double next_u = static_cast<double>(i + 1) / n;
    double next_v = static_cast<double>(j + 1) / m;
    double next = std::min(next_u, next_v);
    double gap = std::abs(u[i] - v[j]);
    acc += (next - level) * (order == 1 ? gap : gap * gap);
    level = next;
    if (next_u <= next) ++i;
    if (next_v <= next) ++j;
  }
  return order == 1 ? acc : std::sqrt(acc);
}

double assignment_distance(const Eigen::MatrixXd& lhs, const Eigen::MatrixXd& rhs,
                           int order) {
  if (lhs.rows() != rhs.rows())
    throw SizeMismatch("wasserstein: assignment mode requires equal cloud sizes");
  const int n = static_cast<int>(lhs.rows());
  if (n > kMaxAssignmentSize)
    throw Error("wasserstein: cloud larger than the exact-assignment cap (256)");
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double d = (lhs.row(i) - rhs.row(j)).norm();
      cost(i, j) = order == 1 ? d : d * d;
    }
  }
  double total = solve_assignment(cost) / n;
  return order == 1 ? total : std::sqrt(total);
}

}  // namespace

// Jonker-Volgenant style shortest augmenting path assignment, O(n^3).
double solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);  // column -> row
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, false);
    std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      int i0 = match[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                     v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j)
    total += cost(match[static_cast<std::size_t>(j)] - 1, j - 1);
  return total;
}

double wasserstein(const StateCloud& lhs, const StateCloud& rhs, int order) {
  check_cloud(lhs);
  check_cloud(rhs);
  if (lhs.dim() != rhs.dim()) throw SizeMismatch("wasserstein: dimension mismatch");
  if (lhs.dim() == 1) {
    std::vector<double> u(lhs.x.data(), lhs.x.data() + lhs.size());
    std::vector<double> v(rhs.x.data(), rhs.x.data() + rhs.size());
    return w1d(std::move(u), std::move(v), order);
  }
  return assignment_distance(lhs.x, rhs.x, order);
}

double wasserstein(const StateActionCloud& lhs, const StateActionCloud& rhs, int order) {
  check_cloud(lhs);
  check_cloud(rhs);
  if (lhs.dim() != rhs.dim()) throw SizeMismatch("wasserstein: dimension mismatch");
  Eigen::MatrixXd joined_l(lhs.size(), 2 * lhs.dim());
  joined_l << lhs.x, lhs.a;
  Eigen::MatrixXd joined_r(rhs.size(), 2 * rhs.dim());
  joined_r << rhs.x, rhs.a;
  return assignment_distance(joined_l, joined_r, order);
}

}  // namespace mfgc
