#include "mfgc/cloud.hpp"

#include "mfgc/errors.hpp"

#include <cmath>

namespace mfgc {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(what);
}

}  // namespace

double moment(const StateCloud& cloud, int order) {
  check_cloud(cloud);
  const int n = cloud.size();
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    double s = cloud.x.row(j).squaredNorm();
    acc += order == 1 ? std::sqrt(s) : s;
  }
  return acc / n;
}

double moment(const StateActionCloud& cloud, int order) {
  check_cloud(cloud);
  const int n = cloud.size();
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    double s = cloud.x.row(j).squaredNorm() + cloud.a.row(j).squaredNorm();
    acc += order == 1 ? std::sqrt(s) : s;
  }
  return acc / n;
}

void check_cloud(const StateCloud& cloud) {
  require(cloud.size() > 0, "empty state cloud");
  require(cloud.x.allFinite(), "non-finite state cloud");
}

void check_cloud(const StateActionCloud& cloud) {
  require(cloud.size() > 0, "empty state-action cloud");
  require(cloud.x.rows() == cloud.a.rows() && cloud.x.cols() == cloud.a.cols(),
          "state/action shape mismatch");
  require(cloud.x.allFinite() && cloud.a.allFinite(), "non-finite cloud");
}

StateActionCloud cloud_without(const PlayerVector& x, const PlayerVector& a, int skip) {
  StateActionCloud out(static_cast<int>(x.rows()) - 1, static_cast<int>(x.cols()));
  cloud_without_into(x, a, skip, out);
  return out;
}

void cloud_without_into(const PlayerVector& x, const PlayerVector& a, int skip,
                        StateActionCloud& out) {
  const int n = static_cast<int>(x.rows());
  int row = 0;
  for (int j = 0; j < n; ++j) {
    if (j == skip) continue;
    out.x.row(row) = x.row(j);
    out.a.row(row) = a.row(j);
    ++row;
  }
}

StateCloud state_cloud_without(const PlayerVector& x, int skip) {
  const int n = static_cast<int>(x.rows());
  StateCloud out;
  out.x.resize(n - 1, x.cols());
  int row = 0;
  for (int j = 0; j < n; ++j) {
    if (j == skip) continue;
    out.x.row(row++) = x.row(j);
  }
  return out;
}

StateCloud gaussian_state_cloud(Rng& rng, int n, int d, double scale) {
  return StateCloud(rng.normal_matrix(n, d, scale));
}

StateActionCloud gaussian_cloud(Rng& rng, int n, int d, double scale) {
  StateActionCloud out;
  out.x = rng.normal_matrix(n, d, scale);
  out.a = rng.normal_matrix(n, d, scale);
  return out;
}

}  // namespace mfgc
