#include "dgsmlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace dgsmlab {

namespace {

void check_pair(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() == 0) throw InvalidArgument("metric: vectors must be non-empty and equal length");
}

std::vector<Eigen::Index> order_desc(const Vector& v) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return v[a] > v[b]; });
  return idx;
}

double dcg(const std::vector<Eigen::Index>& order, const Vector& gains) {
  double total = 0.0;
  for (std::size_t j = 0; j < order.size(); ++j) total += gains[order[j]] / std::log2(static_cast<double>(j) + 2.0);
  return total;
}

}  // namespace

double rmse(const Vector& estimate, const Vector& truth) {
  check_pair(estimate, truth);
  return std::sqrt((estimate - truth).squaredNorm() / static_cast<double>(truth.size()));
}

double ndcg(const Vector& estimate, const Vector& truth) {
  check_pair(estimate, truth);
  const double ideal = dcg(order_desc(truth), truth);
  if (ideal == 0.0) return 1.0;
  const double score = dcg(order_desc(estimate), truth) / ideal;
  return std::clamp(score, 0.0, 1.0);
}

}  // namespace dgsmlab
