#include "sympfold/cloud.hpp"

#include <ostream>

namespace sympfold {

void SampleCloud::add(Vec point, int chart_index, Vec param) {
  if (point.size() != dim) throw Error(ErrorCode::BadDimension, "cloud point has wrong dimension");
  points.push_back(std::move(point));
  chart.push_back(chart_index);
  params.push_back(std::move(param));
}

SampleCloud SampleCloud::subset(const std::vector<std::size_t>& indices) const {
  SampleCloud out;
  out.dim = dim;
  out.seed = seed;
  out.points.reserve(indices.size());
  for (auto i : indices) out.add(points.at(i), chart.at(i), params.at(i));
  return out;
}

Box SampleCloud::bounds() const {
  if (points.empty()) throw Error(ErrorCode::EmptySet, "bounding box of an empty cloud");
  Vec lo = points.front(), hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return Box(lo, hi);
}

void SampleCloud::write_csv(std::ostream& out) const {
  int pdim = 0;
  for (const auto& y : params) pdim = std::max(pdim, static_cast<int>(y.size()));
  for (int k = 0; k < dim; ++k) out << "x" << k + 1 << ',';
  out << "chart";
  for (int k = 0; k < pdim; ++k) out << ",y" << k + 1;
  out << '\n';
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int k = 0; k < dim; ++k) out << points[i][k] << ',';
    out << chart[i];
    for (int k = 0; k < pdim; ++k) {
      out << ',';
      if (k < params[i].size()) out << params[i][k];
    }
    out << '\n';
  }
  out.precision(old);
}

SampleCloud cloud_from_points(int dim, std::vector<Vec> points) {
  SampleCloud c;
  c.dim = dim;
  for (auto& p : points) c.add(std::move(p), -1, Vec());
  return c;
}

}  // namespace sympfold
