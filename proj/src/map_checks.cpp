#include "sympfold/map_checks.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "sympfold/json_util.hpp"
#include "sympfold/spatial_grid.hpp"

namespace sympfold {

nlohmann::json SymplecticReport::to_json() const {
  return {{"check", "symplectic"}, {"tolerance", tolerance}, {"max_residual", max_residual},
          {"points", points},      {"worst_index", worst_index}, {"pass", pass}};
}

void SymplecticReport::write_histogram_csv(std::ostream& out, int bins) const {
  out << "bin_lo,bin_hi,count\n";
  if (residuals.empty() || bins < 1) return;
  constexpr double floor_value = 1e-18;
  double lo = std::log10(floor_value), hi = lo;
  for (double r : residuals) hi = std::max(hi, std::log10(std::max(r, floor_value)));
  hi += 1e-9;
  std::vector<std::size_t> counts(bins, 0);
  for (double r : residuals) {
    const double v = std::log10(std::max(r, floor_value));
    auto b = static_cast<int>((v - lo) / (hi - lo) * bins);
    counts[std::clamp(b, 0, bins - 1)]++;
  }
  for (int b = 0; b < bins; ++b) {
    out << std::pow(10.0, lo + (hi - lo) * b / bins) << ',' << std::pow(10.0, lo + (hi - lo) * (b + 1) / bins) << ','
        << counts[b] << '\n';
  }
}

SymplecticReport check_symplectic(const MapExpr& map, const SampleCloud& cloud, double tol) {
  SymplecticReport r;
  r.tolerance = tol;
  r.points = cloud.size();
  r.residuals.assign(cloud.size(), 0.0);
  parallel_for(cloud.size(), [&](std::size_t i) {
    r.residuals[i] = symplectic_residual(map.jacobian(cloud.points[i]));
  });
  for (std::size_t i = 0; i < r.residuals.size(); ++i) {
    // NaN counts as a failure, so compare with !(a <= b).
    if (!(r.residuals[i] <= r.max_residual)) {
      r.max_residual = r.residuals[i];
      r.worst_index = i;
    }
  }
  r.pass = r.max_residual <= tol;
  return r;
}

nlohmann::json InjectivityReport::to_json() const {
  nlohmann::json j{{"check", "injective"},   {"min_preimage_sep", min_preimage_sep},
                   {"input_separation", input_separation}, {"margin", margin},
                   {"points", points},       {"pass", pass}};
  if (witness) {
    j["witness"] = {{"first_source", vec_to_json(witness->first_source)},
                    {"second_source", vec_to_json(witness->second_source)},
                    {"first_image", vec_to_json(witness->first_image)},
                    {"second_image", vec_to_json(witness->second_image)}};
  }
  return j;
}

SampleCloud map_cloud(const MapExpr& map, const SampleCloud& cloud) {
  SampleCloud out = cloud;
  out.dim = map.dim();
  parallel_for(cloud.size(), [&](std::size_t i) { out.points[i] = map.evaluate(cloud.points[i]); });
  return out;
}

InjectivityReport check_injective(const MapExpr& map, const SampleCloud& cloud, double min_preimage_sep,
                                  double collision_tol) {
  InjectivityReport r;
  r.min_preimage_sep = min_preimage_sep;
  const auto kept = thin_points(cloud.points, min_preimage_sep);
  const SampleCloud sources = cloud.subset(kept);
  r.points = sources.size();
  if (sources.size() < 2) {
    r.margin = r.input_separation = std::numeric_limits<double>::infinity();
    return r;
  }
  r.input_separation = min_pairwise_distance(sources.points).distance;
  const SampleCloud images = map_cloud(map, sources);
  const auto closest = min_pairwise_distance(images.points);
  r.margin = closest.distance;
  r.pass = r.margin > collision_tol;
  if (!r.pass) {
    r.witness = CollisionWitness{sources.points[closest.first], sources.points[closest.second],
                                 images.points[closest.first], images.points[closest.second]};
  }
  return r;
}

nlohmann::json GlueReport::to_json() const {
  return {{"check", "glue"},
          {"tolerance", tolerance},
          {"value_discrepancy", value_discrepancy},
          {"jacobian_discrepancy", jacobian_discrepancy},
          {"points", points},
          {"outside_band", outside_band},
          {"pass", pass}};
}

GlueReport glue_check(const MapExpr& glue, const SampleCloud& band_cloud, double tol) {
  const auto* g = std::get_if<node::Glue>(&glue.node().value);
  if (!g) throw Error(ErrorCode::Precondition, "glue_check needs a glue node");
  GlueReport r;
  r.tolerance = tol;
  r.points = band_cloud.size();
  std::vector<double> dv(band_cloud.size(), 0.0), dj(band_cloud.size(), 0.0);
  std::vector<char> outside(band_cloud.size(), 0);
  parallel_for(band_cloud.size(), [&](std::size_t i) {
    const Vec& x = band_cloud.points[i];
    outside[i] = !g->band.contains(x);
    Mat jp, jm;
    const Vec yp = g->plus.evaluate_with_jacobian(x, jp);
    const Vec ym = g->minus.evaluate_with_jacobian(x, jm);
    dv[i] = (yp - ym).cwiseAbs().maxCoeff();
    dj[i] = (jp - jm).cwiseAbs().maxCoeff();
  });
  for (std::size_t i = 0; i < dv.size(); ++i) {
    r.value_discrepancy = std::max(r.value_discrepancy, dv[i]);
    r.jacobian_discrepancy = std::max(r.jacobian_discrepancy, dj[i]);
    r.outside_band += outside[i];
  }
  r.pass = r.value_discrepancy <= tol && r.jacobian_discrepancy <= tol && r.outside_band == 0;
  return r;
}

}  // namespace sympfold
