#include "sympfold/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sympfold {

nlohmann::json Snapshot::to_json() const {
  return {{"name", name}, {"points", points}, {"outlines", outlines}};
}

std::vector<Point2> rect_outline(const Rect& r) { return {{r.q0, r.p0}, {r.q1, r.p0}, {r.q1, r.p1}, {r.q0, r.p1}}; }

std::vector<Point2> first_factor(const std::vector<Vec>& points) {
  std::vector<Point2> out;
  out.reserve(points.size());
  for (const auto& x : points) out.push_back({x[0], x[1]});
  return out;
}

std::string render_svg(const Snapshot& snapshot, int pixels) {
  double lo_x = INFINITY, lo_y = INFINITY, hi_x = -INFINITY, hi_y = -INFINITY;
  auto grow = [&](const Point2& p) {
    lo_x = std::min(lo_x, p[0]);
    hi_x = std::max(hi_x, p[0]);
    lo_y = std::min(lo_y, p[1]);
    hi_y = std::max(hi_y, p[1]);
  };
  for (const auto& p : snapshot.points) grow(p);
  for (const auto& o : snapshot.outlines)
    for (const auto& p : o) grow(p);
  if (!std::isfinite(lo_x)) lo_x = lo_y = 0, hi_x = hi_y = 1;
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-12});
  const double pad = 0.05 * span;
  const double scale = pixels / (span + 2 * pad);
  auto sx = [&](double x) { return (x - lo_x + pad) * scale; };
  auto sy = [&](double y) { return (hi_y + pad - y) * scale; };  // p axis points up

  std::ostringstream out;
  out.precision(6);
  const double w = (hi_x - lo_x + 2 * pad) * scale, h = (hi_y - lo_y + 2 * pad) * scale;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
      << ' ' << h << "\">\n";
  out << "<title>" << snapshot.name << "</title>\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& o : snapshot.outlines) {
    if (o.empty()) continue;
    out << "<path fill=\"none\" stroke=\"#555\" stroke-width=\"1\" d=\"";
    for (std::size_t i = 0; i < o.size(); ++i) out << (i ? " L" : "M") << sx(o[i][0]) << ',' << sy(o[i][1]);
    out << " Z\"/>\n";
  }
  out << "<g fill=\"#c0392b\">\n";
  for (const auto& p : snapshot.points) out << "<circle cx=\"" << sx(p[0]) << "\" cy=\"" << sy(p[1]) << "\" r=\"1.2\"/>\n";
  out << "</g>\n</svg>\n";
  return out.str();
}

void write_svg(const std::string& path, const Snapshot& snapshot, int pixels) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::Precondition, "cannot write " + path);
  f << render_svg(snapshot, pixels);
}

}  // namespace sympfold
