#include "sympfold/json_util.hpp"

#include <sstream>

namespace sympfold {

nlohmann::json vec_to_json(const Vec& v) {
  auto j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Vec vec_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::Parse, "expected a numeric array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

nlohmann::json mat_to_json(const Mat& m) {
  auto j = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) j.push_back(vec_to_json(m.row(r).transpose()));
  return j;
}

Mat mat_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::Parse, "expected a non-empty matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != cols) throw Error(ErrorCode::Parse, "ragged matrix");
    m.row(r) = vec_from_json(j[r]).transpose();
  }
  return m;
}

nlohmann::json box_to_json(const Box& b) { return {{"lo", vec_to_json(b.lo)}, {"hi", vec_to_json(b.hi)}}; }

Box box_from_json(const nlohmann::json& j) { return Box(vec_from_json(j.at("lo")), vec_from_json(j.at("hi"))); }

nlohmann::json rect_to_json(const Rect& r) { return nlohmann::json::array({r.q0, r.q1, r.p0, r.p1}); }

Rect rect_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::Parse, "rectangle must be [q0,q1,p0,p1]");
  Rect r{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!(r.q0 < r.q1 && r.p0 < r.p1)) throw Error(ErrorCode::Parse, "rectangle must be nonempty");
  return r;
}

namespace {
std::vector<double> split_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Parse, "bad number '" + item + "'");
    }
  }
  return out;
}
}  // namespace

Rect rect_from_string(const std::string& text) {
  const auto v = split_numbers(text);
  if (v.size() != 4) throw Error(ErrorCode::Parse, "rectangle needs 4 numbers: q0,q1,p0,p1");
  return rect_from_json(nlohmann::json(v));
}

Box box_from_string(const std::string& text) {
  const auto v = split_numbers(text);
  if (v.size() % 2 != 0) throw Error(ErrorCode::Parse, "box needs lo,hi pairs");
  const auto dim = static_cast<Eigen::Index>(v.size() / 2);
  Vec lo(dim), hi(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    lo[i] = v[2 * i];
    hi[i] = v[2 * i + 1];
  }
  try {
    return Box(lo, hi);
  } catch (const Error& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
}

}  // namespace sympfold
