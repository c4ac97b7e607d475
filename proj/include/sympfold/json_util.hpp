#pragma once

#include <json.hpp>

#include "sympfold/common.hpp"

namespace sympfold {

nlohmann::json vec_to_json(const Vec& v);
Vec vec_from_json(const nlohmann::json& j);
nlohmann::json mat_to_json(const Mat& m);  // row-major list of rows
Mat mat_from_json(const nlohmann::json& j);
nlohmann::json box_to_json(const Box& b);
Box box_from_json(const nlohmann::json& j);
nlohmann::json rect_to_json(const Rect& r);
Rect rect_from_json(const nlohmann::json& j);
/// Parses "q0,q1,p0,p1".
Rect rect_from_string(const std::string& text);
/// Parses "lo1,hi1,lo2,hi2,..." into a box; empty text gives a 0-dimensional box.
Box box_from_string(const std::string& text);

}  // namespace sympfold
