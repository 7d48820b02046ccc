#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "parquetry/export.hpp"
#include "parquetry/match.hpp"
#include "parquetry/morph.hpp"
#include "parquetry/segment.hpp"

namespace parquetry {

using Json = nlohmann::json;

Json to_json(const Shape& s);
Shape shape_from_json(const Json& j);

Json to_json(const Segmentation& s);
Segmentation segmentation_from_json(const Json& j);

Json to_json(const PatchAssignment& a);
PatchAssignment assignment_from_json(const Json& j);

Json to_json(const ReconstructionResult& r);
ReconstructionResult result_from_json(const Json& j);

Json to_json(const MorphGrid& g);
MorphGrid grid_from_json(const Json& j);

Json to_json(const CutPlan& p);

// Run-length encoded as [value, count] pairs in raster order.
Json to_json(const LabelMap& m);
LabelMap label_map_from_json(const Json& j);

Json to_json(const CubicBezier& c);
CubicBezier bezier_from_json(const Json& j);

// Stable formatting: two-space indent and a trailing newline.
std::string dump(const Json& j);
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

std::string base64_encode(const std::vector<unsigned char>& bytes);
std::vector<unsigned char> base64_decode(const std::string& text);

}  // namespace parquetry
