#pragma once

#include "rgam/cv.hpp"
#include "rgam/rgam.hpp"

#include <filesystem>
#include <json.hpp>
#include <string>

namespace rgam {

inline constexpr int kModelSchemaVersion = 1;
inline constexpr const char* kModelFormat = "rgam-model";
inline constexpr const char* kToolVersion = "0.3.0";

nlohmann::json to_json(const LambdaPath& path);
nlohmann::json to_json(const FittedLinearModel& model);
nlohmann::json to_json(const SmoothingSplineFit& fit);
nlohmann::json to_json(const RgamConfig& config);
nlohmann::json to_json(const RgamModel& model);
nlohmann::json to_json(const CvResult& result);

LambdaPath lambda_path_from_json(const nlohmann::json& j);
FittedLinearModel linear_model_from_json(const nlohmann::json& j);
SmoothingSplineFit spline_from_json(const nlohmann::json& j);
RgamConfig config_from_json(const nlohmann::json& j);
/// Throws DataError when the format tag or schema version does not match.
RgamModel model_from_json(const nlohmann::json& j);
CvResult cv_result_from_json(const nlohmann::json& j);

/// Indented JSON text; doubles are written in shortest round-trip form.
std::string dump_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const RgamModel& model);
RgamModel load_model(const std::filesystem::path& path);

} // namespace rgam
