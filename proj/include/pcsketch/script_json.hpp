#pragma once

#include <json.hpp>

#include "pcsketch/script.hpp"

namespace pcsketch {

nlohmann::json tool_to_json(const ToolInvocation& inv);
/// Throws UnknownTool / InvalidParams.
ToolInvocation tool_from_json(const nlohmann::json& record);

nlohmann::json pose_to_json(const PoseRecord& pose);
PoseRecord pose_from_json(const nlohmann::json& j);

}  // namespace pcsketch
