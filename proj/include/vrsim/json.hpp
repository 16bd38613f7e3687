#pragma once

#include <string>

#include <json.hpp>

#include "vrsim/env.hpp"
#include "vrsim/qoe.hpp"

namespace vrsim {

using Json = nlohmann::json;

/// Compact JSON with keys in byte order and shortest round-trip doubles.
/// Throws std::domain_error for non-finite numbers.
std::string canonical_dump(const Json& value);

Json to_json(const EpisodeMetrics& metrics);
EpisodeMetrics metrics_from_json(const Json& j);
Json to_json(const ObsLayout& layout);
Json to_json(const ResolutionLadder& ladder);
Json to_json(const SuReward& reward);
Json to_json(const RsReward& reward);

}  // namespace vrsim
