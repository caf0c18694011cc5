#pragma once

// nlohmann::json conversions for the public configuration and result types.

#include <nlohmann/json.hpp>

#include "sroc/detectors.hpp"
#include "sroc/metrics.hpp"
#include "sroc/refine.hpp"

namespace sroc {

// {"kind": "patchcore", "k": 5, "nlist": null, "nprobe": null, "seed": 0}
void to_json(nlohmann::json& j, const DetectorConfig& config);
void from_json(const nlohmann::json& j, DetectorConfig& config);

void to_json(nlohmann::json& j, const Prf& prf);

// {"kept": [...], "removed": [...], "scores": {id: score}, "prf": {...} | null}
void to_json(nlohmann::json& j, const RefinementOutcome& outcome);

}  // namespace sroc
