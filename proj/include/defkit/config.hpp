#pragma once

// JSON schemas for configurations, run reports and manifests.
//
// Every top-level document carries "version": 1 and a "kind" tag. Unknown
// keys are rejected at every nesting level; omitted keys take the library
// defaults. Writers always emit every key so files are self-describing.

#include "defkit/estimate.hpp"
#include "defkit/metrics.hpp"
#include "defkit/refine.hpp"
#include "defkit/regularize.hpp"
#include "defkit/simulate.hpp"

#include <json.hpp>

#include <string>

namespace defkit {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct EmitFlags {
  bool fields = true;
  bool rasters = true;
  bool profiles = true;
  bool report = true;
};

struct PipelineConfig {
  SimulationSpec simulation;
  EstimatorConfig estimator;
  RefinementConfig refinement;
  RegularizerConfig regularizer;
  std::string output_dir;
  EmitFlags emit;

  void validate() const;
};

Json to_json(const SimulationSpec& spec);
Json to_json(const EstimatorConfig& cfg);
Json to_json(const RefinementConfig& cfg);
Json to_json(const RegularizerConfig& cfg);
Json to_json(const PipelineConfig& cfg);
Json to_json(const MetricsReport& report);

SimulationSpec simulation_from_json(const Json& j);
EstimatorConfig estimator_from_json(const Json& j);
RefinementConfig refinement_from_json(const Json& j);
RegularizerConfig regularizer_from_json(const Json& j);
PipelineConfig pipeline_from_json(const Json& j);
MetricsReport report_from_json(const Json& j);

/// Wraps a body with the version and kind tags.
Json tagged(const std::string& kind, const Json& body);

/// Checks the version and kind tags and returns the body without them.
/// Throws ConfigInvalid when the kind is not one of `accepted`.
Json untag(const Json& doc, std::initializer_list<const char*> accepted, std::string* kind = nullptr);

Json parse_json_text(const std::string& text, const std::string& origin);
std::string dump_json(const Json& j);

}  // namespace defkit
