#pragma once

// Batch drivers behind the command-line subcommands. Each writes its
// outputs into a directory and never depends on wall-clock time, thread
// count or anything else outside its configuration.

#include "defkit/config.hpp"
#include "defkit/io.hpp"

#include <optional>
#include <string>
#include <vector>

namespace defkit {

/// Writes I1, I2 (.fld and .pgm), df_gt.fld and near_fault.fld.
void run_simulate(const SimulationSpec& spec, const std::string& out_dir);

/// Writes df_1.fld .. df_n.fld and, with a ground truth, intermediate_loss.csv.
RefinementTrace run_refine(const Raster& i1, const Raster& i2, const EstimatorConfig& est,
                           const RefinementConfig& ref, const std::string& out_dir,
                           const std::optional<DisplacementField>& gt = std::nullopt);

void write_intermediate_loss_csv(std::ostream& out, const IntermediateLoss& loss, double gamma);

/// A profile line across the first fault (or through the center when there
/// is none), shortened until every sample lies inside the raster.
ProfileLine default_profile_line(const SimulationSpec& spec);

struct PipelineResult {
  std::vector<MetricsReport> reports;  // raw estimate, refined, regularized
  IntermediateLoss loss;
  SolveReport solve;
  std::vector<std::string> files;  // relative to the output directory, sorted
};

/// simulate -> estimate/refine -> regularize -> evaluate, plus manifest.json.
PipelineResult run_pipeline(const PipelineConfig& cfg, const std::string& out_dir);

/// FNV-1a 64-bit digest, used in manifests.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace defkit
