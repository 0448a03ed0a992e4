// defkit: batch driver for displacement-field simulation, estimation,
// refinement, regularization and evaluation.
//
// Exit codes: 0 success, 2 validation error, 3 I/O error.

#include "defkit/parallel.hpp"
#include "defkit/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using namespace defkit;

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

struct GlobalOptions {
  unsigned threads = 1;
  std::optional<std::uint64_t> seed_override;
  bool quiet = false;
};

bool is_io_kind(ErrorKind k) {
  switch (k) {
    case ErrorKind::Io:
    case ErrorKind::BadMagic:
    case ErrorKind::Truncated:
    case ErrorKind::TrailingData:
    case ErrorKind::DimensionOverflow:
    case ErrorKind::ComponentMismatch:
      return true;
    default:
      return false;
  }
}

Json load_config(const std::string& path) { return parse_json_text(read_text_file(path), path); }

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

SimulationSpec load_simulation(const std::string& path, const GlobalOptions& g) {
  std::string kind;
  const Json body = untag(load_config(path), {"simulation", "pipeline"}, &kind);
  SimulationSpec spec = kind == "pipeline" ? pipeline_from_json(body).simulation : simulation_from_json(body);
  if (g.seed_override) spec.texture.seed = *g.seed_override;
  return spec;
}

EstimatorConfig load_estimator(const std::string& path) {
  if (path.empty()) return EstimatorConfig{};
  std::string kind;
  const Json body = untag(load_config(path), {"estimator", "pipeline"}, &kind);
  return kind == "pipeline" ? pipeline_from_json(body).estimator : estimator_from_json(body);
}

std::pair<EstimatorConfig, RefinementConfig> load_refine(const std::string& path) {
  if (path.empty()) return {EstimatorConfig{}, RefinementConfig{}};
  std::string kind;
  const Json body = untag(load_config(path), {"refine", "pipeline"}, &kind);
  if (kind == "pipeline") {
    const PipelineConfig p = pipeline_from_json(body);
    return {p.estimator, p.refinement};
  }
  EstimatorConfig est;
  RefinementConfig ref;
  for (auto it = body.begin(); it != body.end(); ++it) {
    if (it.key() == "estimator") {
      est = estimator_from_json(it.value());
    } else if (it.key() == "refinement") {
      ref = refinement_from_json(it.value());
    } else {
      throw Error(ErrorKind::ConfigInvalid, "refine: unknown key '" + it.key() + "'");
    }
  }
  return {est, ref};
}

RegularizerConfig load_regularizer(const std::string& path) {
  if (path.empty()) return RegularizerConfig{};
  std::string kind;
  const Json body = untag(load_config(path), {"regularizer", "pipeline"}, &kind);
  return kind == "pipeline" ? pipeline_from_json(body).regularizer : regularizer_from_json(body);
}

void say(const GlobalOptions& g, const std::string& line) {
  if (!g.quiet) std::cout << line << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"defkit: dense ground-displacement estimation and regularization toolkit"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed_value = 0;
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  auto* seed_opt = app.add_option("--seed-override", seed_value, "Replace the simulation seed");
  app.add_flag("--quiet", g.quiet, "Suppress progress output");

  std::string config;
  std::string out;

  auto* simulate = app.add_subcommand("simulate", "Synthesize an image pair with ground truth");
  simulate->add_option("--config", config, "Simulation or pipeline JSON")->required();
  simulate->add_option("--out", out, "Output directory")->required();

  std::string i1_path;
  std::string i2_path;
  auto* estimate = app.add_subcommand("estimate", "Single-pass ZNCC pyramid estimate");
  estimate->add_option("i1", i1_path, "First image (.fld or .pgm)")->required();
  estimate->add_option("i2", i2_path, "Second image (.fld or .pgm)")->required();
  estimate->add_option("--config", config, "Estimator or pipeline JSON");
  estimate->add_option("--out", out, "Output field (.fld)")->required();

  std::string gt_path;
  auto* refine = app.add_subcommand("refine", "Iterative refinement with explicit warping");
  refine->add_option("i1", i1_path, "First image")->required();
  refine->add_option("i2", i2_path, "Second image")->required();
  refine->add_option("--config", config, "Refine or pipeline JSON");
  refine->add_option("--gt", gt_path, "Ground-truth field for the intermediate-loss table");
  refine->add_option("--out", out, "Output directory")->required();

  std::string in_path;
  auto* regularize = app.add_subcommand("regularize", "A-posteriori regularization of a field");
  regularize->add_option("field", in_path, "Input field (.fld)")->required();
  regularize->add_option("--config", config, "Regularizer or pipeline JSON");
  regularize->add_option("--out", out, "Output field (.fld)")->required();

  std::string mask_path;
  std::string est_name = "estimate";
  std::string reg_name = "none";
  auto* evaluate = app.add_subcommand("evaluate", "EPE and smoothness report");
  evaluate->add_option("est", in_path, "Estimated field")->required();
  evaluate->add_option("gt", gt_path, "Ground-truth field")->required();
  evaluate->add_option("mask", mask_path, "Near-fault mask")->required();
  evaluate->add_option("--out", out, "Report path (.json or .csv)")->required();
  evaluate->add_option("--estimator-name", est_name);
  evaluate->add_option("--regularizer-name", reg_name);

  ProfileLine line;
  int samples = 101;
  auto* profile = app.add_subcommand("profile", "Sample a field along a line");
  profile->add_option("field", in_path, "Field (.fld)")->required();
  profile->add_option("--x", line.x, "Line center column")->required();
  profile->add_option("--y", line.y, "Line center row")->required();
  profile->add_option("--angle", line.angle, "Line direction (radians)")->required();
  profile->add_option("--length", line.length, "Line length (pixels)")->required();
  profile->add_option("--samples", samples, "Number of samples")->capture_default_str();
  profile->add_option("--out", out, "Output CSV")->required();

  auto* pipeline = app.add_subcommand("pipeline", "simulate -> estimate -> refine -> regularize -> evaluate");
  pipeline->add_option("--config", config, "Pipeline JSON")->required();
  pipeline->add_option("--out", out, "Output directory (overrides output_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  if (*seed_opt) g.seed_override = seed_value;
  set_thread_count(g.threads);

  try {
    if (simulate->parsed()) {
      run_simulate(load_simulation(config, g), out);
      say(g, "simulate: wrote " + out);
    } else if (estimate->parsed()) {
      const EstimatorConfig cfg = load_estimator(config);
      const DisplacementField df = estimate_flow(read_raster_file(i1_path), read_raster_file(i2_path), cfg);
      write_field_file(out, df);
      say(g, "estimate: wrote " + out);
    } else if (refine->parsed()) {
      const auto [est, ref] = load_refine(config);
      std::optional<DisplacementField> gt;
      if (!gt_path.empty()) gt = read_field_file(gt_path);
      run_refine(read_raster_file(i1_path), read_raster_file(i2_path), est, ref, out, gt);
      say(g, "refine: wrote " + std::to_string(ref.n) + " fields to " + out);
    } else if (regularize->parsed()) {
      const RegularizerConfig cfg = load_regularizer(config);
      SolveReport report;
      write_field_file(out, regularize_field(read_field_file(in_path), cfg, &report));
      say(g, "regularize: wrote " + out + (report.all_converged ? "" : " (solver hit its iteration cap)"));
    } else if (evaluate->parsed()) {
      const MetricsReport r =
          evaluate_run(read_field_file(in_path), read_field_file(gt_path), read_mask_file(mask_path), est_name, reg_name);
      if (ends_with(out, ".csv")) {
        std::ostringstream csv;
        write_report_csv(csv, {r});
        write_text_file(out, csv.str());
      } else {
        write_text_file(out, dump_json(tagged("report", to_json(r))));
      }
      say(g, "evaluate: epe " + format_g9(r.epe) + ", smoothness near " + format_g9(r.smoothness_near_fault) +
                 " / non " + format_g9(r.smoothness_non_fault));
    } else if (profile->parsed()) {
      std::ostringstream csv;
      write_profile_csv(csv, extract_profile(read_field_file(in_path), line, samples));
      write_text_file(out, csv.str());
      say(g, "profile: wrote " + out);
    } else if (pipeline->parsed()) {
      const Json body = untag(load_config(config), {"pipeline"});
      PipelineConfig cfg = pipeline_from_json(body);
      if (g.seed_override) cfg.simulation.texture.seed = *g.seed_override;
      const std::string dir = !out.empty() ? out : cfg.output_dir;
      if (dir.empty()) throw Error(ErrorKind::ConfigInvalid, "pipeline: no output directory (use --out)");
      const PipelineResult res = run_pipeline(cfg, dir);
      for (const auto& r : res.reports) {
        say(g, r.estimator_name + " / " + r.regularizer_name + ": epe " + format_g9(r.epe) + ", smoothness near " +
                   format_g9(r.smoothness_near_fault) + " / non " + format_g9(r.smoothness_non_fault));
      }
    }
  } catch (const Error& e) {
    std::cerr << "defkit: " << e.what() << '\n';
    return is_io_kind(e.kind()) ? kExitIo : kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "defkit: Io: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "defkit: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
