#include "defkit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

namespace defkit {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

FlowEstimator make_estimator(const EstimatorConfig& cfg) {
  return [cfg](const Raster& a, const Raster& b) { return estimate_flow(a, b, cfg); };
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void run_simulate(const SimulationSpec& spec, const std::string& out_dir) {
  ensure_dir(out_dir);
  const SyntheticPair pair = synthesize_pair(spec);
  write_raster_file(join(out_dir, "I1.fld"), pair.i1);
  write_raster_file(join(out_dir, "I2.fld"), pair.i2);
  write_raster_file(join(out_dir, "I1.pgm"), pair.i1);
  write_raster_file(join(out_dir, "I2.pgm"), pair.i2);
  write_field_file(join(out_dir, "df_gt.fld"), pair.df_gt);
  write_mask_file(join(out_dir, "near_fault.fld"), pair.near_fault);
}

void write_intermediate_loss_csv(std::ostream& out, const IntermediateLoss& loss, double gamma) {
  const auto n = static_cast<int>(loss.per_iteration.size());
  out << "iteration,weight,mean_abs_error\n";
  for (int i = 0; i < n; ++i) {
    out << (i + 1) << ',' << format_g9(std::pow(gamma, n - 1 - i)) << ','
        << format_g9(loss.per_iteration[static_cast<std::size_t>(i)]) << '\n';
  }
  out << "total,," << format_g9(loss.total) << '\n';
}

RefinementTrace run_refine(const Raster& i1, const Raster& i2, const EstimatorConfig& est,
                           const RefinementConfig& ref, const std::string& out_dir,
                           const std::optional<DisplacementField>& gt) {
  ensure_dir(out_dir);
  RefinementTrace trace = iterative_refine(i1, i2, make_estimator(est), ref);
  for (std::size_t i = 0; i < trace.fields.size(); ++i) {
    write_field_file(join(out_dir, "df_" + std::to_string(i + 1) + ".fld"), trace.fields[i]);
  }
  if (gt) {
    std::ostringstream csv;
    write_intermediate_loss_csv(csv, intermediate_loss(trace, *gt, ref.gamma), ref.gamma);
    write_text_file(join(out_dir, "intermediate_loss.csv"), csv.str());
  }
  return trace;
}

ProfileLine default_profile_line(const SimulationSpec& spec) {
  const double cx = 0.5 * (spec.width - 1);
  const double cy = 0.5 * (spec.height - 1);
  ProfileLine line{cx, cy, 0.0, 0.0};
  if (!spec.faults.empty()) {
    const FaultSpec& f = spec.faults.front();
    // Foot of the perpendicular from the image center onto the trace.
    const double along = (cx - f.x) * std::cos(f.angle) + (cy - f.y) * std::sin(f.angle);
    line.x = f.x + along * std::cos(f.angle);
    line.y = f.y + along * std::sin(f.angle);
    line.angle = f.angle + 0.5 * 3.14159265358979323846;
  }
  double length = 0.8 * std::min(spec.width - 1, spec.height - 1);
  auto inside = [&](double l) {
    for (double t : {-0.5, 0.5}) {
      const double px = line.x + t * l * std::cos(line.angle);
      const double py = line.y + t * l * std::sin(line.angle);
      if (px < 0.0 || py < 0.0 || px > spec.width - 1 || py > spec.height - 1) return false;
    }
    return true;
  };
  while (length > 1.0 && !inside(length)) length *= 0.5;
  line.length = inside(length) ? length : 0.0;
  return line;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  PipelineResult result;
  std::vector<std::string> files;
  auto path = [&](const std::string& name) {
    files.push_back(name);
    return join(out_dir, name);
  };

  const SyntheticPair pair = synthesize_pair(cfg.simulation);
  if (cfg.emit.rasters) {
    write_raster_file(path("I1.fld"), pair.i1);
    write_raster_file(path("I2.fld"), pair.i2);
    write_raster_file(path("I1.pgm"), pair.i1);
    write_raster_file(path("I2.pgm"), pair.i2);
  }
  if (cfg.emit.fields) {
    write_field_file(path("df_gt.fld"), pair.df_gt);
    write_mask_file(path("near_fault.fld"), pair.near_fault);
  }

  const RefinementTrace trace = iterative_refine(pair.i1, pair.i2, make_estimator(cfg.estimator), cfg.refinement);
  const DisplacementField& raw = trace.fields.front();
  const DisplacementField& refined = trace.fields.back();
  const DisplacementField regularized = regularize_field(refined, cfg.regularizer, &result.solve);
  result.loss = intermediate_loss(trace, pair.df_gt, cfg.refinement.gamma);

  if (cfg.emit.fields) {
    for (std::size_t i = 0; i < trace.fields.size(); ++i) {
      write_field_file(path("df_" + std::to_string(i + 1) + ".fld"), trace.fields[i]);
    }
    write_field_file(path("df_regularized.fld"), regularized);
  }

  const std::string refined_name = "zncc_pyramid+refine" + std::to_string(cfg.refinement.n);
  const std::string reg_name = to_string(cfg.regularizer.penalty.kind);
  result.reports.push_back(evaluate_run(raw, pair.df_gt, pair.near_fault, "zncc_pyramid", "none"));
  result.reports.push_back(evaluate_run(refined, pair.df_gt, pair.near_fault, refined_name, "none"));
  result.reports.push_back(evaluate_run(regularized, pair.df_gt, pair.near_fault, refined_name, reg_name));

  if (cfg.emit.report) {
    Json reports = Json::array();
    for (const auto& r : result.reports) reports.push_back(to_json(r));
    Json loss{{"gamma", cfg.refinement.gamma}, {"per_iteration", result.loss.per_iteration}, {"total", result.loss.total}};
    Json body{{"near_fault_halfwidth", cfg.simulation.near_fault_halfwidth},
              {"reports", reports},
              {"intermediate_loss", loss}};
    write_text_file(path("report.json"), dump_json(tagged("report", body)));
    std::ostringstream csv;
    write_report_csv(csv, result.reports);
    write_text_file(path("report.csv"), csv.str());
    std::ostringstream loss_csv;
    write_intermediate_loss_csv(loss_csv, result.loss, cfg.refinement.gamma);
    write_text_file(path("intermediate_loss.csv"), loss_csv.str());
  }

  if (cfg.emit.profiles) {
    const ProfileLine line = default_profile_line(cfg.simulation);
    const int samples = std::max(2, static_cast<int>(std::lround(line.length)) + 1);
    const std::pair<const char*, const DisplacementField*> sources[] = {
        {"profile_gt.csv", &pair.df_gt}, {"profile_raw.csv", &raw}, {"profile_regularized.csv", &regularized}};
    for (const auto& [name, df] : sources) {
      std::ostringstream csv;
      write_profile_csv(csv, extract_profile(*df, line, samples));
      write_text_file(path(name), csv.str());
    }
  }

  std::sort(files.begin(), files.end());
  Json outputs = Json::array();
  for (const auto& f : files) {
    const std::string bytes = read_text_file(join(out_dir, f));
    outputs.push_back(Json{{"file", f}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
  }
  PipelineConfig resolved = cfg;
  resolved.output_dir = "";
  Json manifest{{"tool", "defkit"},
                {"tool_version", DEFKIT_VERSION},
                {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                      std::to_string(EIGEN_MINOR_VERSION)},
                {"seed", cfg.simulation.texture.seed},
                {"config", tagged("pipeline", to_json(resolved))},
                {"regularizer_solve",
                 {{"solves", result.solve.solves},
                  {"total_iterations", result.solve.total_iterations},
                  {"all_converged", result.solve.all_converged},
                  {"max_final_change", result.solve.max_final_change}}},
                {"outputs", outputs}};
  write_text_file(join(out_dir, "manifest.json"), dump_json(tagged("manifest", manifest)));
  files.push_back("manifest.json");
  std::sort(files.begin(), files.end());
  result.files = files;
  return result;
}

}  // namespace defkit
