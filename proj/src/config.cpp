#include "defkit/config.hpp"

#include <set>

namespace defkit {

namespace {

// Reads keys off a JSON object and rejects anything it was not asked for.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) fail("expected an object");
  }

  template <typename T>
  T get(const char* key, T fallback) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return fallback;
    try {
      return it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(std::string("bad value for '") + key + "'");
    }
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail("unknown key '" + it.key() + "'");
    }
  }

  [[noreturn]] void fail(const std::string& msg) const { throw Error(ErrorKind::ConfigInvalid, context_ + ": " + msg); }

  const std::string& context() const { return context_; }

 private:
  const Json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

const char* to_string(SubpixelMethod m) { return m == SubpixelMethod::QuadraticFit3x3 ? "quadratic_fit_3x3" : "none"; }

SubpixelMethod parse_subpixel(const std::string& s) {
  if (s == "quadratic_fit_3x3") return SubpixelMethod::QuadraticFit3x3;
  if (s == "none") return SubpixelMethod::None;
  throw Error(ErrorKind::ConfigInvalid, "unknown subpixel method '" + s + "'");
}

Json fault_to_json(const FaultSpec& f) {
  return Json{{"x", f.x},         {"y", f.y}, {"angle", f.angle}, {"slip", f.slip}, {"locking_depth", f.locking_depth},
              {"sense", to_string(f.sense)}};
}

FaultSpec fault_from_json(const Json& j, const std::string& ctx) {
  StrictObject o(j, ctx);
  FaultSpec f;
  f.x = o.get("x", f.x);
  f.y = o.get("y", f.y);
  f.angle = o.get("angle", f.angle);
  f.slip = o.get("slip", f.slip);
  f.locking_depth = o.get("locking_depth", f.locking_depth);
  f.sense = parse_slip_sense(o.get<std::string>("sense", to_string(f.sense)));
  o.finish();
  return f;
}

}  // namespace

Json tagged(const std::string& kind, const Json& body) {
  Json out{{"version", kSchemaVersion}, {"kind", kind}};
  for (auto it = body.begin(); it != body.end(); ++it) out[it.key()] = it.value();
  return out;
}

Json untag(const Json& doc, std::initializer_list<const char*> accepted, std::string* kind) {
  if (!doc.is_object()) throw Error(ErrorKind::ConfigInvalid, "configuration must be a JSON object");
  const auto v = doc.find("version");
  if (v == doc.end() || !v->is_number_integer() || v->get<int>() != kSchemaVersion) {
    throw Error(ErrorKind::ConfigInvalid, "configuration needs \"version\": 1");
  }
  const auto k = doc.find("kind");
  if (k == doc.end() || !k->is_string()) throw Error(ErrorKind::ConfigInvalid, "configuration needs a \"kind\" string");
  const std::string name = k->get<std::string>();
  bool ok = false;
  std::string expected;
  for (const char* a : accepted) {
    ok = ok || name == a;
    expected += expected.empty() ? a : std::string(" | ") + a;
  }
  if (!ok) throw Error(ErrorKind::ConfigInvalid, "kind '" + name + "' not accepted here (expected " + expected + ")");
  if (kind) *kind = name;
  Json body = doc;
  body.erase("version");
  body.erase("kind");
  return body;
}

Json to_json(const SimulationSpec& s) {
  Json faults = Json::array();
  for (const auto& f : s.faults) faults.push_back(fault_to_json(f));
  const auto& p = s.perturbations;
  Json j{{"height", s.height},
         {"width", s.width},
         {"faults", faults},
         {"texture", {{"octaves", s.texture.octaves}, {"base_scale", s.texture.base_scale}, {"seed", s.texture.seed}}},
         {"perturbations",
          {{"gaussian_sigma", p.gaussian_sigma},
           {"brightness_gradient", p.brightness_gradient},
           {"patch_changes", p.patch_changes},
           {"patch_size", p.patch_size},
           {"vegetation_blotches", p.vegetation_blotches},
           {"blotch_size", p.blotch_size},
           {"blotch_amplitude", p.blotch_amplitude}}},
         {"near_fault_halfwidth", s.near_fault_halfwidth}};
  j["constant_shift"] = s.constant_shift ? Json::array({s.constant_shift->x(), s.constant_shift->y()}) : Json(nullptr);
  j["expected_bucket"] = s.expected_bucket ? Json(to_string(*s.expected_bucket)) : Json(nullptr);
  return j;
}

SimulationSpec simulation_from_json(const Json& j) {
  StrictObject o(j, "simulation");
  SimulationSpec s;
  s.height = o.get("height", s.height);
  s.width = o.get("width", s.width);
  if (const Json* faults = o.child("faults")) {
    if (!faults->is_array()) o.fail("'faults' must be an array");
    for (std::size_t i = 0; i < faults->size(); ++i) {
      s.faults.push_back(fault_from_json((*faults)[i], "simulation.faults[" + std::to_string(i) + "]"));
    }
  }
  if (const Json* t = o.child("texture")) {
    StrictObject to(*t, "simulation.texture");
    s.texture.octaves = to.get("octaves", s.texture.octaves);
    s.texture.base_scale = to.get("base_scale", s.texture.base_scale);
    s.texture.seed = to.get("seed", s.texture.seed);
    to.finish();
  }
  if (const Json* pj = o.child("perturbations")) {
    StrictObject po(*pj, "simulation.perturbations");
    auto& p = s.perturbations;
    p.gaussian_sigma = po.get("gaussian_sigma", p.gaussian_sigma);
    p.brightness_gradient = po.get("brightness_gradient", p.brightness_gradient);
    p.patch_changes = po.get("patch_changes", p.patch_changes);
    p.patch_size = po.get("patch_size", p.patch_size);
    p.vegetation_blotches = po.get("vegetation_blotches", p.vegetation_blotches);
    p.blotch_size = po.get("blotch_size", p.blotch_size);
    p.blotch_amplitude = po.get("blotch_amplitude", p.blotch_amplitude);
    po.finish();
  }
  s.near_fault_halfwidth = o.get("near_fault_halfwidth", s.near_fault_halfwidth);
  if (const Json* cs = o.child("constant_shift"); cs && !cs->is_null()) {
    if (!cs->is_array() || cs->size() != 2 || !(*cs)[0].is_number() || !(*cs)[1].is_number()) {
      o.fail("'constant_shift' must be [u, v]");
    }
    s.constant_shift = Eigen::Vector2d((*cs)[0].get<double>(), (*cs)[1].get<double>());
  }
  if (const Json* b = o.child("expected_bucket"); b && !b->is_null()) {
    if (!b->is_string()) o.fail("'expected_bucket' must be a string");
    s.expected_bucket = parse_range_bucket(b->get<std::string>());
  }
  o.finish();
  s.validate();
  return s;
}

Json to_json(const EstimatorConfig& c) {
  return Json{{"patch_radius", c.patch_radius},       {"search_radius", c.search_radius},
              {"grid_step", c.grid_step},             {"pyramid_levels", c.pyramid_levels},
              {"min_correlation", c.min_correlation}, {"subpixel", to_string(c.subpixel)}};
}

EstimatorConfig estimator_from_json(const Json& j) {
  StrictObject o(j, "estimator");
  EstimatorConfig c;
  c.patch_radius = o.get("patch_radius", c.patch_radius);
  c.search_radius = o.get("search_radius", c.search_radius);
  c.grid_step = o.get("grid_step", c.grid_step);
  c.pyramid_levels = o.get("pyramid_levels", c.pyramid_levels);
  c.min_correlation = o.get("min_correlation", c.min_correlation);
  c.subpixel = parse_subpixel(o.get<std::string>("subpixel", to_string(c.subpixel)));
  o.finish();
  c.validate();
  return c;
}

Json to_json(const RefinementConfig& c) { return Json{{"n", c.n}, {"gamma", c.gamma}}; }

RefinementConfig refinement_from_json(const Json& j) {
  StrictObject o(j, "refinement");
  RefinementConfig c;
  c.n = o.get("n", c.n);
  c.gamma = o.get("gamma", c.gamma);
  o.finish();
  c.validate();
  return c;
}

Json to_json(const RegularizerConfig& c) {
  return Json{{"penalty", {{"kind", to_string(c.penalty.kind)}, {"epsilon", c.penalty.epsilon}}},
              {"lambda", c.lambda},
              {"k", c.k},
              {"dykstra_iters", c.dykstra_iters},
              {"dykstra_tol", c.dykstra_tol}};
}

RegularizerConfig regularizer_from_json(const Json& j) {
  StrictObject o(j, "regularizer");
  RegularizerConfig c;
  if (const Json* p = o.child("penalty")) {
    StrictObject po(*p, "regularizer.penalty");
    c.penalty.kind = parse_penalty_kind(po.get<std::string>("kind", to_string(c.penalty.kind)));
    c.penalty.epsilon = po.get("epsilon", c.penalty.epsilon);
    po.finish();
  }
  c.lambda = o.get("lambda", c.lambda);
  c.k = o.get("k", c.k);
  c.dykstra_iters = o.get("dykstra_iters", c.dykstra_iters);
  c.dykstra_tol = o.get("dykstra_tol", c.dykstra_tol);
  o.finish();
  c.validate();
  return c;
}

void PipelineConfig::validate() const {
  simulation.validate();
  estimator.validate();
  refinement.validate();
  regularizer.validate();
}

Json to_json(const PipelineConfig& c) {
  return Json{{"simulation", to_json(c.simulation)},
              {"estimator", to_json(c.estimator)},
              {"refinement", to_json(c.refinement)},
              {"regularizer", to_json(c.regularizer)},
              {"output_dir", c.output_dir},
              {"emit",
               {{"fields", c.emit.fields},
                {"rasters", c.emit.rasters},
                {"profiles", c.emit.profiles},
                {"report", c.emit.report}}}};
}

PipelineConfig pipeline_from_json(const Json& j) {
  StrictObject o(j, "pipeline");
  PipelineConfig c;
  if (const Json* s = o.child("simulation")) {
    c.simulation = simulation_from_json(*s);
  } else {
    o.fail("missing 'simulation'");
  }
  if (const Json* e = o.child("estimator")) c.estimator = estimator_from_json(*e);
  if (const Json* r = o.child("refinement")) c.refinement = refinement_from_json(*r);
  if (const Json* r = o.child("regularizer")) c.regularizer = regularizer_from_json(*r);
  c.output_dir = o.get<std::string>("output_dir", "");
  if (const Json* e = o.child("emit")) {
    StrictObject eo(*e, "pipeline.emit");
    c.emit.fields = eo.get("fields", c.emit.fields);
    c.emit.rasters = eo.get("rasters", c.emit.rasters);
    c.emit.profiles = eo.get("profiles", c.emit.profiles);
    c.emit.report = eo.get("report", c.emit.report);
    eo.finish();
  }
  o.finish();
  c.validate();
  return c;
}

Json to_json(const MetricsReport& r) {
  return Json{{"estimator", r.estimator_name},
              {"regularizer", r.regularizer_name},
              {"bucket", to_string(r.bucket)},
              {"epe", r.epe},
              {"smoothness_near_fault", r.smoothness_near_fault},
              {"smoothness_non_fault", r.smoothness_non_fault},
              {"pixels_near_fault", r.pixels_near_fault},
              {"pixels_non_fault", r.pixels_non_fault}};
}

MetricsReport report_from_json(const Json& j) {
  StrictObject o(j, "report");
  MetricsReport r;
  r.estimator_name = o.get<std::string>("estimator", "");
  r.regularizer_name = o.get<std::string>("regularizer", "");
  r.bucket = parse_range_bucket(o.get<std::string>("bucket", "very_small"));
  r.epe = o.get("epe", 0.0);
  r.smoothness_near_fault = o.get("smoothness_near_fault", 0.0);
  r.smoothness_non_fault = o.get("smoothness_non_fault", 0.0);
  r.pixels_near_fault = o.get<Eigen::Index>("pixels_near_fault", 0);
  r.pixels_non_fault = o.get<Eigen::Index>("pixels_non_fault", 0);
  o.finish();
  return r;
}

Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ConfigInvalid, origin + ": " + e.what());
  }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace defkit
