#include "bornholo/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace bornholo {

using nlohmann::json;

namespace {

// Walks a JSON object, tracking the dotted path for diagnostics and rejecting
// keys that no reader claimed.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "document" : path_, "expected an object");
  }

  /// Call after all reads; any key not consumed is rejected.
  void done() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) fail(join(key), "unknown key");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    out = get<T>(key);
  }

  template <class T>
  void read(const std::string& key, std::optional<T>& out) {
    if (!has(key)) return;
    out = get<T>(key);
  }

  template <class T>
  T get(const std::string& key) {
    seen_.insert(key);
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(join(key), "wrong type");
    }
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class E>
E parse_enum(const std::string& where, const std::string& value,
             std::initializer_list<std::pair<const char*, E>> options) {
  std::string names;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    names += names.empty() ? name : std::string(", ") + name;
  }
  Section::fail(where, "expected one of " + names + ", got \"" + value + "\"");
}

Method parse_method(const std::string& where, const std::string& v) {
  return parse_enum<Method>(where, v, {{"born", Method::born}, {"bpm", Method::bpm}});
}

void require(bool ok, const std::string& where, const std::string& what) {
  if (!ok) Section::fail(where, what);
}

void read_grid(Section& root, GridParams& g) {
  if (!root.has("grid")) return;
  Section s(root.raw("grid"), "grid");
  s.read("nx", g.nx);
  s.read("ny", g.ny);
  s.read("nz", g.nz);
  s.read("dx", g.dx);
  s.read("dy", g.dy);
  s.read("dz_voxel", g.dz_voxel);
  s.read("slice_spacing", g.slice_spacing);
  s.read("z0", g.z0);
  s.read("lambda_vacuum", g.lambda_vacuum);
  s.read("n_medium", g.n_medium);
  s.read("na", g.na);
  s.done();
}

void read_phantom(Section& root, PhantomConfig& p) {
  if (!root.has("phantom")) return;
  Section s(root.raw("phantom"), "phantom");
  s.read("particle_radius", p.spec.particle_radius);
  s.read("delta_n", p.spec.delta_n);
  if (s.has("target_Rg")) {
    p.spec.target_Rg = s.get<double>("target_Rg");
    p.spec.n_particles.reset();
  }
  if (s.has("n_particles")) {
    p.spec.n_particles = s.get<long>("n_particles");
    p.spec.target_Rg.reset();
  }
  s.read("min_separation", p.spec.min_separation);
  s.read("isolate_adjacent_slices", p.spec.isolate_adjacent_slices);
  s.read("placement_budget", p.spec.placement_budget);
  if (s.has("layout"))
    p.layout = parse_enum<PhantomLayout>(s.join("layout"), s.get<std::string>("layout"),
                                         {{"random", PhantomLayout::random},
                                          {"occluding", PhantomLayout::occluding}});
  s.done();
  require(p.spec.particle_radius > 0, "phantom.particle_radius", "must be positive");
  require(!p.spec.target_Rg || *p.spec.target_Rg > 0, "phantom.target_Rg", "must be positive");
  require(!p.spec.n_particles || *p.spec.n_particles >= 0, "phantom.n_particles", "must be >= 0");
  require(p.spec.placement_budget > 0, "phantom.placement_budget", "must be positive");
}

void read_simulation(Section& root, SimulationConfig& c) {
  if (!root.has("simulation")) return;
  Section s(root.raw("simulation"), "simulation");
  s.read("order_K", c.forward.order_K);
  if (s.has("mode"))
    c.forward.mode = parse_enum<ScatteringMode>(s.join("mode"), s.get<std::string>("mode"),
                                                {{"full", ScatteringMode::full},
                                                 {"forward_only", ScatteringMode::forward_only},
                                                 {"first_born", ScatteringMode::first_born}});
  s.read("self_interference", c.forward.include_self_interference);
  if (s.has("same_slice"))
    c.same_slice = parse_enum<SameSlicePolicy>(s.join("same_slice"), s.get<std::string>("same_slice"),
                                               {{"exclude", SameSlicePolicy::exclude},
                                                {"regularized", SameSlicePolicy::regularized}});
  s.read("noise_snr_db", c.noise_snr_db);
  s.read("save_internal_field", c.save_internal_field);
  s.done();
  require(c.forward.order_K >= 1, "simulation.order_K", "must be >= 1");
}

void read_inversion(Section& root, InversionConfig& c) {
  if (!root.has("inversion")) return;
  Section s(root.raw("inversion"), "inversion");
  if (s.has("method")) c.method = parse_method(s.join("method"), s.get<std::string>("method"));
  SolverConfig& v = c.solver;
  s.read("order_K", v.order_K);
  if (s.has("tau")) c.tau_absolute = s.get<double>("tau");
  s.read("tau_relative", c.tau_relative);
  s.read("max_iters", v.max_iters);
  s.read("tv_inner_iters", v.tv_inner_iters);
  s.read("tv_isotropic", v.tv_isotropic);
  s.read("tv_axial_weight", v.tv_axial_weight);
  s.read("alpha0", v.alpha0);
  s.read("ls_shrink", v.ls_shrink);
  s.read("ls_max_trials", v.ls_max_trials);
  s.read("nonneg", v.nonneg);
  s.read("stop_tol", v.stop_tol);
  s.read("momentum", v.momentum);
  s.read("snapshot_every", c.snapshot_every);
  if (s.has("background"))
    c.background = parse_enum<Background>(s.join("background"), s.get<std::string>("background"),
                                          {{"none", Background::none}, {"mean", Background::mean}});
  s.done();
  require(!c.tau_absolute || *c.tau_absolute >= 0, "inversion.tau", "must be >= 0");
  require(c.tau_relative >= 0, "inversion.tau_relative", "must be >= 0");
  require(c.snapshot_every >= 0, "inversion.snapshot_every", "must be >= 0");
  try {
    SolverConfig check = v;
    check.tau = c.tau_absolute.value_or(0);
    check.validate();
  } catch (const std::invalid_argument& e) {
    Section::fail("inversion", e.what());
  }
}

void read_analysis(Section& root, AnalysisConfig& a) {
  if (!root.has("analysis")) return;
  Section s(root.raw("analysis"), "analysis");
  s.read("threshold_fraction", a.threshold_fraction);
  s.read("min_voxels", a.min_voxels);
  s.read("tol_xy", a.tol_xy);
  s.read("tol_z", a.tol_z);
  s.read("depth_bins", a.depth_bins);
  s.read("png_slices", a.png_slices);
  if (s.has("png_range")) {
    const auto r = s.get<std::vector<double>>("png_range");
    require(r.size() == 2 && r[1] > r[0], "analysis.png_range", "expected [lo, hi] with hi > lo");
    a.png_range = io::PngRange{r[0], r[1], true};
  }
  s.done();
  require(a.threshold_fraction > 0, "analysis.threshold_fraction", "must be positive");
  require(a.tol_xy > 0, "analysis.tol_xy", "must be positive");
  require(!a.tol_z || *a.tol_z > 0, "analysis.tol_z", "must be positive");
  require(a.depth_bins >= 1, "analysis.depth_bins", "must be >= 1");
}

void read_sweep(Section& root, std::optional<SweepConfig>& out) {
  if (!root.has("sweep")) return;
  Section s(root.raw("sweep"), "sweep");
  SweepConfig w = out.value_or(SweepConfig{});
  s.read("delta_n", w.delta_n);
  s.read("target_Rg", w.target_Rg);
  s.read("orders", w.orders);
  if (s.has("methods")) {
    w.methods.clear();
    for (const auto& m : s.get<std::vector<std::string>>("methods"))
      w.methods.push_back(parse_method("sweep.methods", m));
  }
  s.done();
  require(!w.delta_n.empty(), "sweep.delta_n", "must not be empty");
  require(!w.orders.empty(), "sweep.orders", "must not be empty");
  require(!w.methods.empty(), "sweep.methods", "must not be empty");
  for (int k : w.orders) require(k >= 1, "sweep.orders", "orders must be >= 1");
  for (double r : w.target_Rg) require(r > 0, "sweep.target_Rg", "values must be positive");
  out = w;
}

std::optional<std::filesystem::path> read_path(Section& s, const std::string& key) {
  if (!s.has(key)) return std::nullopt;
  return std::filesystem::path(s.get<std::string>(key));
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

const char* dtype_name(io::DType t) {
  switch (t) {
    case io::DType::f32: return "f32";
    case io::DType::f64: return "f64";
    case io::DType::c64: return "c64";
    case io::DType::c128: return "c128";
  }
  return "?";
}

GridParams base_grid(long n, long nz, double spacing) {
  return {n, n, nz, 172.5e-9, 172.5e-9, 172.5e-9, spacing, 5e-6, 630e-9, 1.33, 0.4};
}

} // namespace

std::string to_string(Method m) { return m == Method::born ? "born" : "bpm"; }

std::vector<std::string> preset_names() { return {"fig3", "fig4", "fig5-weak", "fig5-strong"}; }

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  c.preset = name;
  c.simulation.forward.order_K = 10;
  c.phantom.spec.seed = 0;
  if (name == "fig3") {
    c.grid = base_grid(128, 16, 5e-6);
    c.phantom.spec.delta_n = 0.19;
    c.phantom.spec.target_Rg = 0.1;
    c.inversion.solver.order_K = 2;
  } else if (name == "fig4") {
    c.grid = base_grid(128, 3, 5e-6);
    c.phantom.layout = PhantomLayout::occluding;
    c.phantom.spec.delta_n = 0.19;
    c.inversion.solver.order_K = 3;
    c.inversion.tau_relative = 0.03;
    c.inversion.solver.max_iters = 300;
    c.sweep = SweepConfig{{0.19}, {}, {1, 2, 3}, {Method::born}};
  } else if (name == "fig5-weak" || name == "fig5-strong") {
    c.grid = base_grid(128, 20, 2.5e-6);
    c.phantom.spec.delta_n = name == "fig5-weak" ? 0.01 : 0.19;
    c.phantom.spec.target_Rg = 0.1;
    c.simulation.forward.order_K = 20;
    c.inversion.solver.order_K = 2;
    c.inversion.tau_relative = 0.003;
    c.inversion.solver.max_iters = 150;
    c.sweep = SweepConfig{{c.phantom.spec.delta_n}, {0.01, 0.02, 0.05, 0.1, 0.2, 0.4}, {1, 2},
                          {Method::born}};
  } else {
    std::string names;
    for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError("preset: unknown preset \"" + name + "\" (known: " + names + ")");
  }
  c.output_dir = "out-" + name;
  return c;
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }

  Section root(doc, "");
  RunConfig c;
  if (root.has("preset")) c = preset_config(root.get<std::string>("preset"));
  read_grid(root, c.grid);
  read_phantom(root, c.phantom);
  read_simulation(root, c.simulation);
  read_inversion(root, c.inversion);
  read_analysis(root, c.analysis);
  read_sweep(root, c.sweep);
  if (root.has("output_dir")) c.output_dir = root.get<std::string>("output_dir");
  if (root.has("seed")) c.seed = root.get<std::uint64_t>("seed");
  if (root.has("volume_dtype"))
    c.volume_dtype = parse_enum<io::DType>("volume_dtype", root.get<std::string>("volume_dtype"),
                                           {{"f32", io::DType::f32}, {"f64", io::DType::f64}});
  c.kernel_cache = read_path(root, "kernel_cache");
  c.input_volume = read_path(root, "input_volume");
  c.hologram = read_path(root, "hologram");
  c.volume = read_path(root, "volume");
  c.truth_volume = read_path(root, "truth_volume");
  c.truth_particles = read_path(root, "truth_particles");
  root.done();

  try {
    (void)PhysicalGrid(c.grid);
  } catch (const Error& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  if (!c.input_volume && c.phantom.layout == PhantomLayout::random)
    require(c.phantom.spec.target_Rg || c.phantom.spec.n_particles, "phantom",
            "needs target_Rg or n_particles");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path.string() + ": cannot read configuration");
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_to_json(const RunConfig& c) {
  const GridParams& g = c.grid;
  const PhantomSpec& p = c.phantom.spec;
  const SolverConfig& v = c.inversion.solver;
  json j;
  if (!c.preset.empty()) j["preset"] = c.preset;
  j["grid"] = {{"nx", g.nx}, {"ny", g.ny}, {"nz", g.nz}, {"dx", g.dx}, {"dy", g.dy},
               {"dz_voxel", g.dz_voxel}, {"slice_spacing", g.slice_spacing}, {"z0", g.z0},
               {"lambda_vacuum", g.lambda_vacuum}, {"n_medium", g.n_medium}, {"na", g.na}};
  json ph = {{"particle_radius", p.particle_radius}, {"delta_n", p.delta_n},
             {"isolate_adjacent_slices", p.isolate_adjacent_slices},
             {"placement_budget", p.placement_budget},
             {"layout", c.phantom.layout == PhantomLayout::random ? "random" : "occluding"}};
  if (p.target_Rg) ph["target_Rg"] = *p.target_Rg;
  if (p.n_particles) ph["n_particles"] = *p.n_particles;
  if (p.min_separation) ph["min_separation"] = *p.min_separation;
  j["phantom"] = ph;
  const char* modes[] = {"full", "forward_only", "first_born"};
  json sim = {{"order_K", c.simulation.forward.order_K},
              {"mode", modes[static_cast<int>(c.simulation.forward.mode)]},
              {"self_interference", c.simulation.forward.include_self_interference},
              {"same_slice", c.simulation.same_slice == SameSlicePolicy::exclude ? "exclude" : "regularized"},
              {"save_internal_field", c.simulation.save_internal_field}};
  if (c.simulation.noise_snr_db) sim["noise_snr_db"] = *c.simulation.noise_snr_db;
  j["simulation"] = sim;
  json inv = {{"method", to_string(c.inversion.method)}, {"order_K", v.order_K},
              {"tau_relative", c.inversion.tau_relative}, {"max_iters", v.max_iters},
              {"tv_inner_iters", v.tv_inner_iters}, {"tv_isotropic", v.tv_isotropic},
              {"tv_axial_weight", v.tv_axial_weight}, {"alpha0", v.alpha0},
              {"ls_shrink", v.ls_shrink}, {"ls_max_trials", v.ls_max_trials},
              {"nonneg", v.nonneg}, {"stop_tol", v.stop_tol}, {"momentum", v.momentum},
              {"snapshot_every", c.inversion.snapshot_every},
              {"background", c.inversion.background == Background::none ? "none" : "mean"}};
  if (c.inversion.tau_absolute) inv["tau"] = *c.inversion.tau_absolute;
  j["inversion"] = inv;
  const AnalysisConfig& a = c.analysis;
  json an = {{"threshold_fraction", a.threshold_fraction}, {"min_voxels", a.min_voxels},
             {"tol_xy", a.tol_xy}, {"depth_bins", a.depth_bins}, {"png_slices", a.png_slices}};
  if (a.tol_z) an["tol_z"] = *a.tol_z;
  if (a.png_range) an["png_range"] = {a.png_range->lo, a.png_range->hi};
  j["analysis"] = an;
  if (c.sweep) {
    std::vector<std::string> methods;
    for (Method m : c.sweep->methods) methods.push_back(to_string(m));
    j["sweep"] = {{"delta_n", c.sweep->delta_n}, {"target_Rg", c.sweep->target_Rg},
                  {"orders", c.sweep->orders}, {"methods", methods}};
  }
  j["output_dir"] = c.output_dir.string();
  j["seed"] = c.seed;
  j["volume_dtype"] = dtype_name(c.volume_dtype);
  auto put_path = [&](const char* key, const std::optional<std::filesystem::path>& v) {
    if (v) j[key] = v->string();
  };
  put_path("kernel_cache", c.kernel_cache);
  put_path("input_volume", c.input_volume);
  put_path("hologram", c.hologram);
  put_path("volume", c.volume);
  put_path("truth_volume", c.truth_volume);
  put_path("truth_particles", c.truth_particles);
  return j.dump(2);
}

ParticleSet occluding_disks(const PhysicalGrid& grid, double radius, double delta_n) {
  // Two outer layers of three disks sandwich a middle layer of two. Every
  // disk has a neighbour in another layer less than two diameters away
  // laterally, well inside the diffraction spread over one slice spacing.
  struct Offset { double x, y; std::size_t layer; };
  const Offset layout[8] = {{-1.2e-6, 0, 0}, {1.2e-6, 0, 0}, {0, 1.5e-6, 0}, {0, 0, 1},
                            {0, -1.5e-6, 1}, {-1.2e-6, 0, 2}, {1.2e-6, 0, 2}, {0, 1.5e-6, 2}};
  const double cx = (grid.nx() - 1) * grid.dx() / 2, cy = (grid.ny() - 1) * grid.dy() / 2;
  const std::size_t last = static_cast<std::size_t>(grid.nz() - 1);
  const double c = contrast_from_index(grid.params().n_medium + delta_n, grid);
  ParticleSet out;
  for (const Offset& o : layout) {
    const std::size_t slice = std::min(o.layer == 1 ? last / 2 : (o.layer == 2 ? last : 0), last);
    out.push_back({cx + o.x, cy + o.y, grid.slice_depth(slice), slice, radius, c});
  }
  return out;
}

Phantom build_phantom(const RunConfig& cfg, const PhysicalGrid& grid) {
  if (cfg.phantom.layout == PhantomLayout::occluding) {
    ParticleSet ps = occluding_disks(grid, cfg.phantom.spec.particle_radius, cfg.phantom.spec.delta_n);
    RealVolume f = render_particles(ps, grid);
    return {std::move(f), std::move(ps)};
  }
  PhantomSpec spec = cfg.phantom.spec;
  spec.seed = cfg.seed;
  return generate_phantom(spec, grid);
}

} // namespace bornholo
