#include "bornholo/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <spdlog/spdlog.h>

#include "json.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bornholo::cli {

using nlohmann::json;

namespace {

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

PhysicalGrid make_checked_grid(const RunConfig& cfg) {
  try {
    return PhysicalGrid(cfg.grid);
  } catch (const Error& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
}

std::string slice_name(std::size_t z) {
  std::ostringstream os;
  os << "slice_" << std::setw(3) << std::setfill('0') << z << ".png";
  return os.str();
}

json png_note(const io::PngRange& r) { return {{"lo", r.lo}, {"hi", r.hi}, {"fixed", r.fixed}}; }

// Truth particles for analysis: explicit list, else counted from the truth volume.
std::optional<ParticleSet> truth_particles(const RunConfig& cfg, const PhysicalGrid& grid,
                                           const std::optional<RealVolume>& truth) {
  if (cfg.truth_particles) return io::read_particles(*cfg.truth_particles, grid);
  if (truth) return count_particles(*truth, grid, count_threshold(cfg, grid), cfg.analysis.min_voxels);
  return std::nullopt;
}

} // namespace

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

PropagationKernels obtain_kernels(const RunConfig& cfg, const PhysicalGrid& grid) {
  const SameSlicePolicy policy = cfg.simulation.same_slice;
  if (cfg.kernel_cache && fs::exists(*cfg.kernel_cache)) {
    try {
      PropagationKernels k = io::read_kernel_cache(*cfg.kernel_cache, grid, policy);
      spdlog::info("loaded kernel cache {}", cfg.kernel_cache->string());
      return k;
    } catch (const IoError& e) {
      spdlog::warn("ignoring kernel cache: {}", e.what());
    }
  }
  PropagationKernels k = build_kernels(grid, policy);
  if (cfg.kernel_cache) {
    io::write_kernel_cache(*cfg.kernel_cache, k);
    spdlog::info("wrote kernel cache {}", cfg.kernel_cache->string());
  }
  return k;
}

Simulation simulate(const RunConfig& cfg, const PropagationKernels& kernels) {
  const PhysicalGrid& grid = kernels.grid();
  Simulation s;
  if (cfg.input_volume) {
    std::optional<PhysicalGrid> stored;
    s.phantom.f = io::read_real_volume(*cfg.input_volume, &stored);
    if (!grid.matches(s.phantom.f))
      throw DimensionMismatch(cfg.input_volume->string() + " does not match the configured grid");
  } else {
    s.phantom = build_phantom(cfg, grid);
  }
  const InternalField u_in = incident_plane_wave(grid);
  const InternalField u = internal_field(s.phantom.f, u_in, kernels, cfg.simulation.forward);
  const ComplexPlane E = scattered_field(s.phantom.f, u, kernels);
  s.hologram = synthesize_hologram(E, kIncidentAmplitude, cfg.simulation.forward.include_self_interference);
  if (cfg.simulation.noise_snr_db)
    s.hologram = add_gaussian_noise(s.hologram, *cfg.simulation.noise_snr_db, cfg.seed + 1);
  s.measured = extract_scattered(s.hologram, kIncidentAmplitude);
  s.convergence = convergence_metric(s.phantom.f, kernels, u_in, cfg.simulation.forward.order_K);
  if (cfg.simulation.save_internal_field) s.internal_field = u.values;
  return s;
}

RealPlane measurement_from_hologram(const RealPlane& intensity, Background background) {
  if (background == Background::none) return extract_scattered(intensity, kIncidentAmplitude);
  double mean = 0;
  for (double v : intensity.span()) mean += v;
  mean /= static_cast<double>(intensity.size());
  if (!(mean > 0)) throw ZeroMeanHologram("cannot divide by a non-positive mean background");
  RealPlane scaled = intensity;
  for (double& v : scaled.span()) v *= kIncidentAmplitude * kIncidentAmplitude / mean;
  return extract_scattered(scaled, kIncidentAmplitude);
}

double resolve_tau(const InversionConfig& inv, const RealPlane& measured,
                   const PropagationKernels& kernels, const InternalField& u_in) {
  if (inv.tau_absolute) return *inv.tau_absolute;
  if (inv.tau_relative == 0) return 0;
  const RealVolume zero = kernels.grid().zero_volume();
  const DataFidelity d = data_fidelity(zero, measured, kernels, u_in, 1);
  const RealVolume g = gradient(zero, d.residual, d.fields, kernels);
  double peak = 0;
  for (double v : g.span()) peak = std::max(peak, std::abs(v));
  return inv.tau_relative * peak;
}

SolverState invert(const InversionConfig& inv, const RealPlane& measured,
                   const PropagationKernels& kernels, const IterationCallback& cb) {
  const InternalField u_in = incident_plane_wave(kernels.grid());
  if (inv.method == Method::bpm) {
    SolverState st;
    st.f = backpropagate(measured, kernels, u_in);
    const DataFidelity d = data_fidelity(st.f, measured, kernels, u_in, 1);
    st.residual = d.residual;
    st.cost_history.push_back({0, d.cost, 0, d.cost, 0});
    if (cb) cb(st);
    return st;
  }
  SolverConfig sc = inv.solver;
  sc.tau = resolve_tau(inv, measured, kernels, u_in);
  return reconstruct(measured, kernels, u_in, sc, cb);
}

double count_threshold(const RunConfig& cfg, const PhysicalGrid& grid) {
  return cfg.analysis.threshold_fraction *
         nominal_peak(cfg.phantom.spec.particle_radius, cfg.phantom.spec.delta_n, grid);
}

double match_tol_z(const AnalysisConfig& analysis, const PhysicalGrid& grid) {
  return analysis.tol_z.value_or(1.5 * grid.slice_spacing());
}

Manifest::Manifest(fs::path dir, std::string command)
    : dir_(std::move(dir)), command_(std::move(command)) {}

void Manifest::add(const fs::path& relative) { files_.push_back(relative); }

void Manifest::set_note(const std::string& key, const std::string& json_value) {
  notes_.emplace_back(key, json_value);
}

void Manifest::write(const RunConfig& cfg) const {
  std::vector<fs::path> sorted = files_;
  std::sort(sorted.begin(), sorted.end());
  json files = json::array();
  for (const fs::path& rel : sorted) {
    const fs::path full = dir_ / rel;
    files.push_back({{"path", rel.generic_string()},
                     {"bytes", fs::file_size(full)},
                     {"sha256", io::sha256_file(full)}});
  }
  json j = {{"command", command_}, {"seed", cfg.seed}, {"files", files},
            {"config", json::parse(config_to_json(cfg))}};
  for (const auto& [k, v] : notes_) j[k] = json::parse(v);
  write_json(dir_ / "manifest.json", j);
}

std::vector<std::string> verify_manifest(const fs::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw IoError("no manifest.json in " + dir.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw IoError(std::string("unreadable manifest: ") + e.what());
  }
  std::vector<std::string> bad;
  for (const auto& entry : j.at("files")) {
    const std::string rel = entry.at("path").get<std::string>();
    const fs::path full = dir / rel;
    if (!fs::exists(full) || fs::file_size(full) != entry.at("bytes").get<std::uintmax_t>() ||
        io::sha256_file(full) != entry.at("sha256").get<std::string>())
      bad.push_back(rel);
  }
  return bad;
}

void cmd_simulate(const RunConfig& cfg) {
  const PhysicalGrid grid = make_checked_grid(cfg);
  const fs::path& out = cfg.output_dir;
  prepare_dir(out);
  io::DirectoryLock lock(out);
  const PropagationKernels kernels = obtain_kernels(cfg, grid);
  spdlog::info("simulating {}x{}x{} grid at order {}", grid.nx(), grid.ny(), grid.nz(),
               cfg.simulation.forward.order_K);
  const Simulation s = simulate(cfg, kernels);

  Manifest m(out, "simulate");
  io::write_volume(out / "phantom.mshv", s.phantom.f, grid, cfg.volume_dtype);
  m.add("phantom.mshv");
  io::write_plane(out / "hologram.mshv", s.hologram, grid);
  m.add("hologram.mshv");
  io::write_plane(out / "scattered_real.mshv", s.measured, grid);
  m.add("scattered_real.mshv");
  if (s.internal_field) {
    io::write_volume(out / "internal_field.mshv", *s.internal_field, grid);
    m.add("internal_field.mshv");
  }
  if (!cfg.input_volume) {
    io::write_particles(out / "particles.csv", s.phantom.particles);
    m.add("particles.csv");
  }
  json conv = {{"e", s.convergence.e}, {"incident_norm", s.convergence.incident_norm},
               {"Rg", geometric_cross_section(static_cast<long>(s.phantom.particles.size()),
                                              cfg.phantom.spec.particle_radius, grid)},
               {"n_particles", s.phantom.particles.size()},
               {"contrast_ratio", contrast_ratio(s.hologram)}};
  write_json(out / "convergence.json", conv);
  m.add("convergence.json");
  m.write(cfg);
  spdlog::info("e_K = {:.3e}, wrote {}", s.convergence.e.back(), out.string());
}

void cmd_reconstruct(const RunConfig& cfg) {
  const PhysicalGrid grid = make_checked_grid(cfg);
  if (!cfg.hologram) throw ConfigError("hologram: reconstruct needs an input hologram path");
  const RealPlane intensity = io::read_real_plane(*cfg.hologram);
  if (intensity.nx() != static_cast<std::size_t>(grid.nx()) ||
      intensity.ny() != static_cast<std::size_t>(grid.ny()))
    throw DimensionMismatch("hologram " + cfg.hologram->string() + " does not match the grid");
  const fs::path& out = cfg.output_dir;
  prepare_dir(out);
  io::DirectoryLock lock(out);
  const PropagationKernels kernels = obtain_kernels(cfg, grid);
  const RealPlane measured = measurement_from_hologram(intensity, cfg.inversion.background);

  Manifest m(out, "reconstruct");
  const int every = cfg.inversion.snapshot_every;
  if (every > 0) fs::create_directories(out / "snapshots");
  auto on_iter = [&](const SolverState& st) {
    const CostRecord& r = st.cost_history.back();
    spdlog::debug("iter {} total {:.6e} alpha {:.3e}", r.iteration, r.total, r.alpha);
    if (every > 0 && r.iteration > 0 && r.iteration % every == 0) {
      std::ostringstream name;
      name << "snapshots/iter_" << std::setw(5) << std::setfill('0') << r.iteration << ".mshv";
      io::write_volume(out / name.str(), st.f, grid, cfg.volume_dtype);
      m.add(name.str());
    }
  };
  spdlog::info("reconstructing with method {} (K = {})", to_string(cfg.inversion.method),
               cfg.inversion.solver.order_K);
  const SolverState st = invert(cfg.inversion, measured, kernels, on_iter);
  if (st.line_search_failed) spdlog::warn("{}", st.diagnostic);

  io::write_volume(out / "volume.mshv", st.f, grid, cfg.volume_dtype);
  m.add("volume.mshv");
  io::write_cost_history(out / "cost_history.csv", st.cost_history);
  m.add("cost_history.csv");
  const InternalField u_in = incident_plane_wave(grid);
  json rep = {{"method", to_string(cfg.inversion.method)},
              {"order_K", cfg.inversion.method == Method::bpm ? 1 : cfg.inversion.solver.order_K},
              {"tau", cfg.inversion.method == Method::bpm ? 0.0
                                                          : resolve_tau(cfg.inversion, measured, kernels, u_in)},
              {"iterations", st.iterations},
              {"final_cost", st.cost_history.back().total},
              {"line_search_failed", st.line_search_failed},
              {"diagnostic", st.diagnostic}};
  write_json(out / "reconstruct.json", rep);
  m.add("reconstruct.json");
  m.write(cfg);
  spdlog::info("final cost {:.6e} after {} iterations", st.cost_history.back().total, st.iterations);
}

void cmd_analyze(const RunConfig& cfg) {
  if (!cfg.volume) throw ConfigError("volume: analyze needs a reconstructed volume path");
  std::optional<PhysicalGrid> stored;
  const RealVolume est = io::read_real_volume(*cfg.volume, &stored);
  const PhysicalGrid& grid = *stored;
  std::optional<RealVolume> truth;
  if (cfg.truth_volume) {
    truth = io::read_real_volume(*cfg.truth_volume);
    if (!truth->same_shape(est)) throw DimensionMismatch("truth volume does not match the estimate");
  }
  const fs::path& out = cfg.output_dir;
  prepare_dir(out);
  io::DirectoryLock lock(out);
  Manifest m(out, "analyze");

  const double thr = count_threshold(cfg, grid);
  const ParticleSet found = count_particles(est, grid, thr, cfg.analysis.min_voxels);
  json rep = {{"count", found.size()},
              {"threshold", thr},
              {"Rg_estimate", geometric_cross_section(static_cast<long>(found.size()),
                                                      cfg.phantom.spec.particle_radius, grid)}};
  io::write_particles(out / "found_particles.csv", found);
  m.add("found_particles.csv");

  if (truth) {
    try {
      rep["snr_db"] = snr_db(est, *truth);
    } catch (const DegenerateTruth& e) {
      spdlog::warn("SNR skipped: {}", e.what());
    }
  }
  const std::optional<ParticleSet> ref = truth_particles(cfg, grid, truth);
  if (ref) {
    const double tol_z = match_tol_z(cfg.analysis, grid);
    const MatchResult mr = match_particles(found, *ref, cfg.analysis.tol_xy, tol_z);
    const double n = static_cast<double>(ref->size());
    rep["truth_count"] = ref->size();
    rep["count_error"] = n > 0 ? finite_or_null((static_cast<double>(found.size()) - n) / n) : json(nullptr);
    rep["precision"] = mr.precision;
    rep["recall"] = mr.recall;
    json depth = json::array();
    for (double r : recall_by_depth(mr, *ref, grid, cfg.analysis.depth_bins))
      depth.push_back(r < 0 ? json(nullptr) : json(r));
    rep["recall_by_depth"] = depth;
  } else {
    spdlog::warn("no truth volume or particle list given; truth metrics skipped");
  }
  write_json(out / "analysis.json", rep);
  m.add("analysis.json");

  json pngs = json::object();
  std::vector<std::size_t> slices = cfg.analysis.png_slices;
  if (slices.empty())
    for (std::size_t z = 0; z < est.nz(); ++z) slices.push_back(z);
  for (std::size_t z : slices) {
    if (z >= est.nz()) throw ConfigError("analysis.png_slices: slice " + std::to_string(z) + " outside the volume");
    const std::string name = slice_name(z);
    pngs[name] = png_note(io::write_png(out / name, io::slice_plane(est, z), cfg.analysis.png_range));
  }
  pngs["max_projection.png"] =
      png_note(io::write_png(out / "max_projection.png", io::max_projection(est), cfg.analysis.png_range));
  m.set_note("png_normalization", pngs.dump());
  m.write(cfg);
  spdlog::info("counted {} particles", found.size());
}

void cmd_compare(const RunConfig& cfg) {
  if (!cfg.sweep) throw ConfigError("sweep: compare needs a sweep section");
  const SweepConfig& sw = *cfg.sweep;
  if (sw.delta_n.empty() || sw.orders.empty() || sw.methods.empty())
    throw ConfigError("sweep: lists must not be empty");
  const PhysicalGrid grid = make_checked_grid(cfg);
  const fs::path& out = cfg.output_dir;
  prepare_dir(out);
  io::DirectoryLock lock(out);
  const PropagationKernels kernels = obtain_kernels(cfg, grid);

  std::vector<std::optional<double>> densities;
  for (double r : sw.target_Rg) densities.emplace_back(r);
  if (densities.empty()) densities.emplace_back(std::nullopt);

  std::ofstream table(out / "compare.csv", std::ios::trunc);
  if (!table) throw IoError("cannot write compare.csv");
  table << "delta_n,Rg,method,K,snr_db,count_error,final_cost,e_K,runtime_s,status\n"
        << std::setprecision(10);
  const InternalField u_in = incident_plane_wave(grid);

  for (double dn : sw.delta_n) {
    for (const auto& rg : densities) {
      RunConfig cell = cfg;
      cell.phantom.spec.delta_n = dn;
      if (rg) {
        cell.phantom.spec.target_Rg = rg;
        cell.phantom.spec.n_particles.reset();
      }
      std::optional<Simulation> sim;
      std::string sim_error;
      try {
        sim = simulate(cell, kernels);
      } catch (const Error& e) {
        sim_error = e.what();
      }
      const double rg_value = sim ? geometric_cross_section(static_cast<long>(sim->phantom.particles.size()),
                                                            cell.phantom.spec.particle_radius, grid)
                                  : rg.value_or(std::numeric_limits<double>::quiet_NaN());
      for (Method method : sw.methods) {
        const std::vector<int> orders = method == Method::bpm ? std::vector<int>{1} : sw.orders;
        for (int K : orders) {
          table << dn << ',' << rg_value << ',' << to_string(method) << ',' << K << ',';
          if (!sim) {
            table << "nan,nan,nan,nan,0,\"failed: " << sim_error << "\"\n";
            continue;
          }
          try {
            InversionConfig inv = cell.inversion;
            inv.method = method;
            inv.solver.order_K = K;
            const auto t0 = std::chrono::steady_clock::now();
            const SolverState st = invert(inv, sim->measured, kernels);
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            const double n_true = static_cast<double>(sim->phantom.particles.size());
            const auto found = count_particles(st.f, grid, count_threshold(cell, grid), cell.analysis.min_voxels);
            const double count_err = n_true > 0 ? (static_cast<double>(found.size()) - n_true) / n_true
                                                : std::numeric_limits<double>::quiet_NaN();
            const auto conv = convergence_metric(sim->phantom.f, kernels, u_in, K);
            table << snr_db(st.f, sim->phantom.f) << ',' << count_err << ','
                  << st.cost_history.back().total << ',' << conv.e.back() << ','
                  << std::fixed << std::setprecision(3) << secs << std::defaultfloat
                  << std::setprecision(10) << ','
                  << (st.line_search_failed ? "\"line search failed\"" : "ok") << '\n';
          } catch (const Error& e) {
            table << "nan,nan,nan,nan,0,\"failed: " << e.what() << "\"\n";
          }
          table.flush();
          spdlog::info("delta_n {} Rg {} {} K={} done", dn, rg_value, to_string(method), K);
        }
      }
    }
  }
  table.close();
  Manifest m(out, "compare");
  m.add("compare.csv");
  m.write(cfg);
}

} // namespace bornholo::cli
