#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bornholo/forward.hpp"
#include "bornholo/grid.hpp"
#include "bornholo/io.hpp"
#include "bornholo/phantom.hpp"
#include "bornholo/propagation.hpp"
#include "bornholo/solver.hpp"

namespace bornholo {

enum class PhantomLayout { random, occluding };
enum class Method { born, bpm };
enum class Background { none, mean };

std::string to_string(Method m);

struct PhantomConfig {
  PhantomSpec spec;
  PhantomLayout layout = PhantomLayout::random;
};

struct SimulationConfig {
  ForwardConfig forward{20, ScatteringMode::full, true};
  SameSlicePolicy same_slice = SameSlicePolicy::exclude;
  std::optional<double> noise_snr_db;   // additive Gaussian noise on the hologram
  bool save_internal_field = false;
};

struct InversionConfig {
  Method method = Method::born;
  SolverConfig solver;
  /// tau = tau_relative * max |gradient of the data term at f = 0| unless an
  /// absolute tau is given.
  std::optional<double> tau_absolute;
  double tau_relative = 0.003;
  int snapshot_every = 0;               // 0 disables snapshots
  Background background = Background::none;
};

struct AnalysisConfig {
  double threshold_fraction = 0.1;      // of the nominal single-particle peak
  std::size_t min_voxels = 1;
  double tol_xy = 1e-6;
  std::optional<double> tol_z;          // default: 1.5 slice spacings
  std::size_t depth_bins = 4;
  std::vector<std::size_t> png_slices;  // empty: every slice
  std::optional<io::PngRange> png_range;
};

struct SweepConfig {
  std::vector<double> delta_n;
  std::vector<double> target_Rg;
  std::vector<int> orders;
  std::vector<Method> methods;
};

struct RunConfig {
  std::string preset;                   // empty when none
  GridParams grid;
  PhantomConfig phantom;
  SimulationConfig simulation;
  InversionConfig inversion;
  AnalysisConfig analysis;
  std::optional<SweepConfig> sweep;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  io::DType volume_dtype = io::DType::f64;
  std::optional<std::filesystem::path> kernel_cache;

  // Inputs for reconstruct / analyze.
  std::optional<std::filesystem::path> input_volume;     // phantom volume instead of generation
  std::optional<std::filesystem::path> hologram;
  std::optional<std::filesystem::path> volume;
  std::optional<std::filesystem::path> truth_volume;
  std::optional<std::filesystem::path> truth_particles;
};

/// Names accepted by the "preset" key.
std::vector<std::string> preset_names();
/// Configuration a preset expands to before user overrides are applied.
RunConfig preset_config(const std::string& name);

/// Parses a JSON document. Unknown keys, wrong types and out-of-range values
/// throw ConfigError naming the offending field (and line for syntax errors).
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON rendering of a configuration (used in manifests).
std::string config_to_json(const RunConfig& cfg);

/// Scheme shared by the CLI and the acceptance suite: the fig4 occluding
/// 8-disk arrangement centred in the grid.
ParticleSet occluding_disks(const PhysicalGrid& grid, double radius, double delta_n);

/// Builds the phantom described by the configuration (seeded).
Phantom build_phantom(const RunConfig& cfg, const PhysicalGrid& grid);

} // namespace bornholo
