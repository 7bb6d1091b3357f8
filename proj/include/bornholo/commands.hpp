#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bornholo/analysis.hpp"
#include "bornholo/config.hpp"

namespace bornholo::cli {

namespace fs = std::filesystem;

/// Everything a forward simulation produces in memory.
struct Simulation {
  Phantom phantom;
  RealPlane hologram;        // intensity, noise included
  RealPlane measured;        // Re{E} extracted from the hologram
  ConvergenceReport convergence;
  std::optional<ComplexVolume> internal_field;
};

/// Loads the configured kernel cache when it matches the grid, otherwise
/// builds the kernels (and writes the cache when a path is configured).
PropagationKernels obtain_kernels(const RunConfig& cfg, const PhysicalGrid& grid);

Simulation simulate(const RunConfig& cfg, const PropagationKernels& kernels);

/// Extracts Re{E} from an intensity hologram, optionally dividing by its mean first.
RealPlane measurement_from_hologram(const RealPlane& intensity, Background background);

/// Absolute TV weight for an inversion: the configured value, or
/// tau_relative times the largest data-term gradient magnitude at f = 0.
double resolve_tau(const InversionConfig& inv, const RealPlane& measured,
                   const PropagationKernels& kernels, const InternalField& u_in);

/// Runs the configured inversion. For the back-propagation method the state
/// holds the single adjoint image and a one-entry cost history.
SolverState invert(const InversionConfig& inv, const RealPlane& measured,
                   const PropagationKernels& kernels, const IterationCallback& cb = {});

/// Counting threshold for a configuration: fraction of the nominal disk peak.
double count_threshold(const RunConfig& cfg, const PhysicalGrid& grid);

/// Axial matching tolerance: the configured value, or 1.5 slice spacings
/// (one slice off matches, two slices off does not).
double match_tol_z(const AnalysisConfig& analysis, const PhysicalGrid& grid);

/// Records output files with their SHA-256 digests.
class Manifest {
public:
  Manifest(fs::path dir, std::string command);
  void add(const fs::path& relative);
  void set_note(const std::string& key, const std::string& json_value);
  /// Writes manifest.json into the directory.
  void write(const RunConfig& cfg) const;

private:
  fs::path dir_;
  std::string command_;
  std::vector<fs::path> files_;
  std::vector<std::pair<std::string, std::string>> notes_;
};

/// Re-hashes every file listed in dir/manifest.json. Returns the paths whose
/// digest or size no longer matches (empty when intact).
std::vector<std::string> verify_manifest(const fs::path& dir);

void cmd_simulate(const RunConfig& cfg);
void cmd_reconstruct(const RunConfig& cfg);
void cmd_analyze(const RunConfig& cfg);
void cmd_compare(const RunConfig& cfg);

/// Number of worker threads; no-op without OpenMP.
void set_threads(int n);

} // namespace bornholo::cli
