#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bornholo/array.hpp"
#include "bornholo/grid.hpp"
#include "bornholo/phantom.hpp"
#include "bornholo/propagation.hpp"
#include "bornholo/solver.hpp"

namespace bornholo::io {

namespace fs = std::filesystem;

/// Element type codes of the MSHV container.
enum class DType : std::uint32_t { f32 = 1, f64 = 2, c64 = 3, c128 = 4 };

std::size_t dtype_size(DType t);
bool dtype_is_complex(DType t);

/// Physical metadata block stored after the dimensions.
struct Metadata {
  double dx = 0, dy = 0, dz_voxel = 0, slice_spacing = 0, z0 = 0, lambda_vacuum = 0,
         n_medium = 0, na = 0;
};

Metadata metadata_of(const PhysicalGrid& grid);

/// Decoded MSHV file. Values are widened to double precision on read;
/// exactly one of `real` / `complex` is filled depending on dtype.
struct ArrayFile {
  DType dtype = DType::f64;
  std::vector<std::uint64_t> dims; // slowest first: (z, y, x) or (y, x)
  Metadata meta;
  std::vector<double> real;
  std::vector<cplx> complex;

  std::size_t element_count() const;
};

/// Layout: "MSHV", u32 version = 1, u32 dtype, u32 ndim, ndim x u64 dims,
/// 8 x f64 metadata, row-major payload; everything little-endian.
void write_array(const fs::path& path, DType dtype, const std::vector<std::uint64_t>& dims,
                 const Metadata& meta, std::span<const double> values);
void write_array(const fs::path& path, DType dtype, const std::vector<std::uint64_t>& dims,
                 const Metadata& meta, std::span<const cplx> values);
ArrayFile read_array(const fs::path& path);

void write_volume(const fs::path& path, const RealVolume& v, const PhysicalGrid& grid,
                  DType dtype = DType::f64);
void write_volume(const fs::path& path, const ComplexVolume& v, const PhysicalGrid& grid,
                  DType dtype = DType::c128);
void write_plane(const fs::path& path, const RealPlane& p, const PhysicalGrid& grid,
                 DType dtype = DType::f64);

/// Reads a real 3D array; the grid is rebuilt from the stored metadata.
RealVolume read_real_volume(const fs::path& path, std::optional<PhysicalGrid>* grid = nullptr);
RealPlane read_real_plane(const fs::path& path, std::optional<PhysicalGrid>* grid = nullptr);
ComplexVolume read_complex_volume(const fs::path& path);

/// Grid described by a file header (nz = 1 for planes).
PhysicalGrid grid_from_header(const ArrayFile& f);

/// Kernel cache: transfer functions as a (2 nz, 2 ny, 2 nx) complex array.
void write_kernel_cache(const fs::path& path, const PropagationKernels& k,
                        DType dtype = DType::c128);
/// Throws IoError when the cache does not describe `grid` under `policy`.
PropagationKernels read_kernel_cache(const fs::path& path, const PhysicalGrid& grid,
                                     SameSlicePolicy policy);

/// Particle list, one line per particle: x_m,y_m,z_m,radius_m,contrast.
void write_particles(const fs::path& path, const ParticleSet& particles);
/// Slice indices are recovered from z via the grid's slice depths.
ParticleSet read_particles(const fs::path& path, const PhysicalGrid& grid);

void write_cost_history(const fs::path& path, const std::vector<CostRecord>& history);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const fs::path& path);

/// How PNG gray levels were produced from floating-point values.
struct PngRange {
  double lo = 0, hi = 0;
  bool fixed = false;
};

/// 8-bit grayscale PNG. Without a fixed range the plane's min/max is used.
PngRange write_png(const fs::path& path, const RealPlane& plane,
                   std::optional<PngRange> range = std::nullopt);
RealPlane max_projection(const RealVolume& v);
RealPlane slice_plane(const RealVolume& v, std::size_t z);

/// Exclusive advisory lock on an output directory, released on destruction
/// or process exit.
class DirectoryLock {
public:
  explicit DirectoryLock(const fs::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

private:
  int fd_ = -1;
  fs::path path_;
};

} // namespace bornholo::io
