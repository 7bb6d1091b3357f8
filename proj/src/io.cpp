#include "bornholo/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <fcntl.h>
#include <openssl/evp.h>
#include <png.h>
#include <sys/file.h>
#include <unistd.h>

namespace bornholo::io {

namespace {

constexpr char kMagic[4] = {'M', 'S', 'H', 'V'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxDims = 8;

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  } else {
    return v;
  }
}

template <class T>
void put(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is, const fs::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
    throw IoError("truncated header in " + path.string());
  return to_little(v);
}

std::array<double, 8> meta_array(const Metadata& m) {
  return {m.dx, m.dy, m.dz_voxel, m.slice_spacing, m.z0, m.lambda_vacuum, m.n_medium, m.na};
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

void write_header(std::ostream& os, DType dtype, const std::vector<std::uint64_t>& dims,
                  const Metadata& meta) {
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(dtype));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) put<std::uint64_t>(os, d);
  for (double v : meta_array(meta)) put<double>(os, v);
}

std::size_t product(const std::vector<std::uint64_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

void check_count(const std::vector<std::uint64_t>& dims, std::size_t n) {
  if (product(dims) != n) throw DimensionMismatch("array payload does not match its dimensions");
}

void finish(std::ofstream& os, const fs::path& path) {
  os.flush();
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<std::uint64_t> volume_dims(std::size_t nz, std::size_t ny, std::size_t nx) {
  return {nz, ny, nx};
}

} // namespace

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::c64: return 8;
    case DType::c128: return 16;
  }
  throw IoError("unknown dtype code");
}

bool dtype_is_complex(DType t) { return t == DType::c64 || t == DType::c128; }

Metadata metadata_of(const PhysicalGrid& grid) {
  const GridParams& p = grid.params();
  return {p.dx, p.dy, p.dz_voxel, p.slice_spacing, p.z0, p.lambda_vacuum, p.n_medium, p.na};
}

std::size_t ArrayFile::element_count() const { return product(dims); }

void write_array(const fs::path& path, DType dtype, const std::vector<std::uint64_t>& dims,
                 const Metadata& meta, std::span<const double> values) {
  if (dtype_is_complex(dtype)) throw IoError("real data cannot be stored with a complex dtype");
  check_count(dims, values.size());
  std::ofstream os = open_out(path);
  write_header(os, dtype, dims, meta);
  for (double v : values) {
    if (dtype == DType::f32)
      put<float>(os, static_cast<float>(v));
    else
      put<double>(os, v);
  }
  finish(os, path);
}

void write_array(const fs::path& path, DType dtype, const std::vector<std::uint64_t>& dims,
                 const Metadata& meta, std::span<const cplx> values) {
  if (!dtype_is_complex(dtype)) throw IoError("complex data needs a complex dtype");
  check_count(dims, values.size());
  std::ofstream os = open_out(path);
  write_header(os, dtype, dims, meta);
  for (const cplx& v : values) {
    if (dtype == DType::c64) {
      put<float>(os, static_cast<float>(v.real()));
      put<float>(os, static_cast<float>(v.imag()));
    } else {
      put<double>(os, v.real());
      put<double>(os, v.imag());
    }
  }
  finish(os, path);
}

ArrayFile read_array(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError(path.string() + " is not an MSHV file");
  if (const auto v = get<std::uint32_t>(is, path); v != kVersion)
    throw IoError(path.string() + ": unsupported format version " + std::to_string(v));

  ArrayFile f;
  const auto code = get<std::uint32_t>(is, path);
  if (code < 1 || code > 4) throw IoError(path.string() + ": unknown dtype code " + std::to_string(code));
  f.dtype = static_cast<DType>(code);
  const auto ndim = get<std::uint32_t>(is, path);
  if (ndim == 0 || ndim > kMaxDims) throw IoError(path.string() + ": bad dimension count");
  for (std::uint32_t i = 0; i < ndim; ++i) f.dims.push_back(get<std::uint64_t>(is, path));
  std::array<double, 8> m{};
  for (double& v : m) v = get<double>(is, path);
  f.meta = {m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7]};

  const std::size_t n = f.element_count();
  const auto start = is.tellg();
  is.seekg(0, std::ios::end);
  const auto payload = static_cast<std::size_t>(is.tellg() - start);
  if (payload != n * dtype_size(f.dtype))
    throw IoError(path.string() + ": payload size " + std::to_string(payload) + " does not match header");
  is.seekg(start);

  if (dtype_is_complex(f.dtype)) {
    f.complex.resize(n);
    for (auto& v : f.complex) {
      if (f.dtype == DType::c64) {
        const float re = get<float>(is, path), im = get<float>(is, path);
        v = {re, im};
      } else {
        const double re = get<double>(is, path), im = get<double>(is, path);
        v = {re, im};
      }
    }
  } else {
    f.real.resize(n);
    for (auto& v : f.real)
      v = f.dtype == DType::f32 ? static_cast<double>(get<float>(is, path)) : get<double>(is, path);
  }
  return f;
}

void write_volume(const fs::path& path, const RealVolume& v, const PhysicalGrid& grid, DType dtype) {
  if (!grid.matches(v)) throw DimensionMismatch("write_volume: volume does not match grid");
  write_array(path, dtype, volume_dims(v.nz(), v.ny(), v.nx()), metadata_of(grid), v.span());
}

void write_volume(const fs::path& path, const ComplexVolume& v, const PhysicalGrid& grid,
                  DType dtype) {
  if (!grid.matches(v)) throw DimensionMismatch("write_volume: volume does not match grid");
  write_array(path, dtype, volume_dims(v.nz(), v.ny(), v.nx()), metadata_of(grid), v.span());
}

void write_plane(const fs::path& path, const RealPlane& p, const PhysicalGrid& grid, DType dtype) {
  if (p.nx() != static_cast<std::size_t>(grid.nx()) || p.ny() != static_cast<std::size_t>(grid.ny()))
    throw DimensionMismatch("write_plane: plane does not match grid");
  write_array(path, dtype, {p.ny(), p.nx()}, metadata_of(grid), p.span());
}

PhysicalGrid grid_from_header(const ArrayFile& f) {
  GridParams p;
  const std::size_t nd = f.dims.size();
  if (nd != 2 && nd != 3) throw IoError("expected a 2D or 3D array");
  p.nx = static_cast<long>(f.dims[nd - 1]);
  p.ny = static_cast<long>(f.dims[nd - 2]);
  p.nz = nd == 3 ? static_cast<long>(f.dims[0]) : 1;
  p.dx = f.meta.dx;
  p.dy = f.meta.dy;
  p.dz_voxel = f.meta.dz_voxel;
  p.slice_spacing = f.meta.slice_spacing;
  p.z0 = f.meta.z0;
  p.lambda_vacuum = f.meta.lambda_vacuum;
  p.n_medium = f.meta.n_medium;
  p.na = f.meta.na;
  return PhysicalGrid(p);
}

RealVolume read_real_volume(const fs::path& path, std::optional<PhysicalGrid>* grid) {
  ArrayFile f = read_array(path);
  if (dtype_is_complex(f.dtype) || f.dims.size() != 3)
    throw IoError(path.string() + ": expected a real 3D array");
  RealVolume v(f.dims[2], f.dims[1], f.dims[0]);
  v.values() = std::move(f.real);
  if (grid) grid->emplace(grid_from_header(f));
  return v;
}

RealPlane read_real_plane(const fs::path& path, std::optional<PhysicalGrid>* grid) {
  ArrayFile f = read_array(path);
  if (dtype_is_complex(f.dtype) || f.dims.size() != 2)
    throw IoError(path.string() + ": expected a real 2D array");
  RealPlane p(f.dims[1], f.dims[0]);
  p.values() = std::move(f.real);
  if (grid) grid->emplace(grid_from_header(f));
  return p;
}

ComplexVolume read_complex_volume(const fs::path& path) {
  ArrayFile f = read_array(path);
  if (!dtype_is_complex(f.dtype) || f.dims.size() != 3)
    throw IoError(path.string() + ": expected a complex 3D array");
  ComplexVolume v(f.dims[2], f.dims[1], f.dims[0]);
  v.values() = std::move(f.complex);
  return v;
}

void write_kernel_cache(const fs::path& path, const PropagationKernels& k, DType dtype) {
  const PhysicalGrid& g = k.grid();
  const std::vector<std::uint64_t> dims{2 * static_cast<std::uint64_t>(g.nz()),
                                        2 * static_cast<std::uint64_t>(g.ny()),
                                        2 * static_cast<std::uint64_t>(g.nx())};
  write_array(path, dtype, dims, metadata_of(g), std::span<const cplx>(k.storage()));
}

PropagationKernels read_kernel_cache(const fs::path& path, const PhysicalGrid& grid,
                                     SameSlicePolicy policy) {
  ArrayFile f = read_array(path);
  const std::vector<std::uint64_t> want{2 * static_cast<std::uint64_t>(grid.nz()),
                                        2 * static_cast<std::uint64_t>(grid.ny()),
                                        2 * static_cast<std::uint64_t>(grid.nx())};
  if (!dtype_is_complex(f.dtype) || f.dims != want)
    throw IoError(path.string() + ": kernel cache shape does not match the grid");
  const auto a = meta_array(f.meta), b = meta_array(metadata_of(grid));
  if (a != b) throw IoError(path.string() + ": kernel cache metadata does not match the grid");
  // The excluded same-slice kernel is stored as an all-zero first plane.
  const std::size_t plane = static_cast<std::size_t>(4 * grid.nx() * grid.ny());
  const bool zero_first =
      std::all_of(f.complex.begin(), f.complex.begin() + static_cast<std::ptrdiff_t>(plane),
                  [](const cplx& c) { return c == cplx{}; });
  if (zero_first != (policy == SameSlicePolicy::exclude))
    throw IoError(path.string() + ": kernel cache was built with a different same-slice policy");
  return PropagationKernels(grid, policy, std::move(f.complex));
}

void write_particles(const fs::path& path, const ParticleSet& particles) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "x_m,y_m,z_m,radius_m,contrast\n" << std::setprecision(17);
  for (const Particle& p : particles)
    os << p.x << ',' << p.y << ',' << p.z << ',' << p.radius << ',' << p.contrast << '\n';
  finish(os, path);
}

ParticleSet read_particles(const fs::path& path, const PhysicalGrid& grid) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  ParticleSet out;
  std::string line;
  std::size_t lineno = 0;
  const double s = grid.params().slice_spacing, z0 = grid.params().z0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.rfind("x_m", 0) == 0) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    Particle p;
    if (!(ls >> p.x >> p.y >> p.z >> p.radius >> p.contrast))
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 5 numeric fields");
    const long m = std::lround((p.z - z0) / s);
    if (m < 0 || m >= static_cast<long>(grid.nz()))
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": depth outside the grid");
    p.slice = static_cast<std::size_t>(m);
    out.push_back(p);
  }
  return out;
}

void write_cost_history(const fs::path& path, const std::vector<CostRecord>& history) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "iteration,data_term,tv_term,total,alpha\n" << std::setprecision(17);
  for (const CostRecord& r : history)
    os << r.iteration << ',' << r.data_term << ',' << r.tv_term << ',' << r.total << ','
       << r.alpha << '\n';
  finish(os, path);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw IoError("SHA-256 initialisation failed");
  }
  std::vector<char> buf(1 << 16);
  while (is) {
    is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (is.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

RealPlane max_projection(const RealVolume& v) {
  RealPlane out(v.nx(), v.ny(), -std::numeric_limits<double>::infinity());
  for (std::size_t z = 0; z < v.nz(); ++z) {
    const auto s = v.slice(z);
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = std::max(out[i], s[i]);
  }
  return out;
}

RealPlane slice_plane(const RealVolume& v, std::size_t z) {
  if (z >= v.nz()) throw DimensionMismatch("slice index outside the volume");
  RealPlane out(v.nx(), v.ny());
  const auto s = v.slice(z);
  std::copy(s.begin(), s.end(), out.span().begin());
  return out;
}

PngRange write_png(const fs::path& path, const RealPlane& plane, std::optional<PngRange> range) {
  PngRange r;
  if (range) {
    r = *range;
    r.fixed = true;
  } else if (plane.size() > 0) {
    const auto [mn, mx] = std::minmax_element(plane.span().begin(), plane.span().end());
    r = {*mn, *mx, false};
  }
  const double span = r.hi - r.lo;

  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("PNG encoding failed for " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(plane.nx()), static_cast<png_uint_32>(plane.ny()),
               8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(plane.nx());
  for (std::size_t y = 0; y < plane.ny(); ++y) {
    for (std::size_t x = 0; x < plane.nx(); ++x) {
      const double t = span > 0 ? (plane(x, y) - r.lo) / span : 0.0;
      row[x] = static_cast<png_byte>(std::lround(255.0 * std::clamp(t, 0.0, 1.0)));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
  return r;
}

DirectoryLock::DirectoryLock(const fs::path& dir) : path_(dir / ".born-holo.lock") {
  fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
  if (fd_ < 0) throw IoError("cannot create lock file " + path_.string());
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw IoError("output directory " + dir.string() + " is locked by another process");
  }
}

DirectoryLock::~DirectoryLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

} // namespace bornholo::io
