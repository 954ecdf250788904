#pragma once

// Field persistence and report emission.
//
// Binary field format: little-endian header {magic "PAMF", version u32,
// N u32, flags u32 (bit0 = spectral)} followed by N^2 (re, im) float64
// pairs, row-major over the centered index range {-(N-1)/2, ..., (N-1)/2}^2.
// N is the side of the stored square: the lattice size for lattice fields
// and the coefficient width for spectral fields (wider than the mode set
// for products such as the area term). Doubles are written bit-exactly, so
// write/read round trips are identity and identical inputs produce
// byte-identical files.
//
// CSV uses %.17g, enough digits to reproduce every double exactly.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "pamlab/grid.hpp"
#include "pamlab/noise.hpp"
#include "pamlab/potential.hpp"

namespace pamlab {

inline constexpr std::uint32_t pamf_version = 1;
inline constexpr std::uint32_t pamf_flag_spectral = 1u;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("pamf: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("pamf: truncated payload");
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

inline void write_pamf_raw(const std::string& path, int N, std::uint32_t flags,
                           const std::vector<cplx>& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("pamf: cannot open " + path + " for writing");
  os.write("PAMF", 4);
  put_u32(os, pamf_version);
  put_u32(os, static_cast<std::uint32_t>(N));
  put_u32(os, flags);
  for (const auto& z : data) {
    put_f64(os, z.real());
    put_f64(os, z.imag());
  }
  if (!os) throw std::runtime_error("pamf: write failed for " + path);
}

inline std::pair<GridSpec, std::uint32_t> read_pamf_raw(const std::string& path,
                                                        std::vector<cplx>& data) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("pamf: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "PAMF", 4) != 0)
    throw std::runtime_error("pamf: bad magic in " + path);
  const auto version = get_u32(is);
  if (version != pamf_version)
    throw std::runtime_error("pamf: unsupported version " + std::to_string(version));
  const auto N = get_u32(is);
  const auto flags = get_u32(is);
  const auto grid = make_grid(static_cast<int>(N));
  data.resize(grid.sites());
  for (auto& z : data) {
    const double re = get_f64(is);
    const double im = get_f64(is);
    z = cplx{re, im};
  }
  return {grid, flags};
}

}  // namespace detail

inline void write_pamf(const std::string& path, const LatticeField& phi) {
  detail::write_pamf_raw(path, phi.grid.N, 0u, phi.values);
}

inline void write_pamf(const std::string& path, const SpectralField& F) {
  detail::write_pamf_raw(path, F.width, pamf_flag_spectral, F.coeffs);
}

inline LatticeField read_pamf_lattice(const std::string& path) {
  std::vector<cplx> data;
  const auto [grid, flags] = detail::read_pamf_raw(path, data);
  if (flags & pamf_flag_spectral)
    throw std::runtime_error("pamf: " + path + " holds a spectral field");
  LatticeField phi(grid);
  phi.values = std::move(data);
  return phi;
}

// The header gives only the coefficient width; the grid defaults to a
// matching mode set. Callers with wider-than-mode-set fields restore the
// true grid from context (see load_enhanced_noise).
inline SpectralField read_pamf_spectral(const std::string& path) {
  std::vector<cplx> data;
  const auto [grid, flags] = detail::read_pamf_raw(path, data);
  if (!(flags & pamf_flag_spectral))
    throw std::runtime_error("pamf: " + path + " holds a lattice field");
  SpectralField F(grid);
  F.coeffs = std::move(data);
  return F;
}

inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline void write_field_csv_impl(const std::string& path,
                                 const std::vector<cplx>& data, int width) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("csv: cannot open " + path + " for writing");
  os << "l1,l2,re,im\n";
  const int h = (width - 1) / 2;
  for (int a = -h; a <= h; ++a)
    for (int b = -h; b <= h; ++b) {
      const auto& z = data[centered_index(a, b, width)];
      os << a << ',' << b << ',' << format_g17(z.real()) << ','
         << format_g17(z.imag()) << '\n';
    }
}

}  // namespace detail

inline void write_field_csv(const std::string& path, const LatticeField& phi) {
  detail::write_field_csv_impl(path, phi.values, phi.grid.N);
}

inline void write_field_csv(const std::string& path, const SpectralField& F) {
  detail::write_field_csv_impl(path, F.coeffs, F.width);
}

inline nlohmann::json potential_spec_json(const PotentialSpec& spec) {
  nlohmann::json j;
  j["kind"] = spec.kind == PotentialSpec::Kind::martingale ? "martingale" : "iid";
  j["base"] = to_string(spec.base);
  j["moment_order"] = spec.moment_order;
  j["moment_bound"] = spec.moment_bound;
  if (spec.base == BaseDistribution::tabulated) {
    j["table_values"] = spec.table_values;
    j["table_probs"] = spec.table_probs;
  }
  return j;
}

// Three field files plus a JSON sidecar describing what produced them.
inline void save_enhanced_noise(const std::string& dir, const std::string& name,
                                const EnhancedNoise& en, const PotentialSpec& spec) {
  write_pamf(dir + "/" + name + "_xi.pamf", en.xi);
  write_pamf(dir + "/" + name + "_X.pamf", en.X);
  write_pamf(dir + "/" + name + "_area.pamf", en.area);
  nlohmann::json j;
  j["N"] = en.grid.N;
  j["seed"] = en.seed;
  j["c_N"] = en.c_N;
  j["c_tilde_N"] = en.c_tilde_N;
  j["spec"] = potential_spec_json(spec);
  std::ofstream os(dir + "/" + name + ".json");
  if (!os) throw std::runtime_error("sidecar: cannot open " + dir + "/" + name + ".json");
  os << j.dump(2) << '\n';
}

struct LoadedNoise {
  SpectralField xi, X, area;
  nlohmann::json sidecar;
};

inline LoadedNoise load_enhanced_noise(const std::string& dir, const std::string& name) {
  LoadedNoise out{read_pamf_spectral(dir + "/" + name + "_xi.pamf"),
                  read_pamf_spectral(dir + "/" + name + "_X.pamf"),
                  read_pamf_spectral(dir + "/" + name + "_area.pamf"),
                  {}};
  std::ifstream is(dir + "/" + name + ".json");
  if (!is) throw std::runtime_error("sidecar: cannot open " + dir + "/" + name + ".json");
  is >> out.sidecar;
  // The area term carries product modes beyond the mode set; its file stores
  // only the coefficient width, so the lattice grid comes from the sidecar.
  const auto grid = make_grid(out.sidecar["N"].get<int>());
  out.xi.grid = grid;
  out.X.grid = grid;
  out.area.grid = grid;
  return out;
}

}  // namespace pamlab
