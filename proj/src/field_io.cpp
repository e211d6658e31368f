#include "partlab/field_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace partlab {

namespace {

constexpr std::uint32_t kMagic = 0x504c5346;  // "PLSF"
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_raw(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("field dump truncated");
}

}  // namespace

void dump_field(const SegregatedField& u, const std::string& path_base) {
  const Grid& g = *u.grid;
  std::ofstream os(path_base + ".segf", std::ios::binary);
  if (!os) throw std::runtime_error("cannot open field dump for writing: " + path_base + ".segf");

  write_raw(os, kMagic);
  write_raw(os, kVersion);
  write_raw(os, static_cast<std::uint32_t>(g.dim));
  for (int d = 0; d < 3; ++d) write_raw(os, static_cast<std::uint32_t>(g.shape[d]));
  write_raw(os, g.h);
  for (int d = 0; d < 3; ++d) write_raw(os, g.origin[d]);
  write_raw(os, static_cast<std::uint32_t>(g.domain.kind));
  for (int d = 0; d < 3; ++d) write_raw(os, g.domain.lo[d]);
  for (int d = 0; d < 3; ++d) write_raw(os, g.domain.hi[d]);
  for (int d = 0; d < 3; ++d) write_raw(os, g.domain.center[d]);
  write_raw(os, g.domain.r_in);
  write_raw(os, g.domain.r_out);
  write_raw(os, static_cast<std::uint32_t>(u.ncomp()));
  write_raw(os, static_cast<std::uint8_t>(u.normalized ? 1 : 0));
  for (double l : u.eigenvalues) write_raw(os, l);

  os.write(reinterpret_cast<const char*>(g.domain_mask.data()),
           static_cast<std::streamsize>(g.domain_mask.size()));
  os.write(reinterpret_cast<const char*>(g.boundary_mask.data()),
           static_cast<std::streamsize>(g.boundary_mask.size()));
  for (const auto& c : u.components) {
    os.write(reinterpret_cast<const char*>(c.data()),
             static_cast<std::streamsize>(c.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("field dump write failed: " + path_base + ".segf");

  nlohmann::json j;
  j["format"] = "segf";
  j["version"] = kVersion;
  j["dim"] = g.dim;
  j["shape"] = {g.shape[0], g.shape[1], g.shape[2]};
  j["spacing"] = g.h;
  j["origin"] = {g.origin[0], g.origin[1], g.origin[2]};
  j["domain"] = {
      {"kind", domain_kind_name(g.domain.kind)},
      {"lo", {g.domain.lo[0], g.domain.lo[1], g.domain.lo[2]}},
      {"hi", {g.domain.hi[0], g.domain.hi[1], g.domain.hi[2]}},
      {"center", {g.domain.center[0], g.domain.center[1], g.domain.center[2]}},
      {"r_in", g.domain.r_in},
      {"r_out", g.domain.r_out},
  };
  j["components"] = u.ncomp();
  j["normalized"] = u.normalized;
  j["eigenvalues"] = u.eigenvalues;
  std::ofstream js(path_base + ".json");
  if (!js) throw std::runtime_error("cannot open field sidecar for writing: " + path_base + ".json");
  js << j.dump(2) << "\n";
}

SegregatedField load_field(const std::string& path_base) {
  std::ifstream is(path_base + ".segf", std::ios::binary);
  if (!is) throw std::runtime_error("missing field dump: " + path_base + ".segf");

  std::uint32_t magic = 0, version = 0, dim = 0, kind = 0, ncomp = 0;
  read_raw(is, magic);
  if (magic != kMagic) throw std::runtime_error("not a field dump: " + path_base + ".segf");
  read_raw(is, version);
  if (version != kVersion) throw std::runtime_error("unsupported field dump version");
  read_raw(is, dim);

  auto grid = std::make_shared<Grid>();
  grid->dim = static_cast<int>(dim);
  for (int d = 0; d < 3; ++d) {
    std::uint32_t s = 0;
    read_raw(is, s);
    grid->shape[d] = static_cast<int>(s);
  }
  read_raw(is, grid->h);
  for (int d = 0; d < 3; ++d) read_raw(is, grid->origin[d]);
  read_raw(is, kind);
  grid->domain.kind = static_cast<DomainKind>(kind);
  for (int d = 0; d < 3; ++d) read_raw(is, grid->domain.lo[d]);
  for (int d = 0; d < 3; ++d) read_raw(is, grid->domain.hi[d]);
  for (int d = 0; d < 3; ++d) read_raw(is, grid->domain.center[d]);
  read_raw(is, grid->domain.r_in);
  read_raw(is, grid->domain.r_out);
  read_raw(is, ncomp);
  std::uint8_t normalized = 0;
  read_raw(is, normalized);

  SegregatedField u;
  u.eigenvalues.resize(ncomp);
  for (auto& l : u.eigenvalues) read_raw(is, l);

  const std::size_t n = grid->size();
  grid->domain_mask.resize(n);
  grid->boundary_mask.resize(n);
  is.read(reinterpret_cast<char*>(grid->domain_mask.data()), static_cast<std::streamsize>(n));
  is.read(reinterpret_cast<char*>(grid->boundary_mask.data()), static_cast<std::streamsize>(n));
  u.components.assign(ncomp, std::vector<double>(n));
  for (auto& c : u.components) {
    is.read(reinterpret_cast<char*>(c.data()), static_cast<std::streamsize>(n * sizeof(double)));
  }
  if (!is) throw std::runtime_error("field dump truncated: " + path_base + ".segf");

  u.grid = std::move(grid);
  u.normalized = normalized != 0;
  return u;
}

}  // namespace partlab
