#include "qsa/path_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace qsa {

namespace {

constexpr char kMagic[4] = {'Q', 'S', 'P', 'E'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "binary ensemble format assumes a little-endian host");

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
double get_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void format_double(char* buf, std::size_t n, double v) { std::snprintf(buf, n, "%.17g", v); }

}  // namespace

void write_ensemble_csv(const PathEnsemble& e, std::ostream& os) {
  e.validate();
  const std::size_t d = e.paths.front().dim();
  os << "path_id,t";
  for (std::size_t i = 0; i < d; ++i) os << ",x_" << (i + 1);
  os << "\n";
  char buf[40];
  for (std::size_t p = 0; p < e.size(); ++p) {
    const Path& path = e.paths[p];
    for (std::size_t k = 0; k < path.points(); ++k) {
      os << p;
      format_double(buf, sizeof buf, path.grid().time(k));
      os << ',' << buf;
      for (std::size_t i = 0; i < d; ++i) {
        format_double(buf, sizeof buf, path.at(k, i));
        os << ',' << buf;
      }
      os << "\n";
    }
  }
}

void write_ensemble_csv(const PathEnsemble& e, const std::string& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + file);
  write_ensemble_csv(e, os);
}

void write_ensemble_binary(const PathEnsemble& e, std::ostream& os) {
  e.validate();
  const std::size_t d = e.paths.front().dim();
  const std::size_t N = e.grid().steps();
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(d));
  put_u64(os, N);
  put_u64(os, e.size());
  put_u64(os, e.seed);
  put_u64(os, e.first_stream);
  for (double t : e.grid().times()) put_f64(os, t);
  for (const Path& p : e.paths)
    os.write(reinterpret_cast<const char*>(p.values().data()),
             static_cast<std::streamsize>(p.values().size() * sizeof(double)));
  os.write(reinterpret_cast<const char*>(e.weights.data()),
           static_cast<std::streamsize>(e.weights.size() * sizeof(double)));
}

void write_ensemble_binary(const PathEnsemble& e, const std::string& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + file);
  write_ensemble_binary(e, os);
}

PathEnsemble read_ensemble_binary(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("ensemble: bad magic");
  if (get_u32(is) != kVersion) throw std::runtime_error("ensemble: bad version");
  const std::size_t d = get_u32(is);
  const std::size_t N = get_u64(is);
  const std::size_t n = get_u64(is);
  PathEnsemble e;
  e.seed = get_u64(is);
  e.first_stream = get_u64(is);
  std::vector<double> times(N + 1);
  for (double& t : times) t = get_f64(is);
  GridPtr grid = grid_from_times(std::move(times));
  e.paths.assign(n, Path(grid, d));
  for (Path& p : e.paths)
    is.read(reinterpret_cast<char*>(p.values().data()),
            static_cast<std::streamsize>(p.values().size() * sizeof(double)));
  e.weights.assign(n, 0.0);
  is.read(reinterpret_cast<char*>(e.weights.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("ensemble: truncated stream");
  e.validate();
  return e;
}

PathEnsemble read_ensemble_binary(const std::string& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + file);
  return read_ensemble_binary(is);
}

}  // namespace qsa
