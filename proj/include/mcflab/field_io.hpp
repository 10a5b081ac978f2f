#ifndef MCFLAB_FIELD_IO_HPP
#define MCFLAB_FIELD_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "mcflab/errors.hpp"
#include "mcflab/grid.hpp"

namespace mcflab {

// Field dumps: <path> holds little-endian float64 values in node order (x fastest);
// <path>.meta holds one line "dim=2 counts=n0,n1 origin=x0,x1 spacing=h time=t".

inline std::string field_meta_line(const ScalarField& f) {
  const Grid& g = f.grid;
  std::ostringstream os;
  os.precision(17);
  os << "dim=" << g.dim() << " counts=";
  for (int a = 0; a < g.dim(); ++a) os << (a ? "," : "") << g.counts()[a];
  os << " origin=";
  for (int a = 0; a < g.dim(); ++a) os << (a ? "," : "") << g.origin()[a];
  os << " spacing=" << g.spacing() << " time=" << f.time;
  return os.str();
}

inline void write_field(const ScalarField& f, const std::string& path) {
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  for (double v : f.values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    bin.write(buf, 8);
  }
  std::ofstream meta(path + ".meta");
  if (!meta) throw Error(ErrorKind::Io, "cannot open " + path + ".meta for writing");
  meta << field_meta_line(f) << '\n';
}

namespace detail {

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

}  // namespace detail

inline ScalarField read_field(const std::string& path) {
  std::ifstream meta(path + ".meta");
  if (!meta) throw Error(ErrorKind::Io, "missing metadata " + path + ".meta");
  std::string line;
  std::getline(meta, line);
  std::istringstream is(line);
  std::string tok;
  int dim = 0;
  std::vector<double> counts, origin;
  double h = 0.0, t = 0.0;
  try {
    while (is >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::Parse, "bad metadata token '" + tok + "'");
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "dim") dim = std::stoi(val);
      else if (key == "counts") counts = detail::parse_list(val);
      else if (key == "origin") origin = detail::parse_list(val);
      else if (key == "spacing") h = std::stod(val);
      else if (key == "time") t = std::stod(val);
    }
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::Parse, "malformed metadata in " + path + ".meta");
  }
  if ((dim != 2 && dim != 3) || static_cast<int>(counts.size()) != dim || static_cast<int>(origin.size()) != dim)
    throw Error(ErrorKind::Parse, "incomplete metadata in " + path + ".meta");
  std::array<int, 3> n{1, 1, 1};
  Vec o(dim);
  for (int a = 0; a < dim; ++a) {
    n[a] = static_cast<int>(counts[a]);
    o[a] = origin[a];
  }
  Grid g(dim, o, h, n);
  ScalarField f(g, 0.0, t);
  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw Error(ErrorKind::Io, "cannot open " + path);
  for (auto& v : f.values) {
    char buf[8];
    if (!bin.read(buf, 8)) throw Error(ErrorKind::Io, "truncated field file " + path);
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
  }
  return f;
}

}  // namespace mcflab

#endif  // MCFLAB_FIELD_IO_HPP
