#include <bit>
#include <cstring>
#include <fstream>

#include "kkl/transform.hpp"

namespace kkl {

static_assert(std::endian::native == std::endian::little,
              "table files are little-endian; add byte swapping for this host");

namespace {

constexpr char kMagic[8] = {'K', 'K', 'L', 'T', 'A', 'B', 'L', 'E'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ofstream& os) : os_(os) {}
  template <typename T>
  void put(T v) {
    os_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }

 private:
  std::ofstream& os_;
};

class Reader {
 public:
  explicit Reader(std::ifstream& is) : is_(is) {}
  template <typename T>
  T get() {
    T v{};
    is_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is_) throw std::runtime_error("transform table: truncated file");
    return v;
  }

 private:
  std::ifstream& is_;
};

}  // namespace

void save_table(const std::string& path, const TransformTable& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os.write(kMagic, sizeof kMagic);
  Writer w(os);
  w.put(kVersion);
  w.put(static_cast<std::uint32_t>(t.n));
  w.put(static_cast<std::uint32_t>(t.m));
  w.put(static_cast<std::uint32_t>(t.p));
  w.put(t.fingerprint);
  w.put(t.config_hash);
  w.put(t.seed);
  w.put(t.horizon);
  w.put(t.tol);
  for (int a = 0; a < t.grid.dim(); ++a) {
    w.put(static_cast<std::uint32_t>(t.grid.counts[a]));
    w.put(std::uint32_t{0});
    w.put(t.grid.lower[a]);
    w.put(t.grid.upper[a]);
  }
  for (int i = 0; i < t.m; ++i) {
    w.put(t.eigenvalues[i].real());
    w.put(t.eigenvalues[i].imag());
  }
  w.put(static_cast<std::uint64_t>(t.values.size()));
  for (const auto& v : t.values) {
    for (int i = 0; i < t.m; ++i) {
      for (int j = 0; j < t.p; ++j) {
        w.put(v(i, j).real());
        w.put(v(i, j).imag());
      }
    }
  }
  if (!os) throw std::runtime_error("error while writing '" + path + "'");
}

TransformTable load_table(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("'" + path + "' is not a transform table");
  }
  Reader r(is);
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) {
    throw std::runtime_error("unsupported transform table version " + std::to_string(version));
  }
  TransformTable t;
  t.n = static_cast<int>(r.get<std::uint32_t>());
  t.m = static_cast<int>(r.get<std::uint32_t>());
  t.p = static_cast<int>(r.get<std::uint32_t>());
  if (t.n < 1 || t.m < 1 || t.p < 1 || t.n > 64 || t.m > 256 || t.p > 64) {
    throw std::runtime_error("transform table: implausible dimensions");
  }
  t.fingerprint = r.get<std::uint64_t>();
  t.config_hash = r.get<std::uint64_t>();
  t.seed = r.get<std::uint64_t>();
  t.horizon = r.get<double>();
  t.tol = r.get<double>();
  t.grid.counts.resize(t.n);
  t.grid.lower.resize(t.n);
  t.grid.upper.resize(t.n);
  for (int a = 0; a < t.n; ++a) {
    t.grid.counts[a] = static_cast<int>(r.get<std::uint32_t>());
    r.get<std::uint32_t>();
    t.grid.lower[a] = r.get<double>();
    t.grid.upper[a] = r.get<double>();
  }
  t.eigenvalues.resize(t.m);
  for (int i = 0; i < t.m; ++i) {
    const double re = r.get<double>();
    const double im = r.get<double>();
    t.eigenvalues[i] = Complex(re, im);
  }
  const auto count = r.get<std::uint64_t>();
  if (count != t.grid.size()) throw std::runtime_error("transform table: node count mismatch");
  t.values.assign(count, ComplexMatrix(t.m, t.p));
  for (auto& v : t.values) {
    for (int i = 0; i < t.m; ++i) {
      for (int j = 0; j < t.p; ++j) {
        const double re = r.get<double>();
        const double im = r.get<double>();
        v(i, j) = Complex(re, im);
      }
    }
  }
  return t;
}

}  // namespace kkl
