#include "bdsde/noise.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>

#include "bdsde/parallel.hpp"

namespace bdsde {

namespace {

constexpr std::uint64_t kOuterTag = 0xB0B0B0B0B0B0B0B0ull;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Key of the substream for (seed, b, w); w == kOuterTag selects the B stream.
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t b, std::uint64_t w) {
  return splitmix(splitmix(splitmix(seed) ^ b) ^ w);
}

void fill_normals(std::uint64_t key, double scale, std::span<double> out) {
  std::mt19937_64 engine(key);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& x : out) x = scale * normal(engine);
}

std::size_t checked_mul(std::size_t a, std::size_t b, bool& overflow) {
  if (a != 0 && b > static_cast<std::size_t>(-1) / a) overflow = true;
  return a * b;
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) throw std::runtime_error("read_bundle: truncated input");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

constexpr char kMagic[8] = {'B', 'D', 'S', 'D', 'E', 'P', 'B', '1'};

}  // namespace

ResourceError::ResourceError(const std::string& what, std::size_t required_bytes)
    : std::length_error(what), required_(required_bytes) {}

PathBundle::PathBundle(TimeGrid grid, BundleShape shape, std::uint64_t seed)
    : grid_(grid), shape_(shape), seed_(seed) {
  if (shape.d < 1 || shape.l < 1 || shape.outer < 1 || shape.inner < 1) {
    throw std::invalid_argument("PathBundle: all dimensions and counts must be >= 1");
  }
  const std::size_t n = static_cast<std::size_t>(grid.steps());
  dw_.assign(static_cast<std::size_t>(shape.outer) * shape.inner * n * shape.d, 0.0);
  db_.assign(static_cast<std::size_t>(shape.outer) * n * shape.l, 0.0);
}

std::span<const double> PathBundle::dw_path(int b, int w) const {
  const std::size_t len = static_cast<std::size_t>(grid_.steps()) * shape_.d;
  return std::span<const double>(dw_).subspan((static_cast<std::size_t>(b) * shape_.inner + w) * len, len);
}

std::span<const double> PathBundle::db_path(int b) const {
  const std::size_t len = static_cast<std::size_t>(grid_.steps()) * shape_.l;
  return std::span<const double>(db_).subspan(static_cast<std::size_t>(b) * len, len);
}

std::vector<double> inner_stream(const TimeGrid& grid, int d, std::uint64_t seed, int b, int w) {
  std::vector<double> out(static_cast<std::size_t>(grid.steps()) * d);
  fill_normals(stream_key(seed, static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(w)),
               std::sqrt(grid.dt()), out);
  return out;
}

std::vector<double> outer_stream(const TimeGrid& grid, int l, std::uint64_t seed, int b) {
  std::vector<double> out(static_cast<std::size_t>(grid.steps()) * l);
  fill_normals(stream_key(seed, static_cast<std::uint64_t>(b), kOuterTag), std::sqrt(grid.dt()), out);
  return out;
}

PathBundle generate_paths(const TimeGrid& grid, const BundleShape& shape, std::uint64_t seed,
                          const NoiseOptions& opts) {
  if (shape.d < 1 || shape.l < 1 || shape.outer < 1 || shape.inner < 1) {
    throw std::invalid_argument("generate_paths: all dimensions and counts must be >= 1");
  }
  bool overflow = false;
  const std::size_t n = static_cast<std::size_t>(grid.steps());
  std::size_t w_count = checked_mul(checked_mul(checked_mul(shape.outer, shape.inner, overflow), n, overflow),
                                    shape.d, overflow);
  std::size_t b_count = checked_mul(checked_mul(shape.outer, n, overflow), shape.l, overflow);
  std::size_t bytes = checked_mul(w_count + b_count, sizeof(double), overflow);
  if (overflow || bytes > opts.memory_budget_bytes) {
    throw ResourceError("generate_paths: ensemble needs " +
                            (overflow ? std::string("more than SIZE_MAX") : std::to_string(bytes)) +
                            " bytes, budget is " + std::to_string(opts.memory_budget_bytes),
                        overflow ? static_cast<std::size_t>(-1) : bytes);
  }

  PathBundle bundle(grid, shape, seed);
  const double scale = std::sqrt(grid.dt());
  const std::size_t wlen = n * shape.d, blen = n * shape.l;
  auto dw = bundle.dw_mut();
  auto db = bundle.db_mut();
  parallel_for(static_cast<std::size_t>(shape.outer), opts.threads, [&](std::size_t b) {
    fill_normals(stream_key(seed, b, kOuterTag), scale, db.subspan(b * blen, blen));
    for (int w = 0; w < shape.inner; ++w) {
      const std::size_t off = (b * shape.inner + w) * wlen;
      fill_normals(stream_key(seed, b, static_cast<std::uint64_t>(w)), scale, dw.subspan(off, wlen));
    }
  });
  return bundle;
}

double PathValues::w_at(int b, int w_idx, int i, int k) const {
  return w[((static_cast<std::size_t>(b) * shape.inner + w_idx) * nodes + i) * shape.d + k];
}

double PathValues::tail_at(int b, int i, int j) const {
  return b_tail[(static_cast<std::size_t>(b) * nodes + i) * shape.l + j];
}

PathView PathValues::w_path(int b, int w_idx) const {
  const std::size_t len = static_cast<std::size_t>(nodes) * shape.d;
  return PathView{std::span<const double>(w).subspan((static_cast<std::size_t>(b) * shape.inner + w_idx) * len, len),
                  shape.d};
}

void cumulate_w(const PathBundle& bundle, int b, int w, std::span<double> out) {
  const int d = bundle.shape().d;
  const int n = bundle.grid().steps();
  const auto inc = bundle.dw_path(b, w);
  for (int k = 0; k < d; ++k) out[k] = 0.0;
  for (int i = 1; i <= n; ++i) {
    for (int k = 0; k < d; ++k) {
      out[static_cast<std::size_t>(i) * d + k] =
          out[static_cast<std::size_t>(i - 1) * d + k] + inc[static_cast<std::size_t>(i - 1) * d + k];
    }
  }
}

PathValues cumulate(const PathBundle& bundle) {
  const auto& s = bundle.shape();
  const int n = bundle.grid().steps();
  PathValues pv;
  pv.shape = s;
  pv.nodes = n + 1;
  pv.w.assign(static_cast<std::size_t>(s.outer) * s.inner * pv.nodes * s.d, 0.0);
  pv.b_tail.assign(static_cast<std::size_t>(s.outer) * pv.nodes * s.l, 0.0);
  const std::size_t wlen = static_cast<std::size_t>(pv.nodes) * s.d;
  for (int b = 0; b < s.outer; ++b) {
    for (int w = 0; w < s.inner; ++w) {
      cumulate_w(bundle, b, w,
                 std::span<double>(pv.w).subspan((static_cast<std::size_t>(b) * s.inner + w) * wlen, wlen));
    }
    const auto inc = bundle.db_path(b);
    double* tail = pv.b_tail.data() + static_cast<std::size_t>(b) * pv.nodes * s.l;
    for (int i = n - 1; i >= 0; --i) {
      for (int j = 0; j < s.l; ++j) {
        tail[static_cast<std::size_t>(i) * s.l + j] =
            tail[static_cast<std::size_t>(i + 1) * s.l + j] + inc[static_cast<std::size_t>(i) * s.l + j];
      }
    }
  }
  return pv;
}

void write_bundle(std::ostream& os, const PathBundle& bundle) {
  os.write(kMagic, sizeof kMagic);
  put_f64(os, bundle.grid().horizon());
  put_u64(os, static_cast<std::uint64_t>(bundle.grid().steps()));
  const auto& s = bundle.shape();
  put_u64(os, static_cast<std::uint64_t>(s.d));
  put_u64(os, static_cast<std::uint64_t>(s.l));
  put_u64(os, static_cast<std::uint64_t>(s.outer));
  put_u64(os, static_cast<std::uint64_t>(s.inner));
  put_u64(os, bundle.seed());
  for (double v : bundle.dw()) put_f64(os, v);
  for (double v : bundle.db()) put_f64(os, v);
  if (!os) throw std::runtime_error("write_bundle: stream error");
}

PathBundle read_bundle(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("read_bundle: bad magic");
  }
  const double T = get_f64(is);
  const auto N = get_u64(is);
  BundleShape s;
  s.d = static_cast<int>(get_u64(is));
  s.l = static_cast<int>(get_u64(is));
  s.outer = static_cast<int>(get_u64(is));
  s.inner = static_cast<int>(get_u64(is));
  const auto seed = get_u64(is);
  PathBundle bundle(TimeGrid(T, static_cast<int>(N)), s, seed);
  for (double& v : bundle.dw_mut()) v = get_f64(is);
  for (double& v : bundle.db_mut()) v = get_f64(is);
  return bundle;
}

}  // namespace bdsde
