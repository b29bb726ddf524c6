#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdsde/core.hpp"

namespace bdsde {

struct BundleShape {
  int d = 1;
  int l = 1;
  int outer = 1;  // M_B: backward (B) paths
  int inner = 1;  // M_W: forward (W) paths per B path
};

/// Raised when an ensemble would exceed the configured memory budget.
class ResourceError : public std::length_error {
 public:
  ResourceError(const std::string& what, std::size_t required_bytes);
  std::size_t required_bytes() const noexcept { return required_; }

 private:
  std::size_t required_;
};

/// Brownian increments for W (outer, inner, node, d) and B (outer, node, l).
/// Every inner W path of an outer index sees the same B increments.
class PathBundle {
 public:
  PathBundle(TimeGrid grid, BundleShape shape, std::uint64_t seed);

  const TimeGrid& grid() const noexcept { return grid_; }
  const BundleShape& shape() const noexcept { return shape_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::span<const double> dw() const noexcept { return dw_; }
  std::span<const double> db() const noexcept { return db_; }
  std::span<double> dw_mut() noexcept { return dw_; }
  std::span<double> db_mut() noexcept { return db_; }

  /// Increments of one inner path: N * d values, node-major.
  std::span<const double> dw_path(int b, int w) const;
  /// B increments of one outer path: N * l values, node-major.
  std::span<const double> db_path(int b) const;

  double dw_at(int b, int w, int i, int k) const { return dw_path(b, w)[static_cast<std::size_t>(i) * shape_.d + k]; }
  double db_at(int b, int i, int j) const { return db_path(b)[static_cast<std::size_t>(i) * shape_.l + j]; }

 private:
  TimeGrid grid_;
  BundleShape shape_;
  std::uint64_t seed_;
  std::vector<double> dw_, db_;
};

struct NoiseOptions {
  std::size_t memory_budget_bytes = std::size_t{4} << 30;
  int threads = 1;
};

/// Increments are N(0, dt); the stream of path (b, w) depends on (seed, b, w) only.
PathBundle generate_paths(const TimeGrid& grid, const BundleShape& shape, std::uint64_t seed,
                          const NoiseOptions& opts = {});

/// Regenerates the W increments of a single path, bit-identical to the bundle slice.
std::vector<double> inner_stream(const TimeGrid& grid, int d, std::uint64_t seed, int b, int w);
/// Regenerates the B increments of a single outer path.
std::vector<double> outer_stream(const TimeGrid& grid, int l, std::uint64_t seed, int b);

/// Cumulated paths: W_{t_i} = sum_{j<i} dW_j and tails B_T - B_{t_i} = sum_{j>=i} dB_j.
struct PathValues {
  BundleShape shape;
  int nodes = 0;               // N + 1
  std::vector<double> w;       // (outer, inner, node, d)
  std::vector<double> b_tail;  // (outer, node, l); node N is zero

  double w_at(int b, int w_idx, int i, int k) const;
  double tail_at(int b, int i, int j) const;
  PathView w_path(int b, int w_idx) const;
  /// B_T for outer path b (equals the tail at node 0).
  double b_terminal(int b, int j) const { return tail_at(b, 0, j); }
};

PathValues cumulate(const PathBundle& bundle);

/// W values of one inner path; `out` has (N+1)*d entries.
void cumulate_w(const PathBundle& bundle, int b, int w, std::span<double> out);

/// Binary dump: magic "BDSDEPB1", T, N, d, l, M_B, M_W, seed, then W increments
/// in (outer, inner, node, coordinate) order and B increments in
/// (outer, node, coordinate) order, all little-endian.
void write_bundle(std::ostream& os, const PathBundle& bundle);
PathBundle read_bundle(std::istream& is);

}  // namespace bdsde
