#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "tvol/model.hpp"

namespace tvol {

/// Increments of (X1, X2) over the cells [(k-1)/n, k/n], k = 1..n (stored at
/// index k-1), with the drift, diffusion and jump parts kept separately.
struct SampledPath {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<double> dx1, dx2;
  std::vector<double> dd1, dd2;  // diffusion
  std::vector<double> db1, db2;  // drift
  std::vector<double> dj1, dj2;  // jumps
  std::vector<std::uint32_t> jump_counts1, jump_counts2;

  void resize(std::size_t cells);
};

/// Realized jump contributions to the quadratic (co)variation over [0, 1].
struct JumpTruth {
  double sum_sq1 = 0.0;    // sum over jumps of (dJ1)^2
  double sum_sq2 = 0.0;    // sum over jumps of (dJ2)^2
  double sum_cross = 0.0;  // sum over common jump times of dJ1 * dJ2
};

/// Per-cell exact moments of the continuous part on the uniform n-grid.
///
/// Build once per (model, n) and reuse across paths; simulate_path(model, n,
/// seed) builds one internally.
class GridMoments {
 public:
  GridMoments(const ModelSpec& model, std::size_t n);

  const ModelSpec& model() const { return model_; }
  std::size_t n() const { return var1_.size(); }

  double var1(std::size_t k) const { return var1_[k]; }
  double var2(std::size_t k) const { return var2_[k]; }
  double cov(std::size_t k) const { return cov_[k]; }
  double drift1(std::size_t k) const { return drift1_[k]; }
  double drift2(std::size_t k) const { return drift2_[k]; }

  /// Lower Cholesky factor [[l11, 0], [l21, l22]] of the cell covariance.
  double l11(std::size_t k) const { return l11_[k]; }
  double l21(std::size_t k) const { return l21_[k]; }
  double l22(std::size_t k) const { return l22_[k]; }

 private:
  ModelSpec model_;
  std::vector<double> var1_, var2_, cov_, drift1_, drift2_;
  std::vector<double> l11_, l21_, l22_;
};

struct SimulationResult {
  SampledPath path;
  JumpTruth truth;
};

/// Exact-in-law simulation of one path.
///
/// Per cell: (dd1, dd2) ~ N(0, exact cell covariance), dbl = exact drift
/// integral, jump counts ~ Poisson(lambda_l / n) (one shared count under
/// CommonClock) with i.i.d. sizes summed. Deterministic in (model, n, seed).
/// Variates are consumed in a fixed order per cell: two normals for the
/// diffusion, then the count(s), then the sizes of leg 1 and leg 2.
SimulationResult simulate_path(const ModelSpec& model, std::size_t n, std::uint64_t seed);

/// Same as above but reusing precomputed grid moments; `out` is overwritten
/// (its buffers are reused across calls).
void simulate_path(const GridMoments& grid, std::uint64_t seed, SimulationResult& out);

/// CSV dump with header k,dx1,dx2,dd1,dd2,db1,db2,dj1,dj2,jc1,jc2 (k from 1),
/// preceded by a `# seed=<seed> n=<n>` comment line.
void write_path_csv(std::ostream& os, const SampledPath& path);

/// Reads a path CSV written by write_path_csv (or any CSV with at least the
/// k, dx1, dx2 columns; missing decomposition columns are left zero).
/// Lines starting with '#' are skipped.
SampledPath read_path_csv(std::istream& is);
SampledPath read_path_csv(const std::filesystem::path& file);

}  // namespace tvol
