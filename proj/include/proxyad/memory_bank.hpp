#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "proxyad/common.hpp"

namespace proxyad {

// Latent features as s x d rows (s = h*w spatial positions).
struct FeatureRows {
  int rows = 0;
  int dim = 0;
  std::vector<double> values;

  FeatureRows() = default;
  FeatureRows(int s, int d)
      : rows(s), dim(d), values(static_cast<std::size_t>(s) * d, 0.0) {}

  double* row(int i) { return values.data() + static_cast<std::size_t>(i) * dim; }
  const double* row(int i) const {
    return values.data() + static_cast<std::size_t>(i) * dim;
  }
};

// k items of dimension d with EMA counters. Invariant after every update:
// items[i] = accum[i] / max(counts[i], kCountFloor).
class MemoryBank {
 public:
  static constexpr double kCountFloor = 1e-5;

  MemoryBank() = default;
  MemoryBank(int k, int d, double gamma);

  int k() const { return k_; }
  int d() const { return d_; }
  double gamma() const { return gamma_; }

  const std::vector<double>& items() const { return items_; }
  const std::vector<double>& counts() const { return counts_; }
  const std::vector<double>& accumulators() const { return accum_; }

  const double* item(int i) const {
    return items_.data() + static_cast<std::size_t>(i) * d_;
  }

  // Nearest-item substitution: each query row is replaced by its closest
  // item in Euclidean distance, ties broken by the smaller index.
  struct Retrieval {
    FeatureRows substituted;
    std::vector<int> assignments;
  };
  Retrieval retrieve(const FeatureRows& queries) const;

  // One EMA step from a batch of rows and their assignments:
  //   N_i <- N_i*g + n_i*(1-g),  e_i <- e_i*g + S_i*(1-g),
  //   m_i <- e_i / max(N_i, floor).
  // Items with no assigned rows decay through the g terms alone.
  void ema_update(const FeatureRows& rows, std::span<const int> assignments);

  // Direct item initialization used by init_bank and checkpoint loading.
  void set_items(const std::vector<double>& items, const std::vector<double>& counts,
                 const std::vector<double>& accumulators);

  void save(std::ostream& out) const;
  static MemoryBank load(std::istream& in);

 private:
  int k_ = 0;
  int d_ = 0;
  double gamma_ = 0.99;
  std::vector<double> items_;   // k x d
  std::vector<double> counts_;  // k
  std::vector<double> accum_;   // k x d
};

// Items from warmup rows when given (k rows sampled without replacement,
// with replacement when fewer than k are available; counts 1, accum = item),
// otherwise uniform in (-1/sqrt(d), 1/sqrt(d)).
MemoryBank init_bank(int k, int d, double gamma, std::uint64_t seed,
                     const std::optional<FeatureRows>& warmup_features = std::nullopt);

// Pass-through substitution: the forward value is z_tilde and the gradient
// of any downstream loss w.r.t. z equals the gradient w.r.t. z_tilde
// (z + stop_gradient(z_tilde - z)). The backward pair lives with the
// training code; this is the forward contract.
FeatureRows straight_through(const FeatureRows& z, const FeatureRows& z_tilde);

}  // namespace proxyad
