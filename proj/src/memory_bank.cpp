#include "proxyad/memory_bank.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

namespace proxyad {

namespace {
constexpr char kBankMagic[16] = {'P', 'X', 'A', 'D', 'M', 'E', 'M', 'B',
                                 'A', 'N', 'K', '0', '0', '0', '0', '1'};
}

MemoryBank::MemoryBank(int k, int d, double gamma)
    : k_(k), d_(d), gamma_(gamma),
      items_(static_cast<std::size_t>(k) * d, 0.0),
      counts_(k, 0.0),
      accum_(static_cast<std::size_t>(k) * d, 0.0) {
  if (k < 1 || d < 1) throw ArgumentError("memory bank: k and d must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw ArgumentError("memory bank: gamma must lie in (0,1)");
  }
}

MemoryBank::Retrieval MemoryBank::retrieve(const FeatureRows& queries) const {
  if (queries.dim != d_) {
    throw ArgumentError("memory bank: query dimension mismatch");
  }
  Retrieval out;
  out.substituted = FeatureRows(queries.rows, d_);
  out.assignments.resize(queries.rows);

  for (int i = 0; i < queries.rows; ++i) {
    const double* q = queries.row(i);
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int j = 0; j < k_; ++j) {
      const double* m = item(j);
      double dist = 0.0;
      for (int t = 0; t < d_; ++t) {
        const double diff = q[t] - m[t];
        dist += diff * diff;
      }
      if (dist < best_dist) {  // strict: the lower index wins ties
        best_dist = dist;
        best = j;
      }
    }
    out.assignments[i] = best;
    std::copy_n(item(best), d_, out.substituted.row(i));
  }
  return out;
}

void MemoryBank::ema_update(const FeatureRows& rows,
                            std::span<const int> assignments) {
  if (rows.dim != d_) throw ArgumentError("memory bank: row dimension mismatch");
  if (assignments.size() != static_cast<std::size_t>(rows.rows)) {
    throw ArgumentError("memory bank: stale assignments (length mismatch)");
  }
  std::vector<double> n(k_, 0.0);
  std::vector<double> sums(static_cast<std::size_t>(k_) * d_, 0.0);
  for (int i = 0; i < rows.rows; ++i) {
    const int j = assignments[i];
    if (j < 0 || j >= k_) throw ArgumentError("memory bank: assignment out of range");
    n[j] += 1.0;
    const double* r = rows.row(i);
    double* s = sums.data() + static_cast<std::size_t>(j) * d_;
    for (int t = 0; t < d_; ++t) s[t] += r[t];
  }
  for (int j = 0; j < k_; ++j) {
    counts_[j] = counts_[j] * gamma_ + n[j] * (1.0 - gamma_);
    double* e = accum_.data() + static_cast<std::size_t>(j) * d_;
    const double* s = sums.data() + static_cast<std::size_t>(j) * d_;
    double* m = items_.data() + static_cast<std::size_t>(j) * d_;
    const double denom = std::max(counts_[j], kCountFloor);
    for (int t = 0; t < d_; ++t) {
      e[t] = e[t] * gamma_ + s[t] * (1.0 - gamma_);
      m[t] = e[t] / denom;
    }
  }
}

void MemoryBank::set_items(const std::vector<double>& items,
                           const std::vector<double>& counts,
                           const std::vector<double>& accumulators) {
  if (items.size() != static_cast<std::size_t>(k_) * d_ ||
      counts.size() != static_cast<std::size_t>(k_) ||
      accumulators.size() != static_cast<std::size_t>(k_) * d_) {
    throw ArgumentError("memory bank: set_items size mismatch");
  }
  items_ = items;
  counts_ = counts;
  accum_ = accumulators;
}

void MemoryBank::save(std::ostream& out) const {
  out.write(kBankMagic, sizeof(kBankMagic));
  const std::int64_t k = k_, d = d_;
  out.write(reinterpret_cast<const char*>(&k), sizeof(k));
  out.write(reinterpret_cast<const char*>(&d), sizeof(d));
  out.write(reinterpret_cast<const char*>(&gamma_), sizeof(gamma_));
  out.write(reinterpret_cast<const char*>(items_.data()),
            static_cast<std::streamsize>(items_.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(counts_.data()),
            static_cast<std::streamsize>(counts_.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(accum_.data()),
            static_cast<std::streamsize>(accum_.size() * sizeof(double)));
}

MemoryBank MemoryBank::load(std::istream& in) {
  char magic[16];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kBankMagic, sizeof(magic)) != 0) {
    throw DataError("memory bank: bad magic/version header");
  }
  std::int64_t k = 0, d = 0;
  double gamma = 0.0;
  in.read(reinterpret_cast<char*>(&k), sizeof(k));
  in.read(reinterpret_cast<char*>(&d), sizeof(d));
  in.read(reinterpret_cast<char*>(&gamma), sizeof(gamma));
  MemoryBank bank(static_cast<int>(k), static_cast<int>(d), gamma);
  in.read(reinterpret_cast<char*>(bank.items_.data()),
          static_cast<std::streamsize>(bank.items_.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(bank.counts_.data()),
          static_cast<std::streamsize>(bank.counts_.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(bank.accum_.data()),
          static_cast<std::streamsize>(bank.accum_.size() * sizeof(double)));
  if (!in) throw DataError("memory bank: truncated blob");
  return bank;
}

MemoryBank init_bank(int k, int d, double gamma, std::uint64_t seed,
                     const std::optional<FeatureRows>& warmup_features) {
  MemoryBank bank(k, d, gamma);
  std::vector<double> items(static_cast<std::size_t>(k) * d);
  std::vector<double> counts(k, 0.0);
  Rng rng(seed);

  if (warmup_features && warmup_features->rows > 0) {
    const FeatureRows& rows = *warmup_features;
    if (rows.dim != d) throw ArgumentError("init_bank: warmup dimension mismatch");
    std::vector<int> pick(k);
    if (rows.rows >= k) {
      // Sample k distinct rows: partial Fisher-Yates over row indices.
      std::vector<int> idx(rows.rows);
      for (int i = 0; i < rows.rows; ++i) idx[i] = i;
      for (int i = 0; i < k; ++i) {
        const int j = static_cast<int>(rng.uniform_int(i, rows.rows - 1));
        std::swap(idx[i], idx[j]);
        pick[i] = idx[i];
      }
    } else {
      for (int i = 0; i < k; ++i) {
        pick[i] = static_cast<int>(rng.uniform_int(0, rows.rows - 1));
      }
    }
    for (int i = 0; i < k; ++i) {
      std::copy_n(rows.row(pick[i]), d, items.begin() + static_cast<std::ptrdiff_t>(i) * d);
    }
    std::fill(counts.begin(), counts.end(), 1.0);
  } else {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& v : items) v = rng.uniform(-bound, bound);
    // Unit counts keep m = e / max(N, floor) consistent with e = m.
    std::fill(counts.begin(), counts.end(), 1.0);
  }

  std::vector<double> accum = items;  // e_i = m_i * N_i with N_i = 1
  bank.set_items(items, counts, accum);
  return bank;
}

FeatureRows straight_through(const FeatureRows& z, const FeatureRows& z_tilde) {
  if (z.rows != z_tilde.rows || z.dim != z_tilde.dim) {
    throw ArgumentError("straight_through: shape mismatch");
  }
  return z_tilde;
}

}  // namespace proxyad
