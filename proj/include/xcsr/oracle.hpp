#pragma once

#include <span>
#include <utility>

#include "xcsr/shard.hpp"

namespace xcsr {

/// Dataset recipe. Heterogeneous draws a per-row column count from
/// U[cols_min, cols_max] and per-cell value counts as 1 + Poisson(mean - 1);
/// Balanced places cols_fixed cells per row with value_count_fixed values
/// each. The seed fixes all randomness.
struct GenSpec {
  enum class Mode { Heterogeneous, Balanced };

  Mode mode = Mode::Heterogeneous;
  std::uint64_t global_dim = 0;
  std::uint32_t ranks = 1;
  std::uint64_t cols_min = 0;
  std::uint64_t cols_max = 0;
  std::uint64_t cols_fixed = 0;
  double value_count_mean = 1.0;
  std::uint64_t value_count_fixed = 1;
  std::uint64_t value_size = 1;
  std::uint64_t seed = 0;
};

/// Brute-force reference transpose: swaps row/col on every entry and
/// re-sorts. Involutory; payloads untouched.
DenseTriplets oracle_transpose(const DenseTriplets& t);

/// Even row split: first (dim mod ranks) ranks get one extra row. Returns
/// (start, count) per rank.
std::vector<std::pair<std::uint64_t, std::uint64_t>> even_intervals(
    std::uint64_t dim, std::uint32_t ranks);

struct Generated {
  std::vector<XcsrShard> shards;  // row view, one per rank
  DenseTriplets triplets;         // the same dataset, gathered
};

/// Seed-deterministic dataset generation; the shards always validate and
/// partition [0, global_dim) exactly. Throws ConfigError on infeasible
/// specs.
Generated generate(const GenSpec& spec);

/// Validates the cover/disjoint row partition (all same view, value size and
/// dimension) and concatenates the shards into one sorted triplet set.
/// Throws PartitionError on overlap, gap or inconsistent headers.
DenseTriplets gather_shards(std::span<const XcsrShard> shards);

struct MatchReport {
  bool ok = false;
  std::string summary;
  std::vector<std::string> differences;  // at most the first 10
};

/// Gathers the shards and compares them against `expected` as sets of
/// (row, col, value payload). Throws PartitionError on partition violations;
/// content mismatches land in the report.
MatchReport gather_and_compare(std::span<const XcsrShard> shards,
                               const DenseTriplets& expected);

/// Compares two triplet sets directly (same report shape).
MatchReport compare_triplets(const DenseTriplets& got, const DenseTriplets& expected);

}  // namespace xcsr
