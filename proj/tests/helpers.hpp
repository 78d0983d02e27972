#pragma once

#include <string>
#include <vector>

#include "xcsr/oracle.hpp"
#include "xcsr/rng.hpp"
#include "xcsr/shard.hpp"

namespace testutil {

// 6-vertex multigraph with 12 cells and 17 single-byte edge values 'A'..'Q',
// used as the small worked example throughout the tests. Two rows per rank
// across 3 ranks.
inline xcsr::DenseTriplets sample_multigraph() {
  using E = std::pair<std::pair<std::uint64_t, std::uint64_t>, std::string>;
  const std::vector<E> cells = {
      {{0, 1}, "A"},  {{0, 4}, "BC"}, {{1, 3}, "D"},  {{2, 0}, "EF"},
      {{2, 2}, "G"},  {{3, 5}, "HI"}, {{4, 1}, "J"},  {{4, 3}, "KL"},
      {{4, 4}, "M"},  {{5, 0}, "N"},  {{5, 2}, "OP"}, {{5, 5}, "Q"},
  };
  xcsr::DenseTriplets t;
  t.global_dim = 6;
  t.value_size = 1;
  for (const auto& [rc, payload] : cells) {
    xcsr::TripletEntry e;
    e.row = rc.first;
    e.col = rc.second;
    e.value_count = payload.size();
    e.payload.assign(payload.begin(), payload.end());
    t.entries.push_back(std::move(e));
  }
  return t;
}

inline std::vector<xcsr::XcsrShard> sample_shards() {
  const auto t = sample_multigraph();
  std::vector<xcsr::XcsrShard> shards;
  for (std::uint32_t r = 0; r < 3; ++r) {
    xcsr::DenseTriplets slab;
    slab.global_dim = t.global_dim;
    slab.value_size = t.value_size;
    for (const auto& e : t.entries)
      if (e.row / 2 == r) slab.entries.push_back(e);
    shards.push_back(xcsr::from_triplets(slab, 2 * r, 2, xcsr::View::Row));
  }
  return shards;
}

struct RandomShardOptions {
  std::uint64_t max_dim = 64;
  std::uint64_t max_cols_per_line = 16;
  std::uint64_t max_value_count = 6;
  std::vector<std::uint64_t> value_sizes = {1, 4, 128};
  bool random_view = false;
};

// Random valid shard owning a random interval of a random-dimension matrix.
inline xcsr::XcsrShard random_shard(xcsr::DetRng& rng,
                                    const RandomShardOptions& opt = {}) {
  const std::uint64_t dim = rng.uniform(0, opt.max_dim);
  const std::uint64_t start = dim == 0 ? 0 : rng.uniform(0, dim - 1);
  const std::uint64_t count = dim == 0 ? 0 : rng.uniform(0, dim - start);
  const std::uint64_t vs =
      opt.value_sizes[rng.uniform(0, opt.value_sizes.size() - 1)];

  xcsr::DenseTriplets t;
  t.global_dim = dim;
  t.value_size = vs;
  for (std::uint64_t row = start; row < start + count; ++row) {
    const std::uint64_t cols =
        rng.uniform(0, std::min(opt.max_cols_per_line, dim));
    for (std::uint64_t col : rng.sample_sorted(dim, cols)) {
      xcsr::TripletEntry e;
      e.row = row;
      e.col = col;
      e.value_count = rng.uniform(1, opt.max_value_count);
      e.payload.resize(e.value_count * vs);
      rng.fill_bytes(e.payload);
      t.entries.push_back(std::move(e));
    }
  }
  const xcsr::View view = opt.random_view && rng.uniform(0, 1) == 1
                              ? xcsr::View::Column
                              : xcsr::View::Row;
  return xcsr::from_triplets(t, start, count, view);
}

// Random R-rank dataset whose shards cover [0, dim) evenly.
inline xcsr::Generated random_dataset(std::uint64_t seed, std::uint32_t ranks,
                                      std::uint64_t max_dim = 64,
                                      std::uint64_t max_cols = 16,
                                      std::uint64_t value_size = 4) {
  xcsr::DetRng rng(seed);
  xcsr::GenSpec spec;
  spec.mode = xcsr::GenSpec::Mode::Heterogeneous;
  spec.global_dim = rng.uniform(0, max_dim);
  spec.ranks = ranks;
  spec.cols_min = 0;
  spec.cols_max = std::min(max_cols, spec.global_dim);
  spec.value_count_mean = 3.0;
  spec.value_size = value_size;
  spec.seed = seed * 1000003 + 17;
  return xcsr::generate(spec);
}

}  // namespace testutil
