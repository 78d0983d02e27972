#include "xcsr/oracle.hpp"

#include <algorithm>
#include <sstream>

#include "xcsr/rng.hpp"

namespace xcsr {
namespace {

void sort_entries(std::vector<TripletEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::tie(a.row, a.col) < std::tie(b.row, b.col);
  });
}

std::string cell_name(std::uint64_t r, std::uint64_t c) {
  return "(" + std::to_string(r) + "," + std::to_string(c) + ")";
}

}  // namespace

DenseTriplets oracle_transpose(const DenseTriplets& t) {
  DenseTriplets out;
  out.global_dim = t.global_dim;
  out.value_size = t.value_size;
  out.entries = t.entries;
  for (auto& e : out.entries) std::swap(e.row, e.col);
  sort_entries(out.entries);
  return out;
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> even_intervals(
    std::uint64_t dim, std::uint32_t ranks) {
  if (ranks == 0) throw ConfigError("at least one rank is required");
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  out.reserve(ranks);
  const std::uint64_t base = dim / ranks;
  const std::uint64_t extra = dim % ranks;
  std::uint64_t start = 0;
  for (std::uint32_t r = 0; r < ranks; ++r) {
    const std::uint64_t count = base + (r < extra ? 1 : 0);
    out.emplace_back(start, count);
    start += count;
  }
  return out;
}

Generated generate(const GenSpec& spec) {
  if (spec.ranks == 0) throw ConfigError("ranks must be >= 1");
  if (spec.value_size == 0) throw ConfigError("value_size must be >= 1");
  // column bounds are vacuous for an empty matrix (no rows to fill)
  if (spec.mode == GenSpec::Mode::Balanced) {
    if (spec.global_dim > 0 && spec.cols_fixed > spec.global_dim)
      throw ConfigError("cols_fixed " + std::to_string(spec.cols_fixed) +
                        " exceeds global_dim " + std::to_string(spec.global_dim));
    if (spec.value_count_fixed == 0)
      throw ConfigError("value_count_fixed must be >= 1");
  } else {
    if (spec.cols_min > spec.cols_max)
      throw ConfigError("cols_min exceeds cols_max");
    if (spec.global_dim > 0 && spec.cols_max > spec.global_dim)
      throw ConfigError("cols_max " + std::to_string(spec.cols_max) +
                        " exceeds global_dim " + std::to_string(spec.global_dim));
    if (spec.value_count_mean < 1.0)
      throw ConfigError("value_count_mean must be >= 1");
  }

  DetRng rng(spec.seed);
  Generated out;
  out.triplets.global_dim = spec.global_dim;
  out.triplets.value_size = spec.value_size;

  for (std::uint64_t row = 0; row < spec.global_dim; ++row) {
    const std::uint64_t cols = spec.mode == GenSpec::Mode::Balanced
                                   ? spec.cols_fixed
                                   : rng.uniform(spec.cols_min, spec.cols_max);
    for (std::uint64_t col : rng.sample_sorted(spec.global_dim, cols)) {
      TripletEntry e;
      e.row = row;
      e.col = col;
      e.value_count = spec.mode == GenSpec::Mode::Balanced
                          ? spec.value_count_fixed
                          : 1 + rng.poisson(spec.value_count_mean - 1.0);
      e.payload.resize(e.value_count * spec.value_size);
      rng.fill_bytes(e.payload);
      out.triplets.entries.push_back(std::move(e));
    }
  }

  out.shards.reserve(spec.ranks);
  auto intervals = even_intervals(spec.global_dim, spec.ranks);
  auto it = out.triplets.entries.begin();
  for (auto [start, count] : intervals) {
    DenseTriplets slab;
    slab.global_dim = spec.global_dim;
    slab.value_size = spec.value_size;
    while (it != out.triplets.entries.end() && it->row < start + count)
      slab.entries.push_back(*it++);
    out.shards.push_back(from_triplets(slab, start, count, View::Row));
  }
  return out;
}

DenseTriplets gather_shards(std::span<const XcsrShard> shards) {
  if (shards.empty()) throw PartitionError("no shards to gather");

  std::vector<std::size_t> order(shards.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return shards[a].major_start < shards[b].major_start;
  });

  const std::uint64_t dim = shards[0].global_dim;
  const std::uint64_t vs = shards[0].value_size;
  const View view = shards[0].view;
  std::uint64_t covered = 0;
  for (std::size_t i : order) {
    const XcsrShard& s = shards[i];
    if (s.global_dim != dim)
      throw PartitionError("shards disagree on global_dim (" +
                           std::to_string(s.global_dim) + " vs " +
                           std::to_string(dim) + ")");
    if (s.value_size != vs)
      throw PartitionError("shards disagree on value_size");
    if (s.view != view) throw PartitionError("shards disagree on view");
    if (s.major_start < covered)
      throw PartitionError("shard intervals overlap at line " +
                           std::to_string(s.major_start));
    if (s.major_start > covered)
      throw PartitionError("shard intervals leave a gap before line " +
                           std::to_string(s.major_start));
    covered += s.major_count;
  }
  if (covered != dim)
    throw PartitionError("shard intervals cover " + std::to_string(covered) +
                         " of " + std::to_string(dim) + " lines");

  DenseTriplets out;
  out.global_dim = dim;
  out.value_size = vs;
  for (std::size_t i : order) {
    auto part = to_triplets(shards[i]);
    out.entries.insert(out.entries.end(),
                       std::make_move_iterator(part.entries.begin()),
                       std::make_move_iterator(part.entries.end()));
  }
  sort_entries(out.entries);
  return out;
}

MatchReport compare_triplets(const DenseTriplets& got, const DenseTriplets& expected) {
  MatchReport report;
  if (got.global_dim != expected.global_dim) {
    report.summary = "global_dim mismatch: " + std::to_string(got.global_dim) +
                     " vs " + std::to_string(expected.global_dim);
    return report;
  }
  if (got.value_size != expected.value_size) {
    report.summary = "value_size mismatch: " + std::to_string(got.value_size) +
                     " vs " + std::to_string(expected.value_size);
    return report;
  }

  auto ge = got.entries;
  auto ee = expected.entries;
  sort_entries(ge);
  sort_entries(ee);

  std::size_t diff_count = 0;
  auto note = [&](const std::string& d) {
    ++diff_count;
    if (report.differences.size() < 10) report.differences.push_back(d);
  };

  std::size_t i = 0, j = 0;
  while (i < ge.size() || j < ee.size()) {
    if (j == ee.size() || (i < ge.size() &&
                           std::tie(ge[i].row, ge[i].col) <
                               std::tie(ee[j].row, ee[j].col))) {
      note("unexpected cell " + cell_name(ge[i].row, ge[i].col));
      ++i;
    } else if (i == ge.size() || std::tie(ee[j].row, ee[j].col) <
                                     std::tie(ge[i].row, ge[i].col)) {
      note("missing cell " + cell_name(ee[j].row, ee[j].col));
      ++j;
    } else {
      if (ge[i].value_count != ee[j].value_count)
        note("cell " + cell_name(ge[i].row, ge[i].col) + ": value_count " +
             std::to_string(ge[i].value_count) + " vs " +
             std::to_string(ee[j].value_count));
      else if (ge[i].payload != ee[j].payload)
        note("cell " + cell_name(ge[i].row, ge[i].col) + ": payload differs");
      ++i;
      ++j;
    }
  }

  report.ok = diff_count == 0;
  std::ostringstream os;
  if (report.ok)
    os << "match: " << ee.size() << " cells";
  else
    os << diff_count << " differing cell" << (diff_count == 1 ? "" : "s")
       << " out of " << std::max(ge.size(), ee.size());
  report.summary = os.str();
  return report;
}

MatchReport gather_and_compare(std::span<const XcsrShard> shards,
                               const DenseTriplets& expected) {
  return compare_triplets(gather_shards(shards), expected);
}

}  // namespace xcsr
