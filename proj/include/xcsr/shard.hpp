#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xcsr/errors.hpp"

namespace xcsr {

/// Storage perspective of a shard: major lines are global rows in row view
/// and global columns in column view. Flipping twice restores the original.
enum class View : std::uint8_t { Row = 0, Column = 1 };

constexpr View flip(View v) { return v == View::Row ? View::Column : View::Row; }

const char* to_string(View v) noexcept;

/// One exchanged cell: its major line id, minor id and the number of values
/// it carries. `row`/`col` name the orientation the cell has on the wire
/// (major first), which for the transpose pipeline is the transposed one.
struct CellMeta {
  std::uint64_t row = 0;
  std::uint64_t col = 0;
  std::uint64_t value_count = 0;

  friend bool operator==(const CellMeta&, const CellMeta&) = default;
};

/// Wire encoding of CellMeta: three u64 little-endian words.
inline constexpr std::size_t kCellMetaWireSize = 24;

/// One rank's slice of a distributed square matrix whose cells hold
/// variable-length lists of fixed-size values (one list entry per parallel
/// edge of the represented multigraph).
///
/// Major lines are stored sparsely: `line_ids` lists the global ids of the
/// nonempty lines in strictly increasing order, `line_cell_counts` the number
/// of cells on each. `major_start`/`major_count` record the contiguous
/// interval of lines this rank owns under the current partition; after a
/// local transpose the stored line ids may fall anywhere in [0, global_dim)
/// while the interval keeps describing the owned slab.
struct XcsrShard {
  View view = View::Row;
  std::uint64_t global_dim = 0;
  std::uint64_t major_start = 0;
  std::uint64_t major_count = 0;
  std::vector<std::uint64_t> line_ids;
  std::vector<std::uint64_t> line_cell_counts;
  std::vector<std::uint64_t> cell_ids;
  std::vector<std::uint64_t> cell_value_counts;
  std::uint64_t value_size = 1;
  std::vector<std::uint8_t> values;

  std::uint64_t total_cells() const { return cell_ids.size(); }
  std::uint64_t total_values() const;

  friend bool operator==(const XcsrShard&, const XcsrShard&) = default;
};

/// Checks every shard invariant. Returns one description per violation,
/// naming the offending array index; empty means the shard is valid.
std::vector<std::string> validate_shard(const XcsrShard& shard);

/// Throws ShardValidationError listing all violations unless the shard is
/// valid.
void require_valid(const XcsrShard& shard);

/// Explicit (row, col, payload) entry of the brute-force representation.
struct TripletEntry {
  std::uint64_t row = 0;
  std::uint64_t col = 0;
  std::uint64_t value_count = 0;
  std::vector<std::uint8_t> payload;  // value_count * value_size bytes

  friend bool operator==(const TripletEntry&, const TripletEntry&) = default;
};

/// Reference representation used by the oracle: a plain entry list, kept
/// sorted by (row, col). No two entries share a (row, col) position.
struct DenseTriplets {
  std::uint64_t global_dim = 0;
  std::uint64_t value_size = 1;
  std::vector<TripletEntry> entries;

  std::uint64_t total_cells() const { return entries.size(); }

  friend bool operator==(const DenseTriplets&, const DenseTriplets&) = default;
};

/// Expands a shard into triplets, reading majors as rows and minors as
/// columns. Entries come out sorted by (row, col).
DenseTriplets to_triplets(const XcsrShard& shard);

/// Rebuilds a shard from triplets. Every entry row (major) must fall inside
/// [major_start, major_start + major_count); out-of-range entries raise
/// std::out_of_range. Inverse of to_triplets for valid shards.
XcsrShard from_triplets(const DenseTriplets& triplets, std::uint64_t major_start,
                        std::uint64_t major_count, View view);

/// Sorts entries by (row, col) and rejects duplicates/malformed payloads.
/// Returns the violations found (empty when well formed).
std::vector<std::string> validate_triplets(const DenseTriplets& triplets);

}  // namespace xcsr
