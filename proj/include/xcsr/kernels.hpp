#pragma once

#include <span>

#include "xcsr/shard.hpp"

namespace xcsr {

/// Communication-free transpose of the locally held submatrix: cells are
/// regrouped by minor id, major/minor roles swap and the view flips. The
/// owned interval (`major_start`/`major_count`) is carried over unchanged.
/// Involutory: applying it twice restores the input byte-exactly.
/// Throws ShardValidationError on invalid input.
XcsrShard local_transpose(const XcsrShard& shard);

/// Canonical arrays rebuilt from exchanged cells; partition metadata is
/// stamped on by the caller.
struct ShardFragment {
  std::vector<std::uint64_t> line_ids;
  std::vector<std::uint64_t> line_cell_counts;
  std::vector<std::uint64_t> cell_ids;
  std::vector<std::uint64_t> cell_value_counts;
  std::vector<std::uint8_t> values;

  friend bool operator==(const ShardFragment&, const ShardFragment&) = default;
};

/// Groups received cells into canonical (major, minor) order, moving each
/// cell's payload intact to its canonical position. `metas` is the cell set
/// announced by the metadata phase; `arrivals` lists the cells in the order
/// their payload chunks actually arrived, with `arrival_values` the
/// concatenation of those chunks. The two descriptions must carry the same
/// cell multiset and the payload length must match the arrival counts;
/// otherwise std::invalid_argument names the first discrepancy.
ShardFragment reorder_received(std::span<const CellMeta> metas,
                               std::span<const CellMeta> arrivals,
                               std::span<const std::uint8_t> arrival_values,
                               std::uint64_t value_size);

namespace kernels {

// Serial reference and OpenMP implementations. Outputs are byte-identical;
// inputs are assumed valid (the public wrappers validate).

XcsrShard local_transpose_serial(const XcsrShard& shard);
XcsrShard local_transpose_parallel(const XcsrShard& shard);

ShardFragment reorder_serial(std::span<const CellMeta> arrivals,
                             std::span<const std::uint8_t> arrival_values,
                             std::uint64_t value_size);
ShardFragment reorder_parallel(std::span<const CellMeta> arrivals,
                               std::span<const std::uint8_t> arrival_values,
                               std::uint64_t value_size);

}  // namespace kernels
}  // namespace xcsr
