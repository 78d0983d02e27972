#pragma once

#include "xcsr/comm.hpp"
#include "xcsr/kernels.hpp"
#include "xcsr/shard.hpp"

namespace xcsr {

/// Global-row ownership map: rank r owns rows [offsets[r], offsets[r+1]).
/// Offsets are the exclusive prefix sums of the per-rank row counts, so
/// offsets.front() == 0 and offsets.back() == global_dim. Empty ranks are
/// allowed (repeated offsets).
struct RankLayout {
  std::vector<std::uint64_t> offsets;

  std::uint32_t ranks() const { return static_cast<std::uint32_t>(offsets.size()) - 1; }
  std::uint64_t global_dim() const { return offsets.back(); }
  std::uint64_t start(std::uint32_t rank) const { return offsets[rank]; }
  std::uint64_t count(std::uint32_t rank) const {
    return offsets[rank + 1] - offsets[rank];
  }

  friend bool operator==(const RankLayout&, const RankLayout&) = default;
};

/// Collective: gathers every rank's row count and prefix-sums the offsets.
/// All ranks receive the identical layout.
RankLayout compute_rank_layout(Communicator& comm, std::uint64_t local_row_count);

/// Same, but also asserts that all ranks agree on global_dim and value_size
/// (still a single allgather) and that the row counts cover the dimension.
RankLayout compute_rank_layout(Communicator& comm, const XcsrShard& shard);

/// The unique rank whose interval contains `global_id`; skips empty ranks.
/// Throws std::out_of_range for ids at or beyond global_dim.
std::uint32_t owner_of(const RankLayout& layout, std::uint64_t global_id);

/// Per-destination buffers for one view swap. Cells within a destination are
/// packed in (major, minor) order of the outgoing shard.
struct SendPlan {
  struct Destination {
    std::uint64_t cell_count = 0;
    std::vector<std::uint8_t> meta_bytes;   // packed CellMeta records
    std::uint64_t value_bytes = 0;
    std::vector<std::uint8_t> value_buffer;
  };
  std::vector<Destination> destinations;  // indexed by rank
};

/// Routes every cell to the rank owning its destination line. For a
/// locally-transposed (column view) shard the destination line is the major
/// id; for a row-view shard it is the minor id, so that a view swap always
/// moves cells to the owner of their orthogonal line.
SendPlan build_send_plan(const XcsrShard& shard, const RankLayout& layout);

/// Packs a CellMeta record (u64 row, u64 col, u64 value_count, little
/// endian) onto `out`.
void append_cell_meta(std::vector<std::uint8_t>& out, const CellMeta& meta);

/// Parses `bytes` as packed CellMeta records; throws CollectiveError
/// (ProtocolViolation) if the length is not a multiple of the record size.
std::vector<CellMeta> parse_cell_metas(std::span<const std::uint8_t> bytes);

/// Two-phase collective exchange that hands every cell to the rank owning
/// its orthogonal-view line: cell counts + metadata first, value byte counts
/// + payloads second, then a row-column reorder of the received data. The
/// view flag flips and the shard's owned interval becomes this rank's layout
/// interval. Performs exactly 2 dense and 2 variable exchanges. Involutory.
XcsrShard view_swap(const XcsrShard& shard, const RankLayout& layout,
                    Communicator& comm);

/// Distributed transpose: local transpose followed by a view swap (the two
/// commute). Each rank ends up with the transposed matrix restricted to its
/// own row interval, in the original view. Involutory.
XcsrShard distributed_transpose(const XcsrShard& shard, const RankLayout& layout,
                                Communicator& comm);

}  // namespace xcsr
