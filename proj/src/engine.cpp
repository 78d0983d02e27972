#include "xcsr/engine.hpp"

#include <algorithm>

#include "xcsr/bytes.hpp"

namespace xcsr {
namespace {

RankLayout layout_from_records(const std::vector<std::vector<std::uint8_t>>& records) {
  RankLayout layout;
  layout.offsets.resize(records.size() + 1, 0);
  for (std::size_t r = 0; r < records.size(); ++r)
    layout.offsets[r + 1] = layout.offsets[r] + get_u64le(records[r].data());
  return layout;
}

}  // namespace

RankLayout compute_rank_layout(Communicator& comm, std::uint64_t local_row_count) {
  std::vector<std::uint8_t> record(8);
  put_u64le(record.data(), local_row_count);
  return layout_from_records(comm.allgather(record));
}

RankLayout compute_rank_layout(Communicator& comm, const XcsrShard& shard) {
  std::vector<std::uint8_t> record(24);
  put_u64le(record.data(), shard.major_count);
  put_u64le(record.data() + 8, shard.global_dim);
  put_u64le(record.data() + 16, shard.value_size);
  auto records = comm.allgather(record);

  for (std::size_t r = 0; r < records.size(); ++r) {
    const std::uint64_t dim = get_u64le(records[r].data() + 8);
    const std::uint64_t vs = get_u64le(records[r].data() + 16);
    if (dim != shard.global_dim)
      throw ConfigError("rank " + std::to_string(r) + " reports global_dim " +
                        std::to_string(dim) + ", this rank has " +
                        std::to_string(shard.global_dim));
    if (vs != shard.value_size)
      throw ConfigError("rank " + std::to_string(r) + " reports value_size " +
                        std::to_string(vs) + ", this rank has " +
                        std::to_string(shard.value_size));
  }
  auto layout = layout_from_records(records);
  if (layout.global_dim() != shard.global_dim)
    throw ConfigError("rank row counts sum to " +
                      std::to_string(layout.global_dim()) +
                      " but global_dim is " + std::to_string(shard.global_dim));
  return layout;
}

std::uint32_t owner_of(const RankLayout& layout, std::uint64_t global_id) {
  if (layout.offsets.empty() || global_id >= layout.global_dim())
    throw std::out_of_range("global id " + std::to_string(global_id) +
                            " outside layout of dim " +
                            std::to_string(layout.offsets.empty() ? 0 : layout.global_dim()));
  auto it = std::upper_bound(layout.offsets.begin() + 1, layout.offsets.end(),
                             global_id);
  return static_cast<std::uint32_t>(it - layout.offsets.begin()) - 1;
}

void append_cell_meta(std::vector<std::uint8_t>& out, const CellMeta& meta) {
  append_u64le(out, meta.row);
  append_u64le(out, meta.col);
  append_u64le(out, meta.value_count);
}

std::vector<CellMeta> parse_cell_metas(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % kCellMetaWireSize != 0)
    throw CollectiveError(CollectiveErrc::ProtocolViolation,
                          "metadata buffer of " + std::to_string(bytes.size()) +
                              " bytes is not a whole number of records");
  std::vector<CellMeta> out(bytes.size() / kCellMetaWireSize);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint8_t* p = bytes.data() + i * kCellMetaWireSize;
    out[i] = CellMeta{get_u64le(p), get_u64le(p + 8), get_u64le(p + 16)};
  }
  return out;
}

SendPlan build_send_plan(const XcsrShard& shard, const RankLayout& layout) {
  require_valid(shard);
  if (shard.global_dim != layout.global_dim())
    throw ConfigError("shard global_dim " + std::to_string(shard.global_dim) +
                      " does not match layout dim " +
                      std::to_string(layout.global_dim()));

  SendPlan plan;
  plan.destinations.resize(layout.ranks());
  // Column view means the shard is already grouped by its destination
  // (orthogonal) line; in row view that line is the minor id.
  const bool route_by_major = shard.view == View::Column;

  std::size_t cell = 0;
  std::uint64_t value_offset = 0;
  for (std::size_t line = 0; line < shard.line_ids.size(); ++line) {
    const std::uint64_t major = shard.line_ids[line];
    for (std::uint64_t k = 0; k < shard.line_cell_counts[line]; ++k, ++cell) {
      const std::uint64_t minor = shard.cell_ids[cell];
      const std::uint64_t n = shard.cell_value_counts[cell];
      const std::uint64_t bytes = n * shard.value_size;
      auto& dest =
          plan.destinations[owner_of(layout, route_by_major ? major : minor)];
      ++dest.cell_count;
      append_cell_meta(dest.meta_bytes, CellMeta{major, minor, n});
      dest.value_buffer.insert(dest.value_buffer.end(),
                               shard.values.begin() + value_offset,
                               shard.values.begin() + value_offset + bytes);
      dest.value_bytes += bytes;
      value_offset += bytes;
    }
  }
  return plan;
}

XcsrShard view_swap(const XcsrShard& shard, const RankLayout& layout,
                    Communicator& comm) {
  const std::uint32_t ranks = comm.size();
  if (layout.ranks() != ranks)
    throw ConfigError("layout has " + std::to_string(layout.ranks()) +
                      " ranks, communicator has " + std::to_string(ranks));
  if (shard.major_start != layout.start(comm.rank()) ||
      shard.major_count != layout.count(comm.rank()))
    throw ConfigError("shard owns [" + std::to_string(shard.major_start) + ", " +
                      std::to_string(shard.major_start + shard.major_count) +
                      ") but the layout assigns [" +
                      std::to_string(layout.start(comm.rank())) + ", " +
                      std::to_string(layout.start(comm.rank()) +
                                     layout.count(comm.rank())) +
                      ") to rank " + std::to_string(comm.rank()));

  SendPlan plan = build_send_plan(shard, layout);

  // step 1: cell counts, then metadata
  std::vector<std::uint8_t> count_rec;
  count_rec.reserve(ranks * 8);
  for (const auto& d : plan.destinations) append_u64le(count_rec, d.cell_count);
  auto recv_counts_raw = comm.alltoall(count_rec, 8);

  std::vector<std::vector<std::uint8_t>> meta_send(ranks);
  for (std::uint32_t r = 0; r < ranks; ++r)
    meta_send[r] = std::move(plan.destinations[r].meta_bytes);
  auto meta_recv = comm.alltoallv(meta_send);

  std::uint64_t incoming_cells = 0;
  for (std::uint32_t src = 0; src < ranks; ++src) {
    const std::uint64_t announced = get_u64le(recv_counts_raw.data() + src * 8);
    if (meta_recv[src].size() != announced * kCellMetaWireSize)
      throw CollectiveError(
          CollectiveErrc::ProtocolViolation,
          "rank " + std::to_string(src) + " announced " +
              std::to_string(announced) + " cells but sent " +
              std::to_string(meta_recv[src].size()) + " metadata bytes");
    incoming_cells += announced;
  }

  std::vector<CellMeta> metas;
  metas.reserve(incoming_cells);
  std::vector<std::uint64_t> src_value_bytes(ranks, 0);
  for (std::uint32_t src = 0; src < ranks; ++src) {
    auto part = parse_cell_metas(meta_recv[src]);
    for (const CellMeta& m : part) src_value_bytes[src] += m.value_count;
    src_value_bytes[src] *= shard.value_size;
    metas.insert(metas.end(), part.begin(), part.end());
  }

  // step 2: value byte counts, then payloads
  std::vector<std::uint8_t> byte_rec;
  byte_rec.reserve(ranks * 8);
  for (const auto& d : plan.destinations) append_u64le(byte_rec, d.value_bytes);
  auto recv_bytes_raw = comm.alltoall(byte_rec, 8);

  std::vector<std::vector<std::uint8_t>> value_send(ranks);
  for (std::uint32_t r = 0; r < ranks; ++r)
    value_send[r] = std::move(plan.destinations[r].value_buffer);
  auto value_recv = comm.alltoallv(value_send);

  std::uint64_t incoming_bytes = 0;
  for (std::uint32_t src = 0; src < ranks; ++src) {
    const std::uint64_t announced = get_u64le(recv_bytes_raw.data() + src * 8);
    if (value_recv[src].size() != announced)
      throw CollectiveError(
          CollectiveErrc::ProtocolViolation,
          "rank " + std::to_string(src) + " announced " +
              std::to_string(announced) + " value bytes but sent " +
              std::to_string(value_recv[src].size()));
    if (value_recv[src].size() != src_value_bytes[src])
      throw CollectiveError(
          CollectiveErrc::ProtocolViolation,
          "rank " + std::to_string(src) + " metadata implies " +
              std::to_string(src_value_bytes[src]) + " value bytes but " +
              std::to_string(value_recv[src].size()) + " arrived");
    incoming_bytes += announced;
  }

  std::vector<std::uint8_t> payload;
  payload.reserve(incoming_bytes);
  for (auto& buf : value_recv) payload.insert(payload.end(), buf.begin(), buf.end());

  ShardFragment frag = reorder_received(metas, metas, payload, shard.value_size);

  XcsrShard out;
  out.view = flip(shard.view);
  out.global_dim = shard.global_dim;
  out.major_start = layout.start(comm.rank());
  out.major_count = layout.count(comm.rank());
  out.value_size = shard.value_size;
  out.line_ids = std::move(frag.line_ids);
  out.line_cell_counts = std::move(frag.line_cell_counts);
  out.cell_ids = std::move(frag.cell_ids);
  out.cell_value_counts = std::move(frag.cell_value_counts);
  out.values = std::move(frag.values);
  return out;
}

XcsrShard distributed_transpose(const XcsrShard& shard, const RankLayout& layout,
                                Communicator& comm) {
  return view_swap(local_transpose(shard), layout, comm);
}

}  // namespace xcsr
