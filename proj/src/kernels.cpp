#include "xcsr/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <sstream>

namespace xcsr {
namespace {

// Cells below this size run serially; the OpenMP regions only pay off once
// there is real payload to move.
constexpr std::size_t kParallelThreshold = 4096;

XcsrShard transpose_impl(const XcsrShard& s, bool parallel) {
  XcsrShard out;
  out.view = flip(s.view);
  out.global_dim = s.global_dim;
  out.major_start = s.major_start;
  out.major_count = s.major_count;
  out.value_size = s.value_size;

  const std::size_t cells = s.cell_ids.size();
  if (cells == 0) return out;

  // source line id per cell
  std::vector<std::uint64_t> src_line(cells);
  {
    std::size_t cell = 0;
    for (std::size_t line = 0; line < s.line_ids.size(); ++line)
      for (std::uint64_t k = 0; k < s.line_cell_counts[line]; ++k, ++cell)
        src_line[cell] = s.line_ids[line];
  }

  // counting sort by minor id: histogram, then exclusive offsets reusing the
  // same array
  std::vector<std::uint64_t> slot_of(s.global_dim, 0);
  for (std::size_t cell = 0; cell < cells; ++cell) ++slot_of[s.cell_ids[cell]];

  out.line_ids.reserve(std::min<std::uint64_t>(s.global_dim, cells));
  std::uint64_t running = 0;
  for (std::uint64_t m = 0; m < s.global_dim; ++m) {
    const std::uint64_t c = slot_of[m];
    if (c != 0) {
      out.line_ids.push_back(m);
      out.line_cell_counts.push_back(c);
    }
    slot_of[m] = running;
    running += c;
  }

  // slot assignment follows source traversal order, so minors within each
  // new line come out strictly increasing
  std::vector<std::uint64_t> perm(cells);
  for (std::size_t cell = 0; cell < cells; ++cell)
    perm[slot_of[s.cell_ids[cell]]++] = cell;

  std::vector<std::uint64_t> src_val_off(cells + 1, 0);
  for (std::size_t cell = 0; cell < cells; ++cell)
    src_val_off[cell + 1] =
        src_val_off[cell] + s.cell_value_counts[cell] * s.value_size;

  std::vector<std::uint64_t> dst_val_off(cells + 1, 0);
  for (std::size_t slot = 0; slot < cells; ++slot)
    dst_val_off[slot + 1] =
        dst_val_off[slot] + s.cell_value_counts[perm[slot]] * s.value_size;

  out.cell_ids.resize(cells);
  out.cell_value_counts.resize(cells);
  out.values.resize(s.values.size());

  const std::int64_t n = static_cast<std::int64_t>(cells);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t slot = 0; slot < n; ++slot) {
    const std::uint64_t cell = perm[slot];
    out.cell_ids[slot] = src_line[cell];
    out.cell_value_counts[slot] = s.cell_value_counts[cell];
    const std::uint64_t bytes = dst_val_off[slot + 1] - dst_val_off[slot];
    if (bytes != 0)
      std::memcpy(out.values.data() + dst_val_off[slot],
                  s.values.data() + src_val_off[cell], bytes);
  }
  return out;
}

ShardFragment reorder_impl(std::span<const CellMeta> arrivals,
                           std::span<const std::uint8_t> arrival_values,
                           std::uint64_t value_size, bool parallel) {
  const std::size_t n = arrivals.size();
  ShardFragment f;
  if (n == 0) return f;

  std::vector<std::uint64_t> src_off(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i)
    src_off[i + 1] = src_off[i] + arrivals[i].value_count * value_size;

  std::vector<std::uint64_t> order(n);
  std::iota(order.begin(), order.end(), std::uint64_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint64_t a, std::uint64_t b) {
                     return std::tie(arrivals[a].row, arrivals[a].col) <
                            std::tie(arrivals[b].row, arrivals[b].col);
                   });

  f.cell_ids.resize(n);
  f.cell_value_counts.resize(n);
  std::vector<std::uint64_t> dst_off(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const CellMeta& m = arrivals[order[k]];
    if (f.line_ids.empty() || f.line_ids.back() != m.row) {
      f.line_ids.push_back(m.row);
      f.line_cell_counts.push_back(0);
    }
    ++f.line_cell_counts.back();
    dst_off[k + 1] = dst_off[k] + m.value_count * value_size;
  }
  f.values.resize(dst_off[n]);

  const std::int64_t count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t k = 0; k < count; ++k) {
    const std::uint64_t i = order[k];
    f.cell_ids[k] = arrivals[i].col;
    f.cell_value_counts[k] = arrivals[i].value_count;
    const std::uint64_t bytes = dst_off[k + 1] - dst_off[k];
    if (bytes != 0)
      std::memcpy(f.values.data() + dst_off[k],
                  arrival_values.data() + src_off[i], bytes);
  }
  return f;
}

}  // namespace

namespace kernels {

XcsrShard local_transpose_serial(const XcsrShard& s) { return transpose_impl(s, false); }
XcsrShard local_transpose_parallel(const XcsrShard& s) { return transpose_impl(s, true); }

ShardFragment reorder_serial(std::span<const CellMeta> arrivals,
                             std::span<const std::uint8_t> arrival_values,
                             std::uint64_t value_size) {
  return reorder_impl(arrivals, arrival_values, value_size, false);
}

ShardFragment reorder_parallel(std::span<const CellMeta> arrivals,
                               std::span<const std::uint8_t> arrival_values,
                               std::uint64_t value_size) {
  return reorder_impl(arrivals, arrival_values, value_size, true);
}

}  // namespace kernels

XcsrShard local_transpose(const XcsrShard& shard) {
  require_valid(shard);
  return shard.cell_ids.size() >= kParallelThreshold
             ? kernels::local_transpose_parallel(shard)
             : kernels::local_transpose_serial(shard);
}

ShardFragment reorder_received(std::span<const CellMeta> metas,
                               std::span<const CellMeta> arrivals,
                               std::span<const std::uint8_t> arrival_values,
                               std::uint64_t value_size) {
  if (value_size == 0) throw std::invalid_argument("value_size must be >= 1");
  if (metas.size() != arrivals.size()) {
    std::ostringstream os;
    os << "metadata lists " << metas.size() << " cells but " << arrivals.size()
       << " arrived";
    throw std::invalid_argument(os.str());
  }

  auto key = [](const CellMeta& m) { return std::tie(m.row, m.col, m.value_count); };
  std::vector<CellMeta> a(metas.begin(), metas.end());
  std::vector<CellMeta> b(arrivals.begin(), arrivals.end());
  std::sort(a.begin(), a.end(), [&](const CellMeta& x, const CellMeta& y) { return key(x) < key(y); });
  std::sort(b.begin(), b.end(), [&](const CellMeta& x, const CellMeta& y) { return key(x) < key(y); });
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] == b[i])) {
      std::ostringstream os;
      os << "cell multiset mismatch at sorted index " << i << ": announced ("
         << a[i].row << "," << a[i].col << ",x" << a[i].value_count
         << ") vs arrived (" << b[i].row << "," << b[i].col << ",x"
         << b[i].value_count << ")";
      throw std::invalid_argument(os.str());
    }
  }

  std::uint64_t expected_bytes = 0;
  for (const CellMeta& m : arrivals) expected_bytes += m.value_count * value_size;
  if (arrival_values.size() != expected_bytes) {
    std::ostringstream os;
    os << "arrival payload is " << arrival_values.size() << " bytes, expected "
       << expected_bytes;
    throw std::invalid_argument(os.str());
  }

  return arrivals.size() >= kParallelThreshold
             ? kernels::reorder_parallel(arrivals, arrival_values, value_size)
             : kernels::reorder_serial(arrivals, arrival_values, value_size);
}

}  // namespace xcsr
