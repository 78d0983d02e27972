#include "xcsr/io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "xcsr/bytes.hpp"
#include "xcsr/oracle.hpp"

namespace xcsr {
namespace {

constexpr char kMagic[4] = {'X', 'C', 'S', 'R'};

void append_u64_array(std::vector<std::uint8_t>& out,
                      const std::vector<std::uint64_t>& a) {
  for (std::uint64_t v : a) append_u64le(out, v);
}

std::vector<std::uint64_t> read_u64_array(const std::uint8_t*& p, std::uint64_t n) {
  std::vector<std::uint64_t> out(n);
  for (std::uint64_t i = 0; i < n; ++i, p += 8) out[i] = get_u64le(p);
  return out;
}

}  // namespace

XcsrFileHeader shard_header(const XcsrShard& s) {
  XcsrFileHeader h;
  h.view = s.view;
  h.global_dim = s.global_dim;
  h.major_start = s.major_start;
  h.major_count = s.major_count;
  h.total_cells = s.total_cells();
  h.total_values = s.total_values();
  h.value_size = s.value_size;
  return h;
}

XcsrFileHeader parse_shard_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kShardHeaderSize)
    throw FormatError("shard stream truncated: " + std::to_string(bytes.size()) +
                      " bytes, header needs " + std::to_string(kShardHeaderSize));
  if (!std::equal(kMagic, kMagic + 4, bytes.data()))
    throw FormatError("bad magic: not an XCSR shard file");
  const std::uint16_t version = get_u16le(bytes.data() + 4);
  if (version != kShardFormatVersion)
    throw FormatError("unsupported format version " + std::to_string(version));
  const std::uint8_t view_byte = bytes[6];
  if (view_byte > 1)
    throw FormatError("invalid view byte " + std::to_string(view_byte));
  if (bytes[7] != 0) throw FormatError("reserved header byte is not zero");

  XcsrFileHeader h;
  h.view = static_cast<View>(view_byte);
  h.global_dim = get_u64le(bytes.data() + 8);
  h.major_start = get_u64le(bytes.data() + 16);
  h.major_count = get_u64le(bytes.data() + 24);
  h.total_cells = get_u64le(bytes.data() + 32);
  h.total_values = get_u64le(bytes.data() + 40);
  h.value_size = get_u64le(bytes.data() + 48);
  if (h.value_size == 0) throw FormatError("header value_size is zero");
  return h;
}

std::vector<std::uint8_t> shard_to_bytes(const XcsrShard& s) {
  require_valid(s);
  const XcsrFileHeader h = shard_header(s);
  std::vector<std::uint8_t> out;
  out.reserve(kShardHeaderSize + 16 * s.line_ids.size() +
              16 * s.cell_ids.size() + s.values.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  out.resize(8);
  put_u16le(out.data() + 4, kShardFormatVersion);
  out[6] = static_cast<std::uint8_t>(h.view);
  out[7] = 0;  // reserved
  append_u64le(out, h.global_dim);
  append_u64le(out, h.major_start);
  append_u64le(out, h.major_count);
  append_u64le(out, h.total_cells);
  append_u64le(out, h.total_values);
  append_u64le(out, h.value_size);
  append_u64_array(out, s.line_ids);
  append_u64_array(out, s.line_cell_counts);
  append_u64_array(out, s.cell_ids);
  append_u64_array(out, s.cell_value_counts);
  out.insert(out.end(), s.values.begin(), s.values.end());
  return out;
}

XcsrShard shard_from_bytes(std::span<const std::uint8_t> bytes) {
  const XcsrFileHeader h = parse_shard_header(bytes);

  const std::uint64_t body = bytes.size() - kShardHeaderSize;
  if (h.total_cells > body / 16)
    throw FormatError("header claims more cells than the file holds");
  const std::uint64_t after_cells = body - 16 * h.total_cells;
  if (h.total_values > after_cells / h.value_size)
    throw FormatError("header claims more values than the file holds");
  const std::uint64_t line_bytes = after_cells - h.value_size * h.total_values;
  if (line_bytes % 16 != 0)
    throw FormatError("line arrays are not a whole number of records");
  const std::uint64_t lines = line_bytes / 16;

  XcsrShard s;
  s.view = h.view;
  s.global_dim = h.global_dim;
  s.major_start = h.major_start;
  s.major_count = h.major_count;
  s.value_size = h.value_size;
  const std::uint8_t* p = bytes.data() + kShardHeaderSize;
  s.line_ids = read_u64_array(p, lines);
  s.line_cell_counts = read_u64_array(p, lines);
  s.cell_ids = read_u64_array(p, h.total_cells);
  s.cell_value_counts = read_u64_array(p, h.total_cells);
  s.values.assign(p, bytes.data() + bytes.size());

  if (s.total_values() != h.total_values)
    throw FormatError("header total_values " + std::to_string(h.total_values) +
                      " does not match cell value counts summing to " +
                      std::to_string(s.total_values()));
  std::uint64_t line_sum = 0;
  for (std::uint64_t c : s.line_cell_counts) line_sum += c;
  if (line_sum != h.total_cells)
    throw FormatError("header total_cells " + std::to_string(h.total_cells) +
                      " does not match line cell counts summing to " +
                      std::to_string(line_sum));
  require_valid(s);
  return s;
}

std::uint64_t write_shard(const XcsrShard& shard, std::ostream& sink) {
  auto bytes = shard_to_bytes(shard);
  sink.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  if (!sink) throw FormatError("failed to write shard stream");
  return bytes.size();
}

XcsrShard read_shard(std::istream& source) {
  std::vector<std::uint8_t> bytes;
  char buf[1 << 16];
  while (source.read(buf, sizeof buf) || source.gcount() > 0)
    bytes.insert(bytes.end(), buf, buf + source.gcount());
  return shard_from_bytes(bytes);
}

void write_shard_file(const XcsrShard& shard, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_shard(shard, out);
}

XcsrShard read_shard_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_shard(in);
}

std::string shard_file_name(const std::string& dataset, std::uint32_t rank) {
  return dataset + ".r" + std::to_string(rank) + ".xcsr";
}

std::vector<std::filesystem::path> partition_dataset(
    const DenseTriplets& triplets, std::uint32_t ranks,
    const std::filesystem::path& dir, const std::string& dataset) {
  auto violations = validate_triplets(triplets);
  if (!violations.empty()) throw ShardValidationError(std::move(violations));

  auto sorted = triplets;
  std::sort(sorted.entries.begin(), sorted.entries.end(),
            [](const auto& a, const auto& b) {
              return std::tie(a.row, a.col) < std::tie(b.row, b.col);
            });

  std::vector<std::filesystem::path> files;
  files.reserve(ranks);
  const auto intervals = even_intervals(triplets.global_dim, ranks);
  auto it = sorted.entries.begin();
  for (std::uint32_t r = 0; r < ranks; ++r) {
    const auto [start, count] = intervals[r];
    DenseTriplets slab;
    slab.global_dim = triplets.global_dim;
    slab.value_size = triplets.value_size;
    while (it != sorted.entries.end() && it->row < start + count)
      slab.entries.push_back(std::move(*it++));
    auto path = dir / shard_file_name(dataset, r);
    write_shard_file(from_triplets(slab, start, count, View::Row), path);
    files.push_back(std::move(path));
  }
  return files;
}

DenseTriplets merge_shards(std::span<const std::filesystem::path> files) {
  std::vector<XcsrShard> shards;
  shards.reserve(files.size());
  for (const auto& f : files) shards.push_back(read_shard_file(f));
  return gather_shards(shards);
}

}  // namespace xcsr
