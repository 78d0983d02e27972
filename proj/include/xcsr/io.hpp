#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>

#include "xcsr/shard.hpp"

namespace xcsr {

/// On-disk shard header, 56 bytes, all integers little-endian:
///   magic "XCSR" | version u16 = 1 | view u8 (0 row, 1 column) |
///   reserved u8 = 0 | global_dim u64 | major_start u64 | major_count u64 |
///   total_cells u64 | total_values u64 | value_size u64
/// followed by the line id array (present-line global ids, strictly
/// increasing), line cell counts, cell ids, cell value counts (u64 each) and
/// the raw value bytes.
struct XcsrFileHeader {
  View view = View::Row;
  std::uint64_t global_dim = 0;
  std::uint64_t major_start = 0;
  std::uint64_t major_count = 0;
  std::uint64_t total_cells = 0;
  std::uint64_t total_values = 0;
  std::uint64_t value_size = 1;
};

inline constexpr std::size_t kShardHeaderSize = 56;
inline constexpr std::uint16_t kShardFormatVersion = 1;

/// Header a valid shard serializes to.
XcsrFileHeader shard_header(const XcsrShard& shard);

/// Decodes and sanity-checks the first kShardHeaderSize bytes. Throws
/// FormatError on bad magic, version, view or reserved bytes.
XcsrFileHeader parse_shard_header(std::span<const std::uint8_t> bytes);

/// Serializes a valid shard; returns the number of bytes written.
std::uint64_t write_shard(const XcsrShard& shard, std::ostream& sink);

/// Reads one shard from the stream (consumes it to the end). Throws
/// FormatError on bad magic/version or header/array mismatches, and
/// ShardValidationError if the decoded shard violates an invariant.
XcsrShard read_shard(std::istream& source);

std::vector<std::uint8_t> shard_to_bytes(const XcsrShard& shard);
XcsrShard shard_from_bytes(std::span<const std::uint8_t> bytes);

void write_shard_file(const XcsrShard& shard, const std::filesystem::path& path);
XcsrShard read_shard_file(const std::filesystem::path& path);

/// Conventional per-rank file name: `<dataset>.r<rank>.xcsr`.
std::string shard_file_name(const std::string& dataset, std::uint32_t rank);

/// Splits the dataset into evenly-sized row slabs and writes one shard file
/// per rank into `dir`. Returns the file paths in rank order.
std::vector<std::filesystem::path> partition_dataset(
    const DenseTriplets& triplets, std::uint32_t ranks,
    const std::filesystem::path& dir, const std::string& dataset);

/// Reads the shard files back into one triplet set; the inverse of
/// partition_dataset up to canonical ordering. Throws PartitionError on
/// overlapping or gapped intervals.
DenseTriplets merge_shards(std::span<const std::filesystem::path> files);

}  // namespace xcsr
