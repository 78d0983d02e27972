#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "xcsr/errors.hpp"

namespace xcsr {

/// Collective endpoint of an R-rank group. Every operation is collective:
/// all ranks must enter it together, and it blocks until the exchange
/// completes. Received buffers are always indexed by source rank, never by
/// arrival time. One endpoint is owned by exactly one rank worker.
class Communicator {
 public:
  virtual ~Communicator() = default;

  virtual std::uint32_t rank() const noexcept = 0;
  virtual std::uint32_t size() const noexcept = 0;

  /// Every rank contributes one record; all records must have the same byte
  /// length. Returns all R records indexed by source rank, identical on
  /// every rank.
  virtual std::vector<std::vector<std::uint8_t>> allgather(
      std::span<const std::uint8_t> record) = 0;

  /// Dense exchange: `send` holds R records of `record_size` bytes each, one
  /// per destination. Returns R records (flattened, R * record_size bytes)
  /// indexed by source: record s of the result is what rank s addressed to
  /// this rank.
  virtual std::vector<std::uint8_t> alltoall(std::span<const std::uint8_t> send,
                                             std::size_t record_size) = 0;

  /// Variable-size exchange: one buffer per destination, any of them may be
  /// empty. Returns one buffer per source rank, byte-identical to what that
  /// source addressed to this rank.
  virtual std::vector<std::vector<std::uint8_t>> alltoallv(
      std::span<const std::vector<std::uint8_t>> send) = 0;
};

}  // namespace xcsr
