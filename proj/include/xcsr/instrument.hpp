#pragma once

#include "xcsr/comm.hpp"

namespace xcsr {

/// Ground-truth traffic accounting, backend independent. Byte totals count
/// every buffer handed to / received from a collective, including the
/// rank's own loopback contribution. `payload_*` covers only the
/// variable-size exchanges (cell metadata and values); the dense exchanges
/// are bookkeeping overhead.
struct CommStats {
  std::uint64_t allgather_calls = 0;
  std::uint64_t alltoall_calls = 0;
  std::uint64_t alltoallv_calls = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t payload_bytes_sent = 0;
  std::uint64_t payload_bytes_received = 0;

  CommStats& operator+=(const CommStats& o);
};

/// Pass-through wrapper that counts calls and bytes on one endpoint.
class InstrumentedComm final : public Communicator {
 public:
  explicit InstrumentedComm(Communicator& inner) : inner_(inner) {}

  std::uint32_t rank() const noexcept override { return inner_.rank(); }
  std::uint32_t size() const noexcept override { return inner_.size(); }

  std::vector<std::vector<std::uint8_t>> allgather(
      std::span<const std::uint8_t> record) override;
  std::vector<std::uint8_t> alltoall(std::span<const std::uint8_t> send,
                                     std::size_t record_size) override;
  std::vector<std::vector<std::uint8_t>> alltoallv(
      std::span<const std::vector<std::uint8_t>> send) override;

  const CommStats& stats() const noexcept { return stats_; }
  void reset() { stats_ = CommStats{}; }

 private:
  Communicator& inner_;
  CommStats stats_;
};

}  // namespace xcsr
