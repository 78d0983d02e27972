#include "xcsr/instrument.hpp"

namespace xcsr {

CommStats& CommStats::operator+=(const CommStats& o) {
  allgather_calls += o.allgather_calls;
  alltoall_calls += o.alltoall_calls;
  alltoallv_calls += o.alltoallv_calls;
  bytes_sent += o.bytes_sent;
  bytes_received += o.bytes_received;
  payload_bytes_sent += o.payload_bytes_sent;
  payload_bytes_received += o.payload_bytes_received;
  return *this;
}

std::vector<std::vector<std::uint8_t>> InstrumentedComm::allgather(
    std::span<const std::uint8_t> record) {
  ++stats_.allgather_calls;
  stats_.bytes_sent += record.size() * inner_.size();
  auto out = inner_.allgather(record);
  for (const auto& b : out) stats_.bytes_received += b.size();
  return out;
}

std::vector<std::uint8_t> InstrumentedComm::alltoall(
    std::span<const std::uint8_t> send, std::size_t record_size) {
  ++stats_.alltoall_calls;
  stats_.bytes_sent += send.size();
  auto out = inner_.alltoall(send, record_size);
  stats_.bytes_received += out.size();
  return out;
}

std::vector<std::vector<std::uint8_t>> InstrumentedComm::alltoallv(
    std::span<const std::vector<std::uint8_t>> send) {
  ++stats_.alltoallv_calls;
  for (const auto& b : send) {
    stats_.bytes_sent += b.size();
    stats_.payload_bytes_sent += b.size();
  }
  auto out = inner_.alltoallv(send);
  for (const auto& b : out) {
    stats_.bytes_received += b.size();
    stats_.payload_bytes_received += b.size();
  }
  return out;
}

}  // namespace xcsr
