#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "xcsr/comm.hpp"

namespace xcsr {

/// Multi-process TCP backend configuration. Rank 0 listens on `rendezvous`
/// (host:port); every other rank opens its own ephemeral listener, registers
/// its address with rank 0 and receives the full address table back, after
/// which the ranks establish a full mesh (higher rank connects to lower).
///
/// Wire protocol: each connection opens with the 13-byte handshake
///   "XCOL" | version u8 = 1 | rank u32 LE | size u32 LE
/// and every message is a frame of [length u64 LE][payload].
struct TcpOptions {
  std::string rendezvous;  // rank 0's listen address, e.g. "127.0.0.1:29700"
  std::uint32_t rank = 0;
  std::uint32_t size = 1;
  std::chrono::milliseconds timeout{30000};
  std::string advertise_host = "127.0.0.1";  // host peers use to reach this rank
};

inline constexpr char kTcpMagic[4] = {'X', 'C', 'O', 'L'};
inline constexpr std::uint8_t kTcpVersion = 1;

/// Establishes the mesh and returns a collective endpoint satisfying the
/// same contracts as the simulator. Throws CollectiveError: Timeout when
/// peers do not show up within the deadline, ProtocolViolation on handshake
/// mismatch (magic/version/size/rank collision), PeerFailure on lost
/// connections.
std::unique_ptr<Communicator> tcp_connect(const TcpOptions& options);

}  // namespace xcsr
