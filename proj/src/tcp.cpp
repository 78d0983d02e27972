#include "xcsr/tcp.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "xcsr/bytes.hpp"

namespace xcsr {
namespace {

using Clock = std::chrono::steady_clock;
using Deadline = Clock::time_point;

constexpr std::uint64_t kMaxFrameBytes = std::uint64_t{1} << 42;

[[noreturn]] void throw_errno(CollectiveErrc kind, const std::string& what) {
  throw CollectiveError(kind, what + ": " + std::strerror(errno));
}

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      close_fd();
      fd_ = o.fd_;
      o.fd_ = -1;
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close_fd(); }

  bool valid() const noexcept { return fd_ >= 0; }
  int fd() const noexcept { return fd_; }

 private:
  void close_fd() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  int fd_ = -1;
};

std::pair<std::string, std::uint16_t> parse_host_port(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon + 1 == addr.size())
    throw ConfigError("address '" + addr + "' is not host:port");
  const std::string host = addr.substr(0, colon);
  const int port = std::stoi(addr.substr(colon + 1));
  if (port < 0 || port > 65535)
    throw ConfigError("port out of range in '" + addr + "'");
  return {host, static_cast<std::uint16_t>(port)};
}

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1)
    throw ConfigError("cannot parse IPv4 host '" + host + "'");
  return sa;
}

int remaining_ms(Deadline deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                        deadline - Clock::now())
                        .count();
  return left <= 0 ? 0 : static_cast<int>(std::min<long long>(left, 1 << 30));
}

void set_io_timeout(int fd, Deadline deadline) {
  timeval tv{};
  const int ms = std::max(remaining_ms(deadline), 1);
  tv.tv_sec = ms / 1000;
  tv.tv_usec = (ms % 1000) * 1000;
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

std::pair<Socket, std::uint16_t> make_listener(const std::string& host,
                                               std::uint16_t port,
                                               int backlog) {
  Socket s(::socket(AF_INET, SOCK_STREAM, 0));
  if (!s.valid()) throw_errno(CollectiveErrc::PeerFailure, "socket");
  const int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in sa = make_addr(host, port);
  if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0)
    throw_errno(CollectiveErrc::PeerFailure,
                "bind " + host + ":" + std::to_string(port));
  if (::listen(s.fd(), backlog) != 0)
    throw_errno(CollectiveErrc::PeerFailure, "listen");
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
  return {std::move(s), ntohs(bound.sin_port)};
}

Socket accept_with_deadline(const Socket& listener, Deadline deadline) {
  for (;;) {
    pollfd pfd{listener.fd(), POLLIN, 0};
    const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
    if (rc == 0)
      throw CollectiveError(CollectiveErrc::Timeout,
                            "timed out waiting for a peer to connect");
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw_errno(CollectiveErrc::PeerFailure, "poll");
    }
    const int fd = ::accept(listener.fd(), nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      throw_errno(CollectiveErrc::PeerFailure, "accept");
    }
    return Socket(fd);
  }
}

Socket connect_with_retry(const std::string& host, std::uint16_t port,
                          Deadline deadline) {
  sockaddr_in sa = make_addr(host, port);
  for (;;) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) throw_errno(CollectiveErrc::PeerFailure, "socket");
    if (::connect(s.fd(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) == 0)
      return s;
    if (Clock::now() >= deadline)
      throw CollectiveError(CollectiveErrc::Timeout,
                            "cannot reach " + host + ":" + std::to_string(port));
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

void write_all(const Socket& s, const std::uint8_t* data, std::size_t n) {
  std::size_t done = 0;
  while (done < n) {
    const ssize_t rc = ::send(s.fd(), data + done, n - done, MSG_NOSIGNAL);
    if (rc < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK)
        throw CollectiveError(CollectiveErrc::Timeout, "send timed out");
      if (errno == EPIPE || errno == ECONNRESET)
        throw CollectiveError(CollectiveErrc::PeerFailure,
                              "peer closed the connection");
      throw_errno(CollectiveErrc::PeerFailure, "send");
    }
    done += static_cast<std::size_t>(rc);
  }
}

void read_exact(const Socket& s, std::uint8_t* data, std::size_t n) {
  std::size_t done = 0;
  while (done < n) {
    const ssize_t rc = ::recv(s.fd(), data + done, n - done, 0);
    if (rc == 0)
      throw CollectiveError(CollectiveErrc::PeerFailure,
                            "peer closed the connection");
    if (rc < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK)
        throw CollectiveError(CollectiveErrc::Timeout, "recv timed out");
      throw_errno(CollectiveErrc::PeerFailure, "recv");
    }
    done += static_cast<std::size_t>(rc);
  }
}

void send_frame(const Socket& s, std::span<const std::uint8_t> payload) {
  std::uint8_t len[8];
  put_u64le(len, payload.size());
  write_all(s, len, 8);
  if (!payload.empty()) write_all(s, payload.data(), payload.size());
}

std::vector<std::uint8_t> recv_frame(const Socket& s) {
  std::uint8_t len[8];
  read_exact(s, len, 8);
  const std::uint64_t n = get_u64le(len);
  if (n > kMaxFrameBytes)
    throw CollectiveError(CollectiveErrc::ProtocolViolation,
                          "frame length " + std::to_string(n) +
                              " exceeds the protocol limit");
  std::vector<std::uint8_t> out(n);
  if (n > 0) read_exact(s, out.data(), n);
  return out;
}

void send_handshake(const Socket& s, std::uint32_t rank, std::uint32_t size) {
  std::uint8_t buf[13];
  std::memcpy(buf, kTcpMagic, 4);
  buf[4] = kTcpVersion;
  put_u32le(buf + 5, rank);
  put_u32le(buf + 9, size);
  write_all(s, buf, sizeof buf);
}

// Returns the peer's rank after validating magic, version and group size.
std::uint32_t recv_handshake(const Socket& s, std::uint32_t expected_size) {
  std::uint8_t buf[13];
  read_exact(s, buf, sizeof buf);
  if (std::memcmp(buf, kTcpMagic, 4) != 0)
    throw CollectiveError(CollectiveErrc::ProtocolViolation,
                          "handshake magic mismatch");
  if (buf[4] != kTcpVersion)
    throw CollectiveError(CollectiveErrc::ProtocolViolation,
                          "handshake version " + std::to_string(buf[4]) +
                              " is not " + std::to_string(kTcpVersion));
  const std::uint32_t rank = get_u32le(buf + 5);
  const std::uint32_t size = get_u32le(buf + 9);
  if (size != expected_size)
    throw CollectiveError(CollectiveErrc::ProtocolViolation,
                          "peer reports group size " + std::to_string(size) +
                              ", expected " + std::to_string(expected_size));
  if (rank >= expected_size)
    throw CollectiveError(CollectiveErrc::ProtocolViolation,
                          "peer rank " + std::to_string(rank) + " out of range");
  return rank;
}

class TcpComm final : public Communicator {
 public:
  TcpComm(std::uint32_t rank, std::uint32_t size, std::vector<Socket> links,
          std::chrono::milliseconds timeout)
      : rank_(rank), size_(size), links_(std::move(links)), timeout_(timeout) {}

  std::uint32_t rank() const noexcept override { return rank_; }
  std::uint32_t size() const noexcept override { return size_; }

  std::vector<std::vector<std::uint8_t>> allgather(
      std::span<const std::uint8_t> record) override {
    std::vector<std::vector<std::uint8_t>> per_dst(
        size_, std::vector<std::uint8_t>(record.begin(), record.end()));
    auto out = exchange(per_dst);
    for (std::uint32_t src = 0; src < size_; ++src)
      if (out[src].size() != record.size())
        throw CollectiveError(
            CollectiveErrc::SizeMismatch,
            "allgather record from rank " + std::to_string(src) + " is " +
                std::to_string(out[src].size()) + " bytes, local record is " +
                std::to_string(record.size()));
    return out;
  }

  std::vector<std::uint8_t> alltoall(std::span<const std::uint8_t> send,
                                     std::size_t record_size) override {
    if (send.size() != record_size * size_)
      throw CollectiveError(
          CollectiveErrc::SizeMismatch,
          "alltoall send buffer is " + std::to_string(send.size()) +
              " bytes, expected " + std::to_string(record_size * size_));
    std::vector<std::vector<std::uint8_t>> per_dst(size_);
    for (std::uint32_t d = 0; d < size_; ++d)
      per_dst[d].assign(send.begin() + d * record_size,
                        send.begin() + (d + 1) * record_size);
    auto cols = exchange(per_dst);
    std::vector<std::uint8_t> out;
    out.reserve(record_size * size_);
    for (std::uint32_t src = 0; src < size_; ++src) {
      if (cols[src].size() != record_size)
        throw CollectiveError(
            CollectiveErrc::SizeMismatch,
            "alltoall record from rank " + std::to_string(src) + " is " +
                std::to_string(cols[src].size()) + " bytes, expected " +
                std::to_string(record_size));
      out.insert(out.end(), cols[src].begin(), cols[src].end());
    }
    return out;
  }

  std::vector<std::vector<std::uint8_t>> alltoallv(
      std::span<const std::vector<std::uint8_t>> send) override {
    if (send.size() != size_)
      throw CollectiveError(CollectiveErrc::SizeMismatch,
                            "alltoallv needs one buffer per rank");
    return exchange(send);
  }

 private:
  // One frame to and from every peer. Outgoing frames are pushed by a writer
  // thread in rank order while this thread drains incoming frames in rank
  // order; the kernel buffers whatever arrives early.
  std::vector<std::vector<std::uint8_t>> exchange(
      std::span<const std::vector<std::uint8_t>> per_dst) {
    const Deadline deadline = Clock::now() + timeout_;
    std::vector<std::vector<std::uint8_t>> out(size_);
    out[rank_] = per_dst[rank_];
    if (size_ == 1) return out;

    for (std::uint32_t r = 0; r < size_; ++r)
      if (r != rank_) set_io_timeout(links_[r].fd(), deadline);

    std::exception_ptr writer_error;
    std::thread writer([&] {
      try {
        for (std::uint32_t dst = 0; dst < size_; ++dst)
          if (dst != rank_) send_frame(links_[dst], per_dst[dst]);
      } catch (...) {
        writer_error = std::current_exception();
      }
    });
    std::exception_ptr reader_error;
    try {
      for (std::uint32_t src = 0; src < size_; ++src)
        if (src != rank_) out[src] = recv_frame(links_[src]);
    } catch (...) {
      reader_error = std::current_exception();
    }
    writer.join();
    if (reader_error) std::rethrow_exception(reader_error);
    if (writer_error) std::rethrow_exception(writer_error);
    return out;
  }

  std::uint32_t rank_;
  std::uint32_t size_;
  std::vector<Socket> links_;  // links_[rank_] unused
  std::chrono::milliseconds timeout_;
};

}  // namespace

std::unique_ptr<Communicator> tcp_connect(const TcpOptions& options) {
  if (options.size == 0) throw ConfigError("group size must be >= 1");
  if (options.rank >= options.size)
    throw ConfigError("rank " + std::to_string(options.rank) +
                      " out of range for size " + std::to_string(options.size));
  if (options.size == 1)
    return std::make_unique<TcpComm>(0, 1, std::vector<Socket>{},
                                     options.timeout);

  const Deadline deadline = Clock::now() + options.timeout;
  const std::uint32_t R = options.size;
  const std::uint32_t me = options.rank;
  std::vector<Socket> links(R);

  if (me == 0) {
    auto [host, port] = parse_host_port(options.rendezvous);
    auto [listener, bound_port] = make_listener(host, port, static_cast<int>(R));
    (void)bound_port;

    std::vector<std::string> table(R);
    table[0] = options.rendezvous;
    for (std::uint32_t pending = R - 1; pending > 0; --pending) {
      Socket conn = accept_with_deadline(listener, deadline);
      set_io_timeout(conn.fd(), deadline);
      const std::uint32_t peer = recv_handshake(conn, R);
      if (peer == 0 || links[peer].valid())
        throw CollectiveError(CollectiveErrc::ProtocolViolation,
                              "duplicate registration for rank " +
                                  std::to_string(peer));
      send_handshake(conn, 0, R);
      auto addr = recv_frame(conn);
      table[peer] = std::string(addr.begin(), addr.end());
      links[peer] = std::move(conn);
    }

    std::string joined;
    for (std::uint32_t r = 0; r < R; ++r) {
      joined += table[r];
      if (r + 1 < R) joined += '\n';
    }
    const std::span<const std::uint8_t> payload(
        reinterpret_cast<const std::uint8_t*>(joined.data()), joined.size());
    for (std::uint32_t r = 1; r < R; ++r) send_frame(links[r], payload);
  } else {
    auto [listener, listen_port] = make_listener(options.advertise_host, 0,
                                                 static_cast<int>(R));

    auto [host0, port0] = parse_host_port(options.rendezvous);
    Socket to_root = connect_with_retry(host0, port0, deadline);
    set_io_timeout(to_root.fd(), deadline);
    send_handshake(to_root, me, R);
    if (recv_handshake(to_root, R) != 0)
      throw CollectiveError(CollectiveErrc::ProtocolViolation,
                            "rendezvous endpoint is not rank 0");
    const std::string my_addr =
        options.advertise_host + ":" + std::to_string(listen_port);
    send_frame(to_root, std::span<const std::uint8_t>(
                            reinterpret_cast<const std::uint8_t*>(my_addr.data()),
                            my_addr.size()));

    auto table_bytes = recv_frame(to_root);
    std::vector<std::string> table;
    {
      std::string acc;
      for (std::uint8_t b : table_bytes) {
        if (b == '\n') {
          table.push_back(acc);
          acc.clear();
        } else {
          acc += static_cast<char>(b);
        }
      }
      table.push_back(acc);
    }
    if (table.size() != R)
      throw CollectiveError(CollectiveErrc::ProtocolViolation,
                            "address table lists " +
                                std::to_string(table.size()) + " ranks, not " +
                                std::to_string(R));
    links[0] = std::move(to_root);

    // mesh: connect to every lower non-zero rank, then accept the higher ones
    for (std::uint32_t peer = 1; peer < me; ++peer) {
      auto [host, port] = parse_host_port(table[peer]);
      Socket conn = connect_with_retry(host, port, deadline);
      set_io_timeout(conn.fd(), deadline);
      send_handshake(conn, me, R);
      if (recv_handshake(conn, R) != peer)
        throw CollectiveError(CollectiveErrc::ProtocolViolation,
                              "reached the wrong rank at " + table[peer]);
      links[peer] = std::move(conn);
    }
    for (std::uint32_t pending = R - 1 - me; pending > 0; --pending) {
      Socket conn = accept_with_deadline(listener, deadline);
      set_io_timeout(conn.fd(), deadline);
      const std::uint32_t peer = recv_handshake(conn, R);
      if (peer <= me || links[peer].valid())
        throw CollectiveError(CollectiveErrc::ProtocolViolation,
                              "unexpected mesh connection from rank " +
                                  std::to_string(peer));
      send_handshake(conn, me, R);
      links[peer] = std::move(conn);
    }
  }

  return std::make_unique<TcpComm>(me, R, std::move(links), options.timeout);
}

}  // namespace xcsr
