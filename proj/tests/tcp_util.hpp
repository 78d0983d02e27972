#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <future>
#include <string>
#include <thread>

#include "xcsr/tcp.hpp"

namespace testutil {

// Grabs an ephemeral port and releases it; the next bind may rarely race, so
// callers retry the whole setup on failure.
inline std::uint16_t probe_free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error("socket failed");
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  sa.sin_port = 0;
  if (::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    ::close(fd);
    throw std::runtime_error("bind failed");
  }
  socklen_t len = sizeof sa;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
  const std::uint16_t port = ntohs(sa.sin_port);
  ::close(fd);
  return port;
}

inline std::string fresh_rendezvous() {
  return "127.0.0.1:" + std::to_string(probe_free_port());
}

inline std::uint16_t port_of(const std::string& rendezvous) {
  const auto colon = rendezvous.rfind(':');
  return static_cast<std::uint16_t>(std::stoi(rendezvous.substr(colon + 1)));
}

inline int connect_loopback(std::uint16_t port) {
  for (int i = 0; i < 200; ++i) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    sa.sin_port = htons(port);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) == 0)
      return fd;
    ::close(fd);
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
  }
  return -1;
}

// Runs `body` on R in-process workers, each holding one TCP endpoint of a
// localhost mesh. Retries if the probed rendezvous port was stolen.
template <class F>
auto tcp_spawn(std::uint32_t ranks, F&& body)
    -> std::vector<std::invoke_result_t<F&, xcsr::Communicator&>> {
  using Result = std::invoke_result_t<F&, xcsr::Communicator&>;
  for (int attempt = 0;; ++attempt) {
    const std::string rendezvous = fresh_rendezvous();
    std::vector<std::future<Result>> futures;
    for (std::uint32_t r = 0; r < ranks; ++r) {
      futures.push_back(std::async(std::launch::async, [&, r] {
        xcsr::TcpOptions opt;
        opt.rendezvous = rendezvous;
        opt.rank = r;
        opt.size = ranks;
        opt.timeout = std::chrono::milliseconds(15000);
        auto comm = xcsr::tcp_connect(opt);
        return body(*comm);
      }));
    }
    std::vector<Result> out;
    try {
      for (auto& f : futures) out.push_back(f.get());
      return out;
    } catch (const xcsr::CollectiveError&) {
      for (auto& f : futures)
        if (f.valid()) try {
            f.get();
          } catch (...) {
          }
      if (attempt >= 2) throw;
    }
  }
}

}  // namespace testutil
