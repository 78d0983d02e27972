#pragma once

#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "xcsr/comm.hpp"

namespace xcsr {

/// Deterministic in-process collective backend: R endpoints share one
/// exchange board and every collective acts as a barrier. No timeouts; a
/// worker that dies mid-collective fails the whole world so the remaining
/// ranks abort with PeerFailure instead of blocking forever.
class SimWorld {
 public:
  explicit SimWorld(std::uint32_t size);
  ~SimWorld();

  SimWorld(const SimWorld&) = delete;
  SimWorld& operator=(const SimWorld&) = delete;

  std::uint32_t size() const noexcept;

  /// Endpoint for `rank`; each must be driven by exactly one worker.
  Communicator& endpoint(std::uint32_t rank);

  /// Marks the world failed (a rank died outside a collective); wakes every
  /// blocked rank with PeerFailure.
  void post_failure(std::uint32_t rank, const std::string& what);

  struct Board;  // defined in sim.cpp

 private:
  std::shared_ptr<Board> board_;
  std::vector<std::unique_ptr<Communicator>> endpoints_;
};

/// Runs `body(comm)` on R concurrent rank workers over a fresh SimWorld and
/// returns the per-rank results indexed by rank. Deterministic bodies give
/// deterministic results. If any worker throws, the remaining ranks are
/// aborted and a single CollectiveError naming the failed rank(s) is thrown.
template <class F>
auto sim_spawn(std::uint32_t ranks, F&& body)
    -> std::vector<std::invoke_result_t<F&, Communicator&>> {
  using Result = std::invoke_result_t<F&, Communicator&>;
  static_assert(!std::is_void_v<Result>, "rank bodies must return a value");
  if (ranks == 0) throw ConfigError("sim_spawn requires at least one rank");

  SimWorld world(ranks);
  std::vector<std::optional<Result>> slots(ranks);
  std::vector<std::string> errors(ranks);
  std::vector<std::thread> workers;
  workers.reserve(ranks);
  for (std::uint32_t r = 0; r < ranks; ++r) {
    workers.emplace_back([&, r] {
      try {
        slots[r].emplace(body(world.endpoint(r)));
      } catch (const std::exception& e) {
        errors[r] = e.what();
        world.post_failure(r, e.what());
      }
    });
  }
  for (auto& w : workers) w.join();

  std::ostringstream failed;
  bool any = false;
  for (std::uint32_t r = 0; r < ranks; ++r) {
    if (!errors[r].empty()) {
      if (any) failed << "; ";
      failed << "rank " << r << ": " << errors[r];
      any = true;
    }
  }
  if (any) throw CollectiveError(CollectiveErrc::PeerFailure, failed.str());

  std::vector<Result> out;
  out.reserve(ranks);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace xcsr
