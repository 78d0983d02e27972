#include "xcsr/sim.hpp"

#include <condition_variable>
#include <mutex>

namespace xcsr {

struct SimWorld::Board {
  enum class Op { None, Allgather, Alltoall, Alltoallv };

  explicit Board(std::uint32_t n) : size(n) {}

  std::mutex m;
  std::condition_variable cv;
  const std::uint32_t size;

  Op op = Op::None;
  std::size_t record_size = 0;
  std::uint32_t arrived = 0;
  std::uint32_t pickups = 0;
  std::uint64_t generation = 0;
  std::vector<std::vector<std::vector<std::uint8_t>>> inbox;   // [src][dst]
  std::vector<std::vector<std::vector<std::uint8_t>>> outbox;  // [dst][src]
  bool failed = false;
  std::string failure;

  void fail_locked(const std::string& what) {
    if (!failed) {
      failed = true;
      failure = what;
    }
    cv.notify_all();
  }

  const char* op_name(Op o) const {
    switch (o) {
      case Op::Allgather: return "allgather";
      case Op::Alltoall: return "alltoall";
      case Op::Alltoallv: return "alltoallv";
      default: return "none";
    }
  }

  // Deposits one buffer per destination and blocks until every rank has
  // entered the same collective; returns the buffers addressed to `rank`,
  // indexed by source.
  std::vector<std::vector<std::uint8_t>> exchange(
      std::uint32_t rank, Op want, std::size_t rec_size,
      std::vector<std::vector<std::uint8_t>> per_dst) {
    std::unique_lock lk(m);
    cv.wait(lk, [&] { return failed || pickups == 0; });
    if (failed) throw CollectiveError(CollectiveErrc::PeerFailure, failure);

    if (arrived == 0) {
      op = want;
      record_size = rec_size;
      inbox.assign(size, {});
    } else {
      if (want != op) {
        std::string msg = std::string("rank ") + std::to_string(rank) +
                          " entered " + op_name(want) + " while peers are in " +
                          op_name(op);
        fail_locked(msg);
        throw CollectiveError(CollectiveErrc::ProtocolViolation, msg);
      }
      if (rec_size != record_size) {
        std::string msg = std::string("rank ") + std::to_string(rank) +
                          " record size " + std::to_string(rec_size) +
                          " differs from peers' " + std::to_string(record_size);
        fail_locked(msg);
        throw CollectiveError(CollectiveErrc::SizeMismatch, msg);
      }
    }

    inbox[rank] = std::move(per_dst);
    ++arrived;
    const std::uint64_t round = generation + 1;
    if (arrived == size) {
      outbox.assign(size, {});
      for (std::uint32_t dst = 0; dst < size; ++dst) {
        outbox[dst].reserve(size);
        for (std::uint32_t src = 0; src < size; ++src)
          outbox[dst].push_back(std::move(inbox[src][dst]));
      }
      arrived = 0;
      pickups = size;
      ++generation;
      cv.notify_all();
    } else {
      cv.wait(lk, [&] { return failed || generation >= round; });
      if (generation < round)
        throw CollectiveError(CollectiveErrc::PeerFailure, failure);
    }

    auto mine = std::move(outbox[rank]);
    if (--pickups == 0) {
      inbox.clear();
      outbox.clear();
      cv.notify_all();
    }
    return mine;
  }
};

namespace {

class SimEndpoint final : public Communicator {
 public:
  SimEndpoint(std::shared_ptr<SimWorld::Board> board, std::uint32_t rank,
              std::uint32_t size)
      : board_(std::move(board)), rank_(rank), size_(size) {}

  std::uint32_t rank() const noexcept override { return rank_; }
  std::uint32_t size() const noexcept override { return size_; }

  std::vector<std::vector<std::uint8_t>> allgather(
      std::span<const std::uint8_t> record) override {
    std::vector<std::vector<std::uint8_t>> per_dst(
        size_, std::vector<std::uint8_t>(record.begin(), record.end()));
    return board_->exchange(rank_, SimWorld::Board::Op::Allgather, record.size(),
                            std::move(per_dst));
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
    auto cols = board_->exchange(rank_, SimWorld::Board::Op::Alltoall,
                                 record_size, std::move(per_dst));
    std::vector<std::uint8_t> out;
    out.reserve(record_size * size_);
    for (auto& c : cols) out.insert(out.end(), c.begin(), c.end());
    return out;
  }

  std::vector<std::vector<std::uint8_t>> alltoallv(
      std::span<const std::vector<std::uint8_t>> send) override {
    if (send.size() != size_)
      throw CollectiveError(CollectiveErrc::SizeMismatch,
                            "alltoallv needs one buffer per rank");
    std::vector<std::vector<std::uint8_t>> per_dst(send.begin(), send.end());
    return board_->exchange(rank_, SimWorld::Board::Op::Alltoallv, 0,
                            std::move(per_dst));
  }

 private:
  std::shared_ptr<SimWorld::Board> board_;
  std::uint32_t rank_;
  std::uint32_t size_;
};

}  // namespace

SimWorld::SimWorld(std::uint32_t size) {
  if (size == 0) throw ConfigError("SimWorld requires at least one rank");
  board_ = std::make_shared<Board>(size);
  endpoints_.reserve(size);
  for (std::uint32_t r = 0; r < size; ++r)
    endpoints_.push_back(std::make_unique<SimEndpoint>(board_, r, size));
}

SimWorld::~SimWorld() = default;

std::uint32_t SimWorld::size() const noexcept { return board_->size; }

Communicator& SimWorld::endpoint(std::uint32_t rank) {
  if (rank >= endpoints_.size())
    throw ConfigError("endpoint rank out of range");
  return *endpoints_[rank];
}

void SimWorld::post_failure(std::uint32_t rank, const std::string& what) {
  std::lock_guard lk(board_->m);
  board_->fail_locked("rank " + std::to_string(rank) + " failed: " + what);
}

}  // namespace xcsr
