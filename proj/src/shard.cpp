#include "xcsr/shard.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace xcsr {

ShardValidationError::ShardValidationError(std::vector<std::string> violations)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "invalid shard (" << violations.size() << " violation"
           << (violations.size() == 1 ? "" : "s") << ")";
        for (const auto& v : violations) os << "; " << v;
        return os.str();
      }()),
      violations_(std::move(violations)) {}

const char* to_string(CollectiveErrc kind) noexcept {
  switch (kind) {
    case CollectiveErrc::SizeMismatch: return "SizeMismatch";
    case CollectiveErrc::PeerFailure: return "PeerFailure";
    case CollectiveErrc::Timeout: return "Timeout";
    case CollectiveErrc::ProtocolViolation: return "ProtocolViolation";
  }
  return "Unknown";
}

CollectiveError::CollectiveError(CollectiveErrc kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

const char* to_string(View v) noexcept {
  return v == View::Row ? "row" : "column";
}

std::uint64_t XcsrShard::total_values() const {
  return std::accumulate(cell_value_counts.begin(), cell_value_counts.end(),
                         std::uint64_t{0});
}

std::vector<std::string> validate_shard(const XcsrShard& s) {
  std::vector<std::string> out;
  auto fail = [&out](auto&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    out.push_back(os.str());
  };

  if (s.value_size == 0) fail("value_size must be >= 1");
  if (s.major_start + s.major_count < s.major_start ||
      s.major_start + s.major_count > s.global_dim)
    fail("major interval [", s.major_start, ", ", s.major_start + s.major_count,
         ") exceeds global_dim ", s.global_dim);

  if (s.line_ids.size() != s.line_cell_counts.size())
    fail("line_ids length ", s.line_ids.size(), " != line_cell_counts length ",
         s.line_cell_counts.size());

  std::uint64_t cell_sum = 0;
  for (std::size_t i = 0; i < s.line_cell_counts.size(); ++i) {
    if (s.line_cell_counts[i] == 0)
      fail("line_cell_counts[", i, "] is 0 (empty lines are not stored)");
    cell_sum += s.line_cell_counts[i];
  }
  for (std::size_t i = 0; i < s.line_ids.size(); ++i) {
    if (s.line_ids[i] >= s.global_dim)
      fail("line_ids[", i, "] = ", s.line_ids[i], " >= global_dim ", s.global_dim);
    if (i > 0 && s.line_ids[i] <= s.line_ids[i - 1])
      fail("line_ids[", i, "] = ", s.line_ids[i], " not strictly increasing");
  }

  if (cell_sum != s.cell_ids.size())
    fail("sum of line_cell_counts ", cell_sum, " != cell_ids length ",
         s.cell_ids.size());
  if (s.cell_ids.size() != s.cell_value_counts.size())
    fail("cell_ids length ", s.cell_ids.size(), " != cell_value_counts length ",
         s.cell_value_counts.size());

  std::uint64_t value_sum = 0;
  for (std::size_t i = 0; i < s.cell_value_counts.size(); ++i) {
    if (s.cell_value_counts[i] == 0)
      fail("cell_value_counts[", i, "] is 0 (a present cell holds at least one value)");
    value_sum += s.cell_value_counts[i];
  }
  for (std::size_t i = 0; i < s.cell_ids.size(); ++i)
    if (s.cell_ids[i] >= s.global_dim)
      fail("cell_ids[", i, "] = ", s.cell_ids[i], " >= global_dim ", s.global_dim);

  // strict minor increase within each line, checked only over consistent
  // prefixes so earlier length violations do not cascade
  if (cell_sum == s.cell_ids.size() &&
      s.line_ids.size() == s.line_cell_counts.size()) {
    std::size_t cell = 0;
    for (std::size_t line = 0; line < s.line_cell_counts.size(); ++line) {
      for (std::uint64_t k = 0; k < s.line_cell_counts[line]; ++k, ++cell) {
        if (k > 0 && s.cell_ids[cell] <= s.cell_ids[cell - 1])
          fail("cell_ids[", cell, "] = ", s.cell_ids[cell],
               " not strictly increasing within line ", s.line_ids[line]);
      }
    }
  }

  if (s.value_size != 0) {
    const std::uint64_t expected = s.value_size * value_sum;
    if (s.values.size() != expected)
      fail("values length ", s.values.size(), " != value_size * total values = ",
           expected);
  }
  return out;
}

void require_valid(const XcsrShard& s) {
  auto violations = validate_shard(s);
  if (!violations.empty()) throw ShardValidationError(std::move(violations));
}

std::vector<std::string> validate_triplets(const DenseTriplets& t) {
  std::vector<std::string> out;
  auto fail = [&out](auto&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    out.push_back(os.str());
  };
  if (t.value_size == 0) fail("value_size must be >= 1");
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    const auto& e = t.entries[i];
    if (e.row >= t.global_dim || e.col >= t.global_dim)
      fail("entry ", i, " (", e.row, ",", e.col, ") outside dim ", t.global_dim);
    if (e.value_count == 0) fail("entry ", i, " has zero values");
    if (t.value_size != 0 && e.payload.size() != e.value_count * t.value_size)
      fail("entry ", i, " payload length ", e.payload.size(), " != ",
           e.value_count * t.value_size);
  }
  auto sorted = t.entries;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::tie(a.row, a.col) < std::tie(b.row, b.col);
  });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].row == sorted[i - 1].row && sorted[i].col == sorted[i - 1].col)
      fail("duplicate cell (", sorted[i].row, ",", sorted[i].col, ")");
  return out;
}

DenseTriplets to_triplets(const XcsrShard& s) {
  DenseTriplets t;
  t.global_dim = s.global_dim;
  t.value_size = s.value_size;
  t.entries.reserve(s.cell_ids.size());
  std::size_t cell = 0;
  std::uint64_t value_offset = 0;
  for (std::size_t line = 0; line < s.line_ids.size(); ++line) {
    for (std::uint64_t k = 0; k < s.line_cell_counts[line]; ++k, ++cell) {
      TripletEntry e;
      e.row = s.line_ids[line];
      e.col = s.cell_ids[cell];
      e.value_count = s.cell_value_counts[cell];
      const std::uint64_t bytes = e.value_count * s.value_size;
      e.payload.assign(s.values.begin() + value_offset,
                       s.values.begin() + value_offset + bytes);
      value_offset += bytes;
      t.entries.push_back(std::move(e));
    }
  }
  return t;
}

XcsrShard from_triplets(const DenseTriplets& t, std::uint64_t major_start,
                        std::uint64_t major_count, View view) {
  auto violations = validate_triplets(t);
  if (!violations.empty()) throw ShardValidationError(std::move(violations));

  std::vector<std::size_t> order(t.entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = t.entries[a];
    const auto& eb = t.entries[b];
    return std::tie(ea.row, ea.col) < std::tie(eb.row, eb.col);
  });

  XcsrShard s;
  s.view = view;
  s.global_dim = t.global_dim;
  s.major_start = major_start;
  s.major_count = major_count;
  s.value_size = t.value_size;
  for (std::size_t idx : order) {
    const auto& e = t.entries[idx];
    if (e.row < major_start || e.row >= major_start + major_count)
      throw std::out_of_range("triplet entry row " + std::to_string(e.row) +
                              " outside major interval [" +
                              std::to_string(major_start) + ", " +
                              std::to_string(major_start + major_count) + ")");
    if (s.line_ids.empty() || s.line_ids.back() != e.row) {
      s.line_ids.push_back(e.row);
      s.line_cell_counts.push_back(0);
    }
    ++s.line_cell_counts.back();
    s.cell_ids.push_back(e.col);
    s.cell_value_counts.push_back(e.value_count);
    s.values.insert(s.values.end(), e.payload.begin(), e.payload.end());
  }
  return s;
}

}  // namespace xcsr
