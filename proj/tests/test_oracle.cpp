#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "xcsr/oracle.hpp"

using namespace xcsr;

TEST_CASE("oracle_transpose basics") {
  DenseTriplets empty;
  CHECK(oracle_transpose(empty) == empty);

  DenseTriplets diagonal;
  diagonal.global_dim = 4;
  diagonal.value_size = 1;
  diagonal.entries.push_back({1, 1, 1, {7}});
  diagonal.entries.push_back({3, 3, 2, {8, 9}});
  CHECK(oracle_transpose(diagonal) == diagonal);

  DenseTriplets t;
  t.global_dim = 3;
  t.value_size = 1;
  t.entries.push_back({0, 1, 1, {'a'}});
  t.entries.push_back({2, 0, 2, {'b', 'c'}});
  const DenseTriplets got = oracle_transpose(t);
  REQUIRE(got.entries.size() == 2);
  CHECK(got.entries[0].row == 0);
  CHECK(got.entries[0].col == 2);
  CHECK(got.entries[0].payload == std::vector<std::uint8_t>{'b', 'c'});
  CHECK(got.entries[1].row == 1);
  CHECK(got.entries[1].col == 0);
  CHECK(got.entries[1].payload == std::vector<std::uint8_t>{'a'});
}

TEST_CASE("oracle_transpose is an involution") {
  DetRng rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto data = testutil::random_dataset(rng.next(), 2);
    CHECK(oracle_transpose(oracle_transpose(data.triplets)) == data.triplets);
  }
}

TEST_CASE("even_intervals splits with the first ranks taking the extra rows") {
  const auto iv = even_intervals(6, 3);
  REQUIRE(iv.size() == 3);
  CHECK(iv[0] == std::pair<std::uint64_t, std::uint64_t>{0, 2});
  CHECK(iv[1] == std::pair<std::uint64_t, std::uint64_t>{2, 2});
  CHECK(iv[2] == std::pair<std::uint64_t, std::uint64_t>{4, 2});

  const auto odd = even_intervals(7, 3);
  CHECK(odd[0].second == 3);
  CHECK(odd[1].second == 2);
  CHECK(odd[2].second == 2);
  CHECK(odd[2].first + odd[2].second == 7);
}

TEST_CASE("balanced generation: full-density single-rank dataset") {
  GenSpec spec;
  spec.mode = GenSpec::Mode::Balanced;
  spec.global_dim = 512;
  spec.ranks = 1;
  spec.cols_fixed = 512;
  spec.value_count_fixed = 10;
  spec.value_size = 4;
  spec.seed = 3;
  const Generated data = generate(spec);
  REQUIRE(data.shards.size() == 1);
  const XcsrShard& s = data.shards[0];
  CHECK(validate_shard(s).empty());
  CHECK(s.total_cells() == 512 * 512);
  CHECK(s.total_values() == 512 * 512 * 10);
  CHECK(s.values.size() == 512ull * 512 * 10 * 4);
  for (std::uint64_t c : s.cell_value_counts) CHECK(c == 10);
}

TEST_CASE("zero-dimension datasets give empty shards on every rank") {
  GenSpec spec;
  spec.mode = GenSpec::Mode::Balanced;
  spec.global_dim = 0;
  spec.ranks = 2;
  spec.cols_fixed = 0;
  spec.value_count_fixed = 1;
  spec.value_size = 8;
  const Generated data = generate(spec);
  REQUIRE(data.shards.size() == 2);
  for (const auto& s : data.shards) {
    CHECK(s.total_cells() == 0);
    CHECK(s.major_count == 0);
    CHECK(validate_shard(s).empty());
  }
  CHECK(data.triplets.entries.empty());
}

TEST_CASE("generation is deterministic for a fixed seed") {
  GenSpec spec;
  spec.mode = GenSpec::Mode::Heterogeneous;
  spec.global_dim = 64;
  spec.ranks = 3;
  spec.cols_min = 8;
  spec.cols_max = 32;
  spec.value_count_mean = 5.0;
  spec.value_size = 128;
  spec.seed = 777;
  const Generated a = generate(spec);
  const Generated b = generate(spec);
  CHECK(a.triplets == b.triplets);
  REQUIRE(a.shards.size() == b.shards.size());
  for (std::size_t i = 0; i < a.shards.size(); ++i)
    CHECK(a.shards[i] == b.shards[i]);

  spec.seed = 778;
  const Generated c = generate(spec);
  CHECK(a.triplets.entries != c.triplets.entries);
}

TEST_CASE("heterogeneous value counts hit the requested mean") {
  GenSpec spec;
  spec.mode = GenSpec::Mode::Heterogeneous;
  spec.global_dim = 64;
  spec.ranks = 1;
  spec.cols_min = 8;
  spec.cols_max = 32;
  spec.value_count_mean = 5.0;
  spec.value_size = 128;

  std::uint64_t cells = 0, values = 0;
  for (std::uint64_t seed = 0; cells < 100000; ++seed) {
    spec.seed = seed;
    const Generated data = generate(spec);
    for (const auto& e : data.triplets.entries) {
      ++cells;
      values += e.value_count;
      REQUIRE(e.value_count >= 1);
    }
  }
  const double mean = static_cast<double>(values) / static_cast<double>(cells);
  CHECK(mean == doctest::Approx(5.0).epsilon(0.1));  // 5 +/- 0.5
}

TEST_CASE("generated shards always validate and partition the dimension") {
  DetRng rng(9);
  for (int i = 0; i < 100; ++i) {
    const auto data = testutil::random_dataset(rng.next(), 1 + i % 5);
    std::uint64_t covered = 0;
    for (const auto& s : data.shards) {
      REQUIRE(validate_shard(s).empty());
      CHECK(s.major_start == covered);
      covered += s.major_count;
    }
    CHECK(covered == data.triplets.global_dim);
    CHECK(gather_and_compare(data.shards, data.triplets).ok);
  }
}

TEST_CASE("infeasible specs are rejected") {
  GenSpec spec;
  spec.mode = GenSpec::Mode::Balanced;
  spec.global_dim = 16;
  spec.cols_fixed = 32;  // more columns than the dimension
  CHECK_THROWS_AS(generate(spec), ConfigError);

  GenSpec h;
  h.mode = GenSpec::Mode::Heterogeneous;
  h.global_dim = 16;
  h.cols_min = 8;
  h.cols_max = 4;
  CHECK_THROWS_AS(generate(h), ConfigError);

  GenSpec z;
  z.global_dim = 4;
  z.ranks = 0;
  CHECK_THROWS_AS(generate(z), ConfigError);
}

TEST_CASE("gather_and_compare flags a flipped payload byte") {
  auto shards = testutil::sample_shards();
  const auto expected = testutil::sample_multigraph();
  CHECK(gather_and_compare(shards, expected).ok);

  shards[1].values[0] ^= 0xFF;
  const MatchReport report = gather_and_compare(shards, expected);
  CHECK_FALSE(report.ok);
  REQUIRE(report.differences.size() == 1);
  // rank 1's first payload byte belongs to cell (2,0)
  CHECK(report.differences[0].find("(2,0)") != std::string::npos);
  CHECK(report.differences[0].find("payload") != std::string::npos);
}

TEST_CASE("gather_and_compare reports missing and unexpected cells") {
  auto shards = testutil::sample_shards();
  auto expected = testutil::sample_multigraph();
  expected.entries.push_back({1, 5, 1, {'z'}});
  const MatchReport report = gather_and_compare(shards, expected);
  CHECK_FALSE(report.ok);
  REQUIRE(report.differences.size() == 1);
  CHECK(report.differences[0].find("missing cell (1,5)") != std::string::npos);
}

TEST_CASE("overlapping shard intervals are a partition error") {
  auto shards = testutil::sample_shards();
  shards[1].major_start = 1;  // overlaps shard 0's [0, 2)
  CHECK_THROWS_AS(gather_shards(shards), PartitionError);

  auto gapped = testutil::sample_shards();
  gapped.pop_back();
  CHECK_THROWS_AS(gather_shards(gapped), PartitionError);
}
