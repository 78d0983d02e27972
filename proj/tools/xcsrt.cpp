// xcsrt: generate, transpose, verify and benchmark distributed XCSR datasets.
//
// The sim backend drives all ranks as threads in this process; the tcp
// backend re-executes this binary once per rank (hidden --rank flag) and the
// workers meet at the rendezvous address.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "xcsr/engine.hpp"
#include "xcsr/instrument.hpp"
#include "xcsr/io.hpp"
#include "xcsr/manifest.hpp"
#include "xcsr/oracle.hpp"
#include "xcsr/sim.hpp"
#include "xcsr/tcp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xcsr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;

struct OutSpec {
  fs::path dir;
  std::string name;
};

OutSpec split_out(const std::string& out) {
  fs::path p(out);
  if (p.filename().empty())
    throw ConfigError("--out must end in a dataset name, got '" + out + "'");
  OutSpec spec;
  spec.dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
  spec.name = p.filename().string();
  return spec;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

json stats_json(const CommStats& s) {
  return json{{"allgather_calls", s.allgather_calls},
              {"alltoall_calls", s.alltoall_calls},
              {"alltoallv_calls", s.alltoallv_calls},
              {"bytes_sent", s.bytes_sent},
              {"bytes_received", s.bytes_received},
              {"payload_bytes_sent", s.payload_bytes_sent},
              {"payload_bytes_received", s.payload_bytes_received}};
}

CommStats stats_from_json(const json& j) {
  CommStats s;
  s.allgather_calls = j.at("allgather_calls").get<std::uint64_t>();
  s.alltoall_calls = j.at("alltoall_calls").get<std::uint64_t>();
  s.alltoallv_calls = j.at("alltoallv_calls").get<std::uint64_t>();
  s.bytes_sent = j.at("bytes_sent").get<std::uint64_t>();
  s.bytes_received = j.at("bytes_received").get<std::uint64_t>();
  s.payload_bytes_sent = j.at("payload_bytes_sent").get<std::uint64_t>();
  s.payload_bytes_received = j.at("payload_bytes_received").get<std::uint64_t>();
  return s;
}

struct RankOutcome {
  XcsrShard shard;
  CommStats stats;
};

std::vector<RankOutcome> run_transpose_sim(std::vector<XcsrShard> shards,
                                           std::uint32_t repeat) {
  const auto ranks = static_cast<std::uint32_t>(shards.size());
  return sim_spawn(ranks, [&](Communicator& comm) -> RankOutcome {
    InstrumentedComm icomm(comm);
    XcsrShard shard = std::move(shards[comm.rank()]);
    const RankLayout layout = compute_rank_layout(icomm, shard);
    for (std::uint32_t k = 0; k < repeat; ++k)
      shard = distributed_transpose(shard, layout, icomm);
    return RankOutcome{std::move(shard), icomm.stats()};
  });
}

RankOutcome run_transpose_tcp(XcsrShard shard, std::uint32_t repeat,
                              const TcpOptions& options) {
  auto comm = tcp_connect(options);
  InstrumentedComm icomm(*comm);
  const RankLayout layout = compute_rank_layout(icomm, shard);
  for (std::uint32_t k = 0; k < repeat; ++k)
    shard = distributed_transpose(shard, layout, icomm);
  return RankOutcome{std::move(shard), icomm.stats()};
}

fs::path self_exe() {
  std::error_code ec;
  auto p = fs::read_symlink("/proc/self/exe", ec);
  if (ec) throw ConfigError("cannot resolve own executable path");
  return p;
}

// Launches one worker process per rank and waits for all of them. Returns
// the first nonzero exit code, 0 if every worker succeeded.
int spawn_workers(const std::vector<std::vector<std::string>>& argv_per_rank) {
  const fs::path exe = self_exe();
  std::vector<pid_t> pids;
  pids.reserve(argv_per_rank.size());
  for (const auto& args : argv_per_rank) {
    std::vector<std::string> full;
    full.push_back(exe.string());
    full.insert(full.end(), args.begin(), args.end());
    std::vector<char*> cargs;
    cargs.reserve(full.size() + 1);
    for (auto& a : full) cargs.push_back(a.data());
    cargs.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) throw CollectiveError(CollectiveErrc::PeerFailure, "fork failed");
    if (pid == 0) {
      ::execv(exe.c_str(), cargs.data());
      std::perror("execv");
      ::_exit(kExitBackend);
    }
    pids.push_back(pid);
  }
  int worst = 0;
  for (pid_t pid : pids) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : kExitBackend;
    if (code != 0 && worst == 0) worst = code;
  }
  return worst;
}

std::string default_rendezvous() { return "127.0.0.1:29650"; }

struct GenFlags {
  std::string mode = "heterogeneous";
  std::uint64_t dim = 512;
  std::uint32_t ranks = 4;
  std::uint64_t cols_min = 64, cols_max = 256;
  std::uint64_t cols = 512;
  double values_mean = 5.0;
  std::uint64_t values = 10;
  std::uint64_t value_size = 0;  // 0: per-mode default
  std::uint64_t seed = 1;

  GenSpec to_spec() const {
    GenSpec s;
    if (mode == "balanced") {
      s.mode = GenSpec::Mode::Balanced;
      s.cols_fixed = cols;
      s.value_count_fixed = values;
      s.value_size = value_size ? value_size : 4;
    } else if (mode == "heterogeneous") {
      s.mode = GenSpec::Mode::Heterogeneous;
      s.cols_min = cols_min;
      s.cols_max = cols_max;
      s.value_count_mean = values_mean;
      s.value_size = value_size ? value_size : 128;
    } else {
      throw ConfigError("unknown mode '" + mode + "'");
    }
    s.global_dim = dim;
    s.ranks = ranks;
    s.seed = seed;
    return s;
  }
};

void add_gen_flags(CLI::App* cmd, GenFlags& f) {
  cmd->add_option("--mode", f.mode, "dataset recipe: heterogeneous|balanced")
      ->check(CLI::IsMember({"heterogeneous", "balanced"}));
  cmd->add_option("--dim", f.dim, "global matrix dimension (rows = columns)");
  cmd->add_option("--ranks", f.ranks, "number of ranks to partition across");
  cmd->add_option("--cols-min", f.cols_min, "heterogeneous: min columns per row");
  cmd->add_option("--cols-max", f.cols_max, "heterogeneous: max columns per row");
  cmd->add_option("--cols", f.cols, "balanced: columns per row");
  cmd->add_option("--values-mean", f.values_mean,
                  "heterogeneous: mean values per cell (1 + Poisson)");
  cmd->add_option("--values", f.values, "balanced: values per cell");
  cmd->add_option("--value-size", f.value_size,
                  "bytes per value (default 128 heterogeneous, 4 balanced)");
  cmd->add_option("--seed", f.seed, "generator seed");
}

int cmd_gen(const GenFlags& flags, const std::string& out) {
  const OutSpec spec = split_out(out);
  fs::create_directories(spec.dir);
  const GenSpec gen_spec = flags.to_spec();
  Generated data = generate(gen_spec);

  Manifest m;
  m.dataset = spec.name;
  m.spec = gen_spec;
  for (std::uint32_t r = 0; r < gen_spec.ranks; ++r) {
    const std::string file = shard_file_name(spec.name, r);
    write_shard_file(data.shards[r], spec.dir / file);
    m.files.push_back(file);
  }
  write_manifest(m, spec.dir / (spec.name + ".manifest.json"));
  std::cout << "wrote " << gen_spec.ranks << " shard files and "
            << (spec.dir / (spec.name + ".manifest.json")).string() << " ("
            << data.triplets.entries.size() << " cells)\n";
  return kExitOk;
}

void write_stats_file(const fs::path& path, const std::string& backend,
                      std::uint32_t ranks, std::uint32_t repeat, double wall,
                      const std::vector<CommStats>& per_rank) {
  CommStats total;
  for (const auto& s : per_rank) total += s;
  json j;
  j["backend"] = backend;
  j["ranks"] = ranks;
  j["repeat"] = repeat;
  j["wall_time_s"] = wall;
  j["total"] = stats_json(total);
  j["per_rank"] = json::array();
  for (const auto& s : per_rank) j["per_rank"].push_back(stats_json(s));
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
}

int cmd_transpose(const std::string& input, const std::string& out,
                  std::uint32_t repeat, const std::string& backend,
                  const std::string& rendezvous, double timeout_s,
                  std::int64_t worker_rank) {
  const fs::path manifest_path(input);
  Manifest m = read_manifest(manifest_path);
  const fs::path in_dir = manifest_path.parent_path().empty()
                              ? fs::path(".")
                              : manifest_path.parent_path();
  const OutSpec out_spec = split_out(out);
  const std::uint32_t ranks = m.spec.ranks;

  Manifest out_manifest = m;
  out_manifest.dataset = out_spec.name;
  out_manifest.transposes_applied = m.transposes_applied + repeat;
  out_manifest.files.clear();
  for (std::uint32_t r = 0; r < ranks; ++r)
    out_manifest.files.push_back(shard_file_name(out_spec.name, r));

  if (backend == "tcp" && worker_rank >= 0) {
    // worker process: one rank of the tcp run
    TcpOptions opts;
    opts.rendezvous = rendezvous;
    opts.rank = static_cast<std::uint32_t>(worker_rank);
    opts.size = ranks;
    opts.timeout = std::chrono::milliseconds(
        static_cast<std::int64_t>(timeout_s * 1000.0));
    const auto t0 = std::chrono::steady_clock::now();
    XcsrShard shard = read_shard_file(m.file_path(in_dir, opts.rank));
    RankOutcome outcome = run_transpose_tcp(std::move(shard), repeat, opts);
    write_shard_file(outcome.shard,
                     out_spec.dir / shard_file_name(out_spec.name, opts.rank));
    json j;
    j["rank"] = opts.rank;
    j["wall_time_s"] = seconds_since(t0);
    j["stats"] = stats_json(outcome.stats);
    std::ofstream sf(out_spec.dir / (out_spec.name + ".r" +
                                     std::to_string(opts.rank) + ".stats.json"),
                     std::ios::trunc);
    sf << j.dump(2) << '\n';
    return kExitOk;
  }

  fs::create_directories(out_spec.dir);
  const auto t0 = std::chrono::steady_clock::now();

  if (backend == "sim") {
    std::vector<XcsrShard> shards;
    shards.reserve(ranks);
    for (std::uint32_t r = 0; r < ranks; ++r)
      shards.push_back(read_shard_file(m.file_path(in_dir, r)));
    auto outcomes = run_transpose_sim(std::move(shards), repeat);
    std::vector<CommStats> per_rank;
    for (std::uint32_t r = 0; r < ranks; ++r) {
      write_shard_file(outcomes[r].shard,
                       out_spec.dir / shard_file_name(out_spec.name, r));
      per_rank.push_back(outcomes[r].stats);
    }
    write_manifest(out_manifest,
                   out_spec.dir / (out_spec.name + ".manifest.json"));
    write_stats_file(out_spec.dir / (out_spec.name + ".stats.json"), "sim",
                     ranks, repeat, seconds_since(t0), per_rank);
  } else if (backend == "tcp") {
    // parent: spawn one worker process per rank
    std::vector<std::vector<std::string>> argv(ranks);
    for (std::uint32_t r = 0; r < ranks; ++r)
      argv[r] = {"transpose",
                 "--input",
                 input,
                 "--out",
                 out,
                 "--repeat",
                 std::to_string(repeat),
                 "--backend",
                 "tcp",
                 "--rendezvous",
                 rendezvous,
                 "--timeout-s",
                 std::to_string(timeout_s),
                 "--rank",
                 std::to_string(r)};
    const int rc = spawn_workers(argv);
    if (rc != 0) {
      std::cerr << "tcp workers failed (exit " << rc << ")\n";
      return kExitBackend;
    }
    write_manifest(out_manifest,
                   out_spec.dir / (out_spec.name + ".manifest.json"));
    std::vector<CommStats> per_rank;
    for (std::uint32_t r = 0; r < ranks; ++r) {
      std::ifstream sf(out_spec.dir / (out_spec.name + ".r" +
                                       std::to_string(r) + ".stats.json"));
      json j;
      sf >> j;
      per_rank.push_back(stats_from_json(j.at("stats")));
    }
    write_stats_file(out_spec.dir / (out_spec.name + ".stats.json"), "tcp",
                     ranks, repeat, seconds_since(t0), per_rank);
  } else {
    throw ConfigError("unknown backend '" + backend + "'");
  }

  std::cout << "transposed " << ranks << " shards " << repeat << "x ("
            << backend << ") -> "
            << (out_spec.dir / (out_spec.name + ".manifest.json")).string()
            << "\n";
  return kExitOk;
}

int cmd_verify(const std::string& input, const std::string& output,
               const std::string& expect) {
  const fs::path in_path(input), out_path(output);
  const Manifest in_m = read_manifest(in_path);
  const Manifest out_m = read_manifest(out_path);
  const fs::path in_dir =
      in_path.parent_path().empty() ? fs::path(".") : in_path.parent_path();
  const fs::path out_dir =
      out_path.parent_path().empty() ? fs::path(".") : out_path.parent_path();

  std::vector<fs::path> in_files, out_files;
  for (std::uint32_t r = 0; r < in_m.spec.ranks; ++r)
    in_files.push_back(in_m.file_path(in_dir, r));
  for (std::uint32_t r = 0; r < out_m.spec.ranks; ++r)
    out_files.push_back(out_m.file_path(out_dir, r));

  DenseTriplets in_data = merge_shards(in_files);
  DenseTriplets out_data = merge_shards(out_files);

  bool want_transpose;
  if (expect == "transpose") {
    want_transpose = true;
  } else if (expect == "identity") {
    want_transpose = false;
  } else {
    want_transpose =
        ((out_m.transposes_applied - in_m.transposes_applied) % 2) != 0;
  }
  const DenseTriplets expected =
      want_transpose ? oracle_transpose(in_data) : in_data;

  MatchReport report = compare_triplets(out_data, expected);
  std::cout << (report.ok ? "PASS" : "FAIL") << ": output vs "
            << (want_transpose ? "transposed input" : "input") << ": "
            << report.summary << "\n";
  for (const auto& d : report.differences) std::cout << "  " << d << "\n";
  return report.ok ? kExitOk : kExitVerifyFailed;
}

struct BenchFlags {
  std::string mode = "weak";
  std::string backend = "sim";
  std::string ranks_list = "1,2,4,8";
  std::uint64_t rows_per_rank = 0;
  std::uint64_t total_rows = 0;
  std::string recipe = "balanced";
  GenFlags gen;
  std::uint32_t repetitions = 1;
  std::string csv;
  std::string rendezvous = default_rendezvous();
  double timeout_s = 30.0;
};

std::vector<std::uint32_t> parse_rank_list(const std::string& s) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    const long v = std::stol(tok);
    if (v < 1) throw ConfigError("rank list entries must be >= 1");
    out.push_back(static_cast<std::uint32_t>(v));
  }
  if (out.empty()) throw ConfigError("empty rank list");
  return out;
}

int cmd_bench(const BenchFlags& flags) {
  const auto rank_values = parse_rank_list(flags.ranks_list);
  const bool weak = flags.mode == "weak";
  if (weak && flags.rows_per_rank == 0)
    throw ConfigError("weak scaling needs --rows-per-rank");
  if (!weak && flags.total_rows == 0)
    throw ConfigError("strong scaling needs --total-rows");

  std::ofstream csv_file;
  std::ostream* csv = &std::cout;
  if (!flags.csv.empty()) {
    csv_file.open(flags.csv, std::ios::trunc);
    if (!csv_file) throw ConfigError("cannot open CSV file " + flags.csv);
    csv = &csv_file;
  }
  *csv << "mode,backend,ranks,rows_per_rank,total_rows,value_size,"
          "repetitions,wall_time_s,bytes_sent,bytes_recv\n";
  csv->flush();

  for (std::uint32_t ranks : rank_values) {
    const std::uint64_t total_rows =
        weak ? flags.rows_per_rank * ranks : flags.total_rows;
    const std::uint64_t rows_per_rank = weak ? flags.rows_per_rank : flags.total_rows / ranks;

    GenFlags gf = flags.gen;
    gf.mode = flags.recipe;
    gf.dim = total_rows;
    gf.ranks = ranks;
    const GenSpec spec = gf.to_spec();

    double wall = 0.0;
    CommStats total;
    if (flags.backend == "sim") {
      Generated data = generate(spec);
      const auto t0 = std::chrono::steady_clock::now();
      auto outcomes = run_transpose_sim(std::move(data.shards), flags.repetitions);
      wall = seconds_since(t0);
      for (const auto& o : outcomes) total += o.stats;
    } else if (flags.backend == "tcp") {
      const fs::path dir =
          fs::temp_directory_path() / ("xcsrt-bench-" + std::to_string(::getpid()) +
                                       "-" + std::to_string(ranks));
      fs::create_directories(dir);
      GenFlags tmp = gf;
      cmd_gen(tmp, (dir / "in").string());
      const auto t0 = std::chrono::steady_clock::now();
      const int rc = cmd_transpose((dir / "in.manifest.json").string(),
                                   (dir / "out").string(), flags.repetitions,
                                   "tcp", flags.rendezvous, flags.timeout_s, -1);
      wall = seconds_since(t0);
      if (rc != 0) {
        std::cerr << "bench aborted: tcp run failed for ranks=" << ranks << "\n";
        return kExitBackend;
      }
      std::ifstream sf(dir / "out.stats.json");
      json j;
      sf >> j;
      total = stats_from_json(j.at("total"));
      fs::remove_all(dir);
    } else {
      throw ConfigError("unknown backend '" + flags.backend + "'");
    }

    *csv << flags.mode << ',' << flags.backend << ',' << ranks << ','
         << rows_per_rank << ',' << total_rows << ',' << spec.value_size << ','
         << flags.repetitions << ',' << wall << ',' << total.bytes_sent << ','
         << total.bytes_received << '\n';
    csv->flush();
    std::cerr << "ranks=" << ranks << " rows=" << total_rows << " wall=" << wall
              << "s sent=" << total.bytes_sent << "B recv="
              << total.bytes_received << "B\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "distributed transposition of multigraph / high-cardinality sparse "
      "matrices in the XCSR format"};
  app.require_subcommand(1);

  GenFlags gen_flags;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "generate a partitioned dataset");
  add_gen_flags(gen_cmd, gen_flags);
  gen_cmd->add_option("--out", gen_out, "output path prefix (dir/name)")
      ->required();

  std::string tr_input, tr_out, tr_backend = "sim";
  std::string tr_rendezvous = default_rendezvous();
  std::uint32_t tr_repeat = 1;
  double tr_timeout = 30.0;
  std::int64_t tr_rank = -1;
  auto* tr_cmd = app.add_subcommand("transpose", "run k distributed transposes");
  tr_cmd->add_option("--input", tr_input, "input manifest")->required();
  tr_cmd->add_option("--out", tr_out, "output path prefix (dir/name)")
      ->required();
  tr_cmd->add_option("--repeat", tr_repeat, "number of chained transposes")
      ->check(CLI::PositiveNumber);
  tr_cmd->add_option("--backend", tr_backend, "sim|tcp")
      ->check(CLI::IsMember({"sim", "tcp"}));
  tr_cmd->add_option("--rendezvous", tr_rendezvous,
                     "tcp: rank 0 address (host:port)");
  tr_cmd->add_option("--timeout-s", tr_timeout, "tcp: collective timeout");
  tr_cmd->add_option("--rank", tr_rank,
                     "tcp worker mode: run as this single rank");

  std::string vf_input, vf_output, vf_expect = "auto";
  auto* vf_cmd = app.add_subcommand(
      "verify", "check an output dataset against the brute-force transpose");
  vf_cmd->add_option("--input", vf_input, "input manifest")->required();
  vf_cmd->add_option("--output", vf_output, "output manifest")->required();
  vf_cmd->add_option("--expect", vf_expect,
                     "auto|transpose|identity (auto uses the parity of the "
                     "applied transpose count)")
      ->check(CLI::IsMember({"auto", "transpose", "identity"}));

  BenchFlags bench_flags;
  auto* bench_cmd =
      app.add_subcommand("bench", "weak/strong scaling sweep with CSV output");
  bench_cmd->add_option("--mode", bench_flags.mode, "weak|strong")
      ->check(CLI::IsMember({"weak", "strong"}));
  bench_cmd->add_option("--backend", bench_flags.backend, "sim|tcp")
      ->check(CLI::IsMember({"sim", "tcp"}));
  bench_cmd->add_option("--ranks", bench_flags.ranks_list,
                        "comma-separated rank counts, e.g. 1,2,4,8");
  bench_cmd->add_option("--rows-per-rank", bench_flags.rows_per_rank,
                        "weak scaling: rows per rank");
  bench_cmd->add_option("--total-rows", bench_flags.total_rows,
                        "strong scaling: total rows");
  bench_cmd->add_option("--recipe", bench_flags.recipe,
                        "balanced|heterogeneous dataset recipe")
      ->check(CLI::IsMember({"balanced", "heterogeneous"}));
  bench_cmd->add_option("--cols", bench_flags.gen.cols,
                        "balanced: columns per row");
  bench_cmd->add_option("--cols-min", bench_flags.gen.cols_min,
                        "heterogeneous: min columns per row");
  bench_cmd->add_option("--cols-max", bench_flags.gen.cols_max,
                        "heterogeneous: max columns per row");
  bench_cmd->add_option("--values", bench_flags.gen.values,
                        "balanced: values per cell");
  bench_cmd->add_option("--values-mean", bench_flags.gen.values_mean,
                        "heterogeneous: mean values per cell");
  bench_cmd->add_option("--value-size", bench_flags.gen.value_size,
                        "bytes per value");
  bench_cmd->add_option("--seed", bench_flags.gen.seed, "generator seed");
  bench_cmd->add_option("--repetitions", bench_flags.repetitions,
                        "chained transposes per configuration");
  bench_cmd->add_option("--csv", bench_flags.csv,
                        "CSV output path (default stdout)");
  bench_cmd->add_option("--rendezvous", bench_flags.rendezvous,
                        "tcp: rank 0 address");
  bench_cmd->add_option("--timeout-s", bench_flags.timeout_s,
                        "tcp: collective timeout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen(gen_flags, gen_out);
    if (tr_cmd->parsed())
      return cmd_transpose(tr_input, tr_out, tr_repeat, tr_backend,
                           tr_rendezvous, tr_timeout, tr_rank);
    if (vf_cmd->parsed()) return cmd_verify(vf_input, vf_output, vf_expect);
    if (bench_cmd->parsed()) return cmd_bench(bench_flags);
  } catch (const CollectiveError& e) {
    std::cerr << "backend failure: " << e.what() << "\n";
    return kExitBackend;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const PartitionError& e) {
    std::cerr << "partition error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
