#include "xcsr/manifest.hpp"

#include <fstream>

#include <json.hpp>

namespace xcsr {

namespace {
using nlohmann::json;

const char* mode_name(GenSpec::Mode m) {
  return m == GenSpec::Mode::Balanced ? "balanced" : "heterogeneous";
}

GenSpec::Mode mode_of(const std::string& name) {
  if (name == "balanced") return GenSpec::Mode::Balanced;
  if (name == "heterogeneous") return GenSpec::Mode::Heterogeneous;
  throw FormatError("unknown dataset mode '" + name + "'");
}
}  // namespace

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  json j;
  j["dataset"] = m.dataset;
  j["mode"] = mode_name(m.spec.mode);
  j["global_dim"] = m.spec.global_dim;
  j["ranks"] = m.spec.ranks;
  j["cols_min"] = m.spec.cols_min;
  j["cols_max"] = m.spec.cols_max;
  j["cols_fixed"] = m.spec.cols_fixed;
  j["value_count_mean"] = m.spec.value_count_mean;
  j["value_count_fixed"] = m.spec.value_count_fixed;
  j["value_size"] = m.spec.value_size;
  j["seed"] = m.spec.seed;
  j["transposes_applied"] = m.transposes_applied;
  j["files"] = m.files;

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest " + path.string() + ": " + e.what());
  }
  try {
    Manifest m;
    m.dataset = j.at("dataset").get<std::string>();
    m.spec.mode = mode_of(j.at("mode").get<std::string>());
    m.spec.global_dim = j.at("global_dim").get<std::uint64_t>();
    m.spec.ranks = j.at("ranks").get<std::uint32_t>();
    m.spec.cols_min = j.at("cols_min").get<std::uint64_t>();
    m.spec.cols_max = j.at("cols_max").get<std::uint64_t>();
    m.spec.cols_fixed = j.at("cols_fixed").get<std::uint64_t>();
    m.spec.value_count_mean = j.at("value_count_mean").get<double>();
    m.spec.value_count_fixed = j.at("value_count_fixed").get<std::uint64_t>();
    m.spec.value_size = j.at("value_size").get<std::uint64_t>();
    m.spec.seed = j.at("seed").get<std::uint64_t>();
    m.transposes_applied = j.at("transposes_applied").get<std::uint32_t>();
    m.files = j.at("files").get<std::vector<std::string>>();
    if (m.files.size() != m.spec.ranks)
      throw FormatError("manifest lists " + std::to_string(m.files.size()) +
                        " files for " + std::to_string(m.spec.ranks) + " ranks");
    return m;
  } catch (const json::exception& e) {
    throw FormatError("manifest " + path.string() + " is missing fields: " +
                      e.what());
  }
}

}  // namespace xcsr
