#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "xcsr/oracle.hpp"

namespace xcsr {

/// Sidecar JSON describing a partitioned dataset: the generator parameters,
/// the per-rank shard files (relative to the manifest's directory) and how
/// many transposes the dataset has been through since generation.
struct Manifest {
  std::string dataset;
  GenSpec spec;
  std::uint32_t transposes_applied = 0;
  std::vector<std::string> files;

  std::filesystem::path file_path(const std::filesystem::path& manifest_dir,
                                  std::uint32_t rank) const {
    return manifest_dir / files.at(rank);
  }
};

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Throws FormatError on unreadable or malformed manifests.
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace xcsr
