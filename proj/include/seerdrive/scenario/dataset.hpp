#pragma once

#include <string>
#include <vector>

#include "seerdrive/scenario/types.hpp"

namespace seerdrive::scenario {

struct Manifest {
  int format_version = 1;
  int64_t count = 0;
  std::string config_hash;  // hex
  std::vector<std::string> files;
  std::vector<int64_t> seeds;
  std::vector<uint32_t> checksums;
};

// Dataset directory layout: manifest.json plus one self-describing binary
// record per scenario (little-endian, f32 payloads, named shape header).
Manifest write_dataset(const std::vector<Scenario>& scenarios, const std::string& dir,
                       uint64_t config_hash = 0, bool text_dump = false);

Manifest read_manifest(const std::string& dir);
std::vector<Scenario> read_dataset(const std::string& dir);

void write_record(const Scenario& s, const std::string& path);
Scenario read_record(const std::string& path);

// Human-readable per-scenario debug dump.
std::string text_dump(const Scenario& s);

}  // namespace seerdrive::scenario
