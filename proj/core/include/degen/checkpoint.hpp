#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "degen/network.hpp"

namespace degen {

/// Binary container: magic "DGCK", u32 version, u64 config hash, i64 update,
/// u64 header length, JSON header (config text and network shapes), then
/// every network's parameters as raw little-endian doubles in header order.
struct Checkpoint {
  std::uint64_t config_hash = 0;
  std::int64_t update = 0;
  std::string config_json;
  std::vector<std::pair<std::string, PolicyParams>> networks;

  const PolicyParams& network(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
/// Throws IoError on unreadable or malformed files.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace degen
