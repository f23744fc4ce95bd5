#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "pheno/learn.hpp"

namespace pheno {

// File layout:
//   "PHENOCKP" | u32 version | u64 header length | JSON header | f64 params...
// All integers and doubles little-endian. The header lists each network's
// role, labels, shape and parameter count; parameters follow in that order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::string scheme;
  std::string subset;
  std::uint64_t seed = 0;
  Hyperparams hyper{};
};

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model, const CheckpointMeta& meta);
void save_checkpoint(const std::filesystem::path& path, const HierarchicalModel& model, const CheckpointMeta& meta);

struct LoadedCheckpoint {
  std::string kind;  // "flat" or "hierarchical"
  CheckpointMeta meta;
  std::unique_ptr<Classifier> model;
};

// Throws IoError when unreadable, DataError when malformed.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pheno
