#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sclood/corpus.hpp"
#include "sclood/detectors.hpp"
#include "sclood/run_config.hpp"
#include "sclood/trainer.hpp"

namespace sclood {

/// One JSON document: run configuration, vocabulary, label set, encoder
/// tensors and (optionally) the fitted detector. Doubles are written in
/// shortest round-trip form, so save -> load is bit-exact.
struct Checkpoint {
  RunConfig config;
  Vocab vocab;
  std::vector<std::string> label_set;
  TrainedModel model;
  std::optional<DetectorModel> detector;
};

inline constexpr const char* kCheckpointFormat = "sclood-checkpoint/1";

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// FNV-1a hash (hex) of the canonical JSON form of the run configuration.
std::string config_hash(const RunConfig& cfg);

}  // namespace sclood
