// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint: "FKS1", a little-endian u32 manifest length, a UTF-8 JSON
// manifest, then every tensor as row-major little-endian f32 at the manifest's
// byte offset (relative to the start of the payload).
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "factscribe/config.hpp"
#include "factscribe/model.hpp"

namespace factscribe {

inline constexpr std::string_view kCheckpointMagic = "FKS1";
inline constexpr int kCheckpointVersion = 1;

struct CheckpointMetadata {
  int epoch = 0;
  double dev_bleu4 = -1;
};

struct Checkpoint {
  TrainConfig config;
  Model model;
  CheckpointMetadata metadata;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

/// Throws CheckpointError on bad magic, unsupported version, truncation or a
/// manifest that disagrees with the payload, and ShapeError naming the tensor
/// when a stored shape differs from the one implied by the embedded config
/// and vocabulary (or by `expected`, when given).
Checkpoint parse_checkpoint(std::string_view bytes, const std::string& source = "<memory>",
                            const ModelConfig* expected = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig* expected = nullptr);

}  // namespace factscribe
