#pragma once

#include <torch/torch.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "chartlink/model.hpp"

namespace chartlink {

inline constexpr uint32_t kCheckpointVersion = 1;

/// Versioned container: magic, version, JSON metadata, then named float32 tensors.
struct Checkpoint {
  nlohmann::json metadata;
  std::vector<std::pair<std::string, torch::Tensor>> tensors;
};

/// Written through a temporary file and renamed into place.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws CheckpointError on a missing file, bad magic, unknown version or truncation.
Checkpoint read_checkpoint(const std::filesystem::path& path);

void save_network(const std::filesystem::path& path, StegoNetworkImpl& network,
                  const nlohmann::json& training_state = nlohmann::json::object());

struct LoadedNetwork {
  StegoNetwork network{nullptr};
  nlohmann::json training_state;
};
/// Rebuilds the network from the stored config and copies every tensor.
/// Missing, extra or mis-shaped tensors throw CheckpointError.
LoadedNetwork load_network(const std::filesystem::path& path);

}  // namespace chartlink
