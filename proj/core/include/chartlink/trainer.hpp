#pragma once

#include <torch/torch.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <vector>

#include "chartlink/charts.hpp"
#include "chartlink/losses.hpp"
#include "chartlink/model.hpp"
#include "chartlink/tamper.hpp"

namespace chartlink {

struct TrainConfig {
  NetworkConfig network = NetworkConfig::toy();
  LossWeights weights;
  double learning_rate = 1e-4;
  double lr_decay = 0.9;       // multiplied in once per epoch
  int epoch_iterations = 200;  // iterations per schedule epoch
  int iterations = 2000;
  int batch_size = 8;
  double weight_decay = 1e-2;
  double grad_clip = 1.0;  // 0 disables
  double condition_penalty = 1.0;
  double decode_noise_std = 1.0;
  double anchor_noise_std = 0.0;  // lost anchor-flow channels at decode
  /// The steg term ramps linearly from 0 to full weight over this many iterations.
  int steg_warmup = 0;
  /// crop_probability is drawn once per batch and gates the data loss.
  TamperPolicy tamper;
  uint64_t seed = 0;
  int log_every = 10;
  std::filesystem::path log_path;
  std::filesystem::path checkpoint_path;
  int checkpoint_every = 500;

  /// Throws InvalidParams.
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);

/// lr0 * decay^floor(iteration / epoch_iterations).
double learning_rate_at(const TrainConfig& cfg, int iteration);

struct TrainRecord {
  int iteration = 0;
  double lr = 0.0;
  double loss = 0.0;
  double steg = 0.0;
  double data = 0.0;
  double anchor = 0.0;
  double bit_accuracy = -1.0;  // -1 on cropped batches
  double psnr = 0.0;
  double condition = 0.0;
  bool cropped = false;
};

void to_json(nlohmann::json& j, const TrainRecord& r);

struct TrainResult {
  StegoNetwork network{nullptr};
  std::vector<TrainRecord> history;
};

using TrainObserver = std::function<void(const TrainRecord&)>;

/// Joint optimization of every sub-network on random payloads with simulated
/// tampering. Corpus images are resized to the network size. Resumes from
/// `initial` when given. Throws EmptyCorpus, or Divergence after saving the
/// last finite weights to the checkpoint path.
TrainResult train_loop(const TrainConfig& cfg, const ChartCorpus& corpus, StegoNetwork initial = nullptr,
                       const TrainObserver& observer = nullptr);

/// Random 0/1 module grids [B, rows, cols].
torch::Tensor random_modules(int64_t batch, const RdtConfig& rdt, torch::Generator gen);

}  // namespace chartlink
