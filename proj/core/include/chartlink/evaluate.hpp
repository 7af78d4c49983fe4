#pragma once

#include <torch/torch.h>

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "chartlink/charts.hpp"
#include "chartlink/model.hpp"
#include "chartlink/pipeline.hpp"
#include "chartlink/tamper.hpp"

namespace chartlink {

struct EvalConfig {
  std::vector<double> mask_rates{0.0, 0.15, 0.30, 0.45, 0.60};
  /// Fractions of the frame removed by cropping.
  std::vector<double> crop_rates{0.65, 0.75, 0.85, 0.95};
  /// (crop rate, mask rate) pairs.
  std::vector<std::array<double, 2>> mixed{{0.6, 0.2}};
  bool distortions = true;
  DistortionConfig distortion;
  int max_images = 0;  // 0 uses the whole corpus
  uint64_t seed = 0;
  PipelineConfig pipeline;
};

struct ConditionResult {
  std::string name;
  double rate = 0.0;
  double bit_accuracy = 0.0;           // percent
  std::optional<double> iou;           // crop conditions only
  std::optional<double> tamper_ratio;  // mixed conditions only
  int images = 0;
};

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  std::optional<double> lpips;
  double bpp = 0.0;
  int capacity_bits = 0;
  int images = 0;
  std::vector<ConditionResult> mask_grid;
  std::vector<ConditionResult> crop_grid;
  std::vector<ConditionResult> mixed_grid;
  std::vector<ConditionResult> distortion_grid;
};

void to_json(nlohmann::json& j, const ConditionResult& r);
void to_json(nlohmann::json& j, const MetricReport& r);

/// Published full-scale numbers kept next to desk-scale results for comparison only.
nlohmann::json full_scale_reference();

/// Encodes a random payload into every corpus image at net size and measures
/// quality and bit accuracy under each seeded tamper condition. Local
/// tampering is decoded on the aligned frame; crop and mixed conditions run
/// the full anchor / crop-estimation chain and report IoU.
MetricReport run_grid(StegoNetworkImpl& net, const ChartCorpus& corpus, const EvalConfig& cfg);

/// Fixed-width text tables.
std::string format_report(const MetricReport& report);

}  // namespace chartlink
