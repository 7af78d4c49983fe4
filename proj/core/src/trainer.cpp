#include "chartlink/trainer.hpp"

#include <cmath>
#include <fstream>

#include "chartlink/checkpoint.hpp"
#include "chartlink/errors.hpp"
#include "chartlink/image.hpp"
#include "chartlink/metrics.hpp"

namespace chartlink {

void TrainConfig::validate() const {
  network.validate();
  weights.validate();
  if (!(learning_rate > 0)) throw InvalidParams("learning rate must be positive");
  if (!(lr_decay > 0 && lr_decay <= 1)) throw InvalidParams("lr decay must lie in (0, 1]");
  if (epoch_iterations < 1 || iterations < 0 || batch_size < 1) throw InvalidParams("bad iteration or batch counts");
  if (weight_decay < 0 || grad_clip < 0 || condition_penalty < 0) throw InvalidParams("regularizers must be >= 0");
  if (decode_noise_std < 0 || anchor_noise_std < 0) throw InvalidParams("decode noise std must be >= 0");
  if (steg_warmup < 0) throw InvalidParams("steg warmup must be >= 0");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"network", c.network},
                     {"weights",
                      {{"l1", c.weights.l1},
                       {"ssim", c.weights.ssim},
                       {"lpips", c.weights.lpips},
                       {"data", c.weights.data},
                       {"anchor", c.weights.anchor}}},
                     {"learning_rate", c.learning_rate},
                     {"lr_decay", c.lr_decay},
                     {"epoch_iterations", c.epoch_iterations},
                     {"iterations", c.iterations},
                     {"batch_size", c.batch_size},
                     {"seed", c.seed}};
}

void to_json(nlohmann::json& j, const TrainRecord& r) {
  j = nlohmann::json{{"iter", r.iteration}, {"lr", r.lr},     {"loss", r.loss},         {"steg", r.steg},
                     {"data", r.data},      {"anchor", r.anchor}, {"psnr", r.psnr},     {"cond", r.condition},
                     {"cropped", r.cropped}};
  j["ba"] = r.bit_accuracy < 0 ? nlohmann::json(nullptr) : nlohmann::json(r.bit_accuracy);
}

double learning_rate_at(const TrainConfig& cfg, int iteration) {
  return cfg.learning_rate * std::pow(cfg.lr_decay, iteration / cfg.epoch_iterations);
}

torch::Tensor random_modules(int64_t batch, const RdtConfig& rdt, torch::Generator gen) {
  return torch::randint(0, 2, {batch, rdt.rows, rdt.cols}, gen, torch::TensorOptions().dtype(torch::kFloat32));
}

namespace {

struct Received {
  torch::Tensor images;  // [B, 3, H, W]
  torch::Tensor crops;   // [B, 4]
};

Received simulate(const torch::Tensor& stego, const torch::Tensor& hosts, bool cropped, const TamperPolicy& policy,
                  Rng& rng) {
  const int64_t b = stego.size(0), h = stego.size(2), w = stego.size(3);
  std::vector<torch::Tensor> textures;
  for (int64_t i = 0; i < b; ++i) textures.push_back(hosts[i].detach());
  std::vector<torch::Tensor> out;
  auto crops = torch::empty({b, 4});
  for (int64_t i = 0; i < b; ++i) {
    TamperSpec spec;
    spec.height = static_cast<int>(h);
    spec.width = static_cast<int>(w);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < policy.mask_probability) {
      spec.masks = sample_masks(spec.height, spec.width, static_cast<int>(b), policy, rng);
      // Textures come from the other images of the batch.
      for (auto& m : spec.masks) {
        if (b > 1 && m.source == i) m.source = static_cast<int>((i + 1) % b);
      }
    }
    if (cropped) spec.crop = sample_crop(spec.height, spec.width, policy.min_crop_area, rng);
    if (coin(rng) < policy.transition_probability) spec.shift = sample_transition(spec.height, spec.width, policy.tau, rng);
    if (coin(rng) < policy.distortion_probability) spec.distortion = sample_distortion(policy.distortion, rng);

    auto x = apply_tamper(spec, stego[i], textures, JpegMode::Differentiable);
    if (x.size(1) != h || x.size(2) != w) x = resize(x, h, w);
    out.push_back(x);
    const auto c = spec.crop.value_or(CropParams::full_frame());
    crops[i] = torch::tensor({c.cx, c.cy, c.sx, c.sy}, torch::kFloat32);
  }
  return {torch::stack(out), crops};
}

void append_log(const std::filesystem::path& path, const TrainRecord& r) {
  if (path.empty()) return;
  std::ofstream os(path, std::ios::app);
  os << nlohmann::json(r).dump() << '\n';
}

}  // namespace

TrainResult train_loop(const TrainConfig& cfg, const ChartCorpus& corpus, StegoNetwork initial,
                       const TrainObserver& observer) {
  cfg.validate();
  if (corpus.empty()) throw EmptyCorpus("training corpus is empty");
  const auto& net_cfg = cfg.network;

  std::vector<torch::Tensor> hosts;
  for (const auto& img : corpus.images) hosts.push_back(resize(img, net_cfg.height, net_cfg.width));

  TrainResult result;
  if (initial) {
    if (!(initial->config() == net_cfg)) throw InvalidParams("initial network does not match the training config");
    result.network = initial;
  } else {
    torch::manual_seed(net_cfg.init_seed);
    result.network = StegoNetwork(net_cfg);
  }
  auto& net = result.network;
  net->train();

  torch::optim::AdamW optimizer(net->parameters(),
                                torch::optim::AdamWOptions(cfg.learning_rate).weight_decay(cfg.weight_decay));
  Rng rng(cfg.seed);
  auto gen = make_generator(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  if (!cfg.log_path.empty()) {
    if (cfg.log_path.has_parent_path()) std::filesystem::create_directories(cfg.log_path.parent_path());
    std::ofstream(cfg.log_path, std::ios::trunc);
  }

  const auto save = [&](int iteration) {
    if (cfg.checkpoint_path.empty()) return;
    save_network(cfg.checkpoint_path, *net, {{"iteration", iteration}, {"config", cfg}});
  };

  for (int it = 0; it < cfg.iterations; ++it) {
    const double lr = learning_rate_at(cfg, it);
    for (auto& group : optimizer.param_groups()) static_cast<torch::optim::AdamWOptions&>(group.options()).lr(lr);

    std::vector<torch::Tensor> batch;
    std::uniform_int_distribution<size_t> pick(0, hosts.size() - 1);
    for (int i = 0; i < cfg.batch_size; ++i) batch.push_back(hosts[pick(rng)]);
    auto host = torch::stack(batch);
    auto modules = random_modules(cfg.batch_size, net_cfg.rdt, gen);

    auto enc = net->encode(host, modules);
    const bool cropped = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < cfg.tamper.crop_probability;
    auto received = simulate(enc.stego, host, cropped, cfg.tamper, rng);

    LossTerms terms;
    terms.steg = loss_steg(host, enc.stego, cfg.weights);
    if (it < cfg.steg_warmup) terms.steg = terms.steg * (static_cast<double>(it) / cfg.steg_warmup);
    auto anchor_est = net->decode_anchor(received.images, gen, cfg.anchor_noise_std);
    terms.anchor = loss_anchor(anchor_est, net->anchor(), received.crops, cfg.weights);
    torch::Tensor means;
    if (!cropped) {
      means = net->decode_data(received.images, gen, cfg.decode_noise_std);
      terms.data = loss_data(means, modules, cfg.weights);
    }
    if (cfg.condition_penalty > 0) terms.penalty = cfg.condition_penalty * net->broadcast->condition_penalty();
    auto loss = total_loss(terms, cropped);

    TrainRecord rec;
    rec.iteration = it;
    rec.lr = lr;
    rec.loss = loss.item<double>();
    rec.steg = terms.steg.item<double>();
    rec.anchor = terms.anchor.item<double>();
    rec.cropped = cropped;
    if (!cropped) {
      rec.data = terms.data.item<double>();
      rec.bit_accuracy = (rdt_threshold(means.detach()) == modules).to(torch::kFloat64).mean().item<double>() * 100.0;
    }
    if (!std::isfinite(rec.loss)) {
      save(it);
      throw Divergence("loss became non-finite at iteration " + std::to_string(it) +
                       (cfg.checkpoint_path.empty() ? "" : "; last finite weights saved to " + cfg.checkpoint_path.string()));
    }

    optimizer.zero_grad();
    loss.backward();
    if (cfg.grad_clip > 0) torch::nn::utils::clip_grad_norm_(net->parameters(), cfg.grad_clip);
    optimizer.step();
    net->broadcast->project();

    rec.psnr = psnr(host, enc.stego.detach());
    rec.condition = net->broadcast->condition_number();
    result.history.push_back(rec);
    if (cfg.log_every > 0 && (it % cfg.log_every == 0 || it + 1 == cfg.iterations)) {
      append_log(cfg.log_path, rec);
      if (observer) observer(rec);
    }
    if (cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0) save(it + 1);
  }
  net->eval();
  save(cfg.iterations);
  return result;
}

}  // namespace chartlink
