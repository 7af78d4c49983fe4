#include "chartlink/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "chartlink/errors.hpp"

namespace chartlink {

namespace {

constexpr char kMagic[8] = {'C', 'L', 'N', 'K', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::string& what) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) throw CheckpointError("checkpoint truncated in " + what);
  return value;
}

std::string get_string(std::istream& is, uint64_t size, const std::string& what) {
  if (size > (1ull << 32)) throw CheckpointError("implausible " + what + " length");
  std::string s(size, '\0');
  if (size && !is.read(s.data(), static_cast<std::streamsize>(size))) throw CheckpointError("checkpoint truncated in " + what);
  return s;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot write " + tmp.string());
    os.write(kMagic, sizeof(kMagic));
    put<uint32_t>(os, kCheckpointVersion);
    const std::string meta = ckpt.metadata.dump();
    put<uint64_t>(os, meta.size());
    os.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    put<uint32_t>(os, static_cast<uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, tensor] : ckpt.tensors) {
      auto t = tensor.detach().to(torch::kCPU, torch::kFloat32).contiguous();
      put<uint32_t>(os, static_cast<uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      put<uint32_t>(os, static_cast<uint32_t>(t.dim()));
      for (int64_t d : t.sizes()) put<int64_t>(os, d);
      os.write(reinterpret_cast<const char*>(t.data_ptr<float>()), static_cast<std::streamsize>(t.numel() * sizeof(float)));
    }
    if (!os) throw CheckpointError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("checkpoint " + path.string() + " not found or unreadable");
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(path.string() + " is not a checkpoint file");
  }
  const auto version = get<uint32_t>(is, "version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto meta_size = get<uint64_t>(is, "metadata");
  try {
    ckpt.metadata = nlohmann::json::parse(get_string(is, meta_size, "metadata"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint metadata: ") + e.what());
  }
  const auto count = get<uint32_t>(is, "tensor count");
  for (uint32_t i = 0; i < count; ++i) {
    auto name = get_string(is, get<uint32_t>(is, "tensor name"), "tensor name");
    const auto ndim = get<uint32_t>(is, name);
    if (ndim > 8) throw CheckpointError("tensor " + name + " has implausible rank");
    std::vector<int64_t> sizes(ndim);
    for (auto& d : sizes) {
      d = get<int64_t>(is, name);
      if (d < 0) throw CheckpointError("tensor " + name + " has a negative dimension");
    }
    auto t = torch::empty(sizes, torch::kFloat32);
    if (!is.read(reinterpret_cast<char*>(t.data_ptr<float>()), static_cast<std::streamsize>(t.numel() * sizeof(float)))) {
      throw CheckpointError("checkpoint truncated in tensor " + name);
    }
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ckpt;
}

void save_network(const std::filesystem::path& path, StegoNetworkImpl& network, const nlohmann::json& training_state) {
  Checkpoint ckpt;
  ckpt.metadata = {{"format", "chartlink-checkpoint"},
                   {"version", kCheckpointVersion},
                   {"network", network.config()},
                   {"training", training_state}};
  for (const auto& item : network.named_parameters()) ckpt.tensors.emplace_back(item.key(), item.value());
  for (const auto& item : network.named_buffers()) ckpt.tensors.emplace_back(item.key(), item.value());
  write_checkpoint(path, ckpt);
}

LoadedNetwork load_network(const std::filesystem::path& path) {
  auto ckpt = read_checkpoint(path);
  if (!ckpt.metadata.contains("network")) throw CheckpointError("checkpoint has no network config");
  NetworkConfig cfg;
  try {
    cfg = ckpt.metadata.at("network").get<NetworkConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad network config in checkpoint: ") + e.what());
  }
  LoadedNetwork out;
  out.network = StegoNetwork(cfg);
  out.training_state = ckpt.metadata.value("training", nlohmann::json::object());

  std::map<std::string, torch::Tensor> stored(ckpt.tensors.begin(), ckpt.tensors.end());
  torch::NoGradGuard no_grad;
  size_t matched = 0;
  const auto assign = [&](const std::string& name, torch::Tensor& target) {
    auto it = stored.find(name);
    if (it == stored.end()) throw CheckpointError("checkpoint is missing tensor " + name);
    if (it->second.sizes() != target.sizes()) throw CheckpointError("tensor " + name + " has the wrong shape");
    target.copy_(it->second);
    ++matched;
  };
  for (auto& item : out.network->named_parameters()) assign(item.key(), item.value());
  for (auto& item : out.network->named_buffers()) assign(item.key(), item.value());
  if (matched != stored.size()) throw CheckpointError("checkpoint holds tensors the network does not have");
  return out;
}

}  // namespace chartlink
