#include "filmnet/nn/config.hpp"

#include <json.hpp>

#include "filmnet/errors.hpp"

namespace filmnet::nn {

NetworkConfig NetworkConfig::full_scale(TaskMode mode) {
  NetworkConfig c;
  c.mode = mode;
  return c;
}

const std::vector<int>& NetworkConfig::head_widths(int head) const {
  switch (head) {
    case kHeadD: return d_head;
    case kHeadN: return n_head;
    default: return k_head;
  }
}

std::vector<int> NetworkConfig::conv_lengths() const {
  std::vector<int> out;
  int len = in_length;
  for (const ConvStage& s : conv) {
    len = len - s.kernel + 1;
    out.push_back(len);
    len = s.pool > 0 ? len / s.pool : 0;
  }
  return out;
}

std::vector<int> NetworkConfig::pooled_lengths() const {
  std::vector<int> out;
  int len = in_length;
  for (const ConvStage& s : conv) {
    len = (len - s.kernel + 1);
    len = s.pool > 0 ? len / s.pool : 0;
    out.push_back(len);
  }
  return out;
}

int NetworkConfig::flatten_size() const {
  if (conv.empty()) return in_channels * in_length;
  return pooled_lengths().back() * conv.back().filters;
}

void NetworkConfig::validate() const {
  if (in_channels <= 0 || in_length <= 0) throw ConfigError("input shape must be positive");
  int len = in_length;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    const ConvStage& s = conv[i];
    if (s.kernel <= 0 || s.filters <= 0 || s.pool <= 0) {
      throw ConfigError("conv stage " + std::to_string(i) + " has a non-positive size");
    }
    len = (len - s.kernel + 1) / s.pool;
    if (len <= 0) throw ConfigError("conv stage " + std::to_string(i) + " leaves no positions");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout rate must be in [0, 1)");
  for (int h = 0; h < kHeadCount; ++h) {
    if (!head_active(h)) continue;
    const auto& w = head_widths(h);
    if (w.empty()) throw ConfigError("active head has no layers");
    for (int v : w) {
      if (v <= 0) throw ConfigError("dense widths must be positive");
    }
    const int expected = h == kHeadD ? 1 : in_length;
    if (w.back() != expected) {
      throw ConfigError("head " + std::to_string(h) + " must end in " + std::to_string(expected) + " units");
    }
  }
}

std::string NetworkConfig::to_json() const {
  nlohmann::json stages = nlohmann::json::array();
  for (const ConvStage& s : conv) stages.push_back({{"kernel", s.kernel}, {"filters", s.filters}, {"pool", s.pool}});
  const nlohmann::json j = {
      {"in_channels", in_channels}, {"in_length", in_length},    {"conv", stages},
      {"d_head", d_head},           {"n_head", n_head},          {"k_head", k_head},
      {"dropout", dropout},         {"mode", mode == TaskMode::stl ? "stl" : "mtl"},
      {"loss_weights", loss_weights},
  };
  return j.dump();
}

NetworkConfig NetworkConfig::from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    NetworkConfig c;
    c.in_channels = j.at("in_channels").get<int>();
    c.in_length = j.at("in_length").get<int>();
    c.conv.clear();
    for (const auto& s : j.at("conv")) {
      c.conv.push_back({s.at("kernel").get<int>(), s.at("filters").get<int>(), s.at("pool").get<int>()});
    }
    c.d_head = j.at("d_head").get<std::vector<int>>();
    c.n_head = j.at("n_head").get<std::vector<int>>();
    c.k_head = j.at("k_head").get<std::vector<int>>();
    c.dropout = j.at("dropout").get<double>();
    const std::string mode = j.at("mode").get<std::string>();
    if (mode != "stl" && mode != "mtl") throw ConfigError("unknown task mode '" + mode + "'");
    c.mode = mode == "stl" ? TaskMode::stl : TaskMode::mtl;
    c.loss_weights = j.at("loss_weights").get<std::array<double, 3>>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("network config: ") + e.what());
  }
}

}  // namespace filmnet::nn
