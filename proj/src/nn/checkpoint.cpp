#include "filmnet/nn/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "filmnet/errors.hpp"

namespace filmnet::nn {

namespace {

constexpr char kMagic[6] = {'T', 'H', 'K', 'W', '1', '\0'};

template <typename T>
void put(std::string& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw ParseError(source_ + ": truncated checkpoint");
    unsigned char b[sizeof(T)];
    std::memcpy(b, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
  }

  std::string take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw ParseError(source_ + ": truncated checkpoint");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const ModelWeights<double>& w) {
  std::string out(kMagic, sizeof kMagic);
  const std::string config = w.config.to_json();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(config.size()));
  out += config;
  for (const Parameters<double>* p : {&w.params, &w.accum}) {
    for (const auto& t : p->tensors()) {
      for (double v : t.values) put(out, v);
    }
  }
  put<std::uint32_t>(out, w.epoch);
  return out;
}

ModelWeights<double> deserialize_checkpoint(const std::string& bytes, const std::string& source) {
  Reader r(bytes, source);
  if (r.take(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw ParseError(source + ": bad magic, not a checkpoint");
  }
  const auto len = r.get<std::uint32_t>();
  ModelWeights<double> w;
  w.config = NetworkConfig::from_json(r.take(len));
  w.params = Parameters<double>::zeros(w.config);
  w.accum = Parameters<double>::zeros(w.config);
  for (Parameters<double>* p : {&w.params, &w.accum}) {
    for (auto& t : p->tensors()) {
      for (double& v : t.values) v = r.get<double>();
    }
  }
  w.epoch = r.get<std::uint32_t>();
  if (!r.done()) throw ParseError(source + ": trailing bytes after checkpoint");
  return w;
}

void save_checkpoint(const std::filesystem::path& path, const ModelWeights<double>& w) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  const std::string bytes = serialize_checkpoint(w);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed for " + path.string());
}

ModelWeights<double> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return deserialize_checkpoint(ss.str(), path.string());
}

CheckpointDiff diff_checkpoints(const ModelWeights<double>& a, const ModelWeights<double>& b) {
  CheckpointDiff d;
  d.same_config = a.config == b.config;
  if (!d.same_config) return d;
  d.conv_identical = true;
  d.heads_identical = true;
  const auto ta = a.params.tensors();
  const auto tb = b.params.tensors();
  for (std::size_t t = 0; t < ta.size(); ++t) {
    const bool same = std::memcmp(ta[t].values.data(), tb[t].values.data(), ta[t].values.size() * sizeof(double)) == 0;
    double m = 0.0;
    for (std::size_t i = 0; i < ta[t].values.size(); ++i) m = std::max(m, std::abs(ta[t].values[i] - tb[t].values[i]));
    if (ta[t].conv) {
      d.conv_identical = d.conv_identical && same;
      d.max_abs_conv = std::max(d.max_abs_conv, m);
    } else {
      d.heads_identical = d.heads_identical && same;
      d.max_abs_heads = std::max(d.max_abs_heads, m);
    }
  }
  return d;
}

bool bit_identical(const ModelWeights<double>& a, const ModelWeights<double>& b) {
  return a.config == b.config && serialize_checkpoint(a) == serialize_checkpoint(b);
}

}  // namespace filmnet::nn
