#ifndef MORL_NUMKIT_CHECKPOINT_HPP_
#define MORL_NUMKIT_CHECKPOINT_HPP_

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "json.hpp"
#include "morl/common/error.hpp"
#include "morl/numkit/adam.hpp"
#include "morl/numkit/param_tensor.hpp"

namespace morl::numkit {

// Binary layout (little endian):
//   "MORLCKPT" | u32 version | u64 manifest_len | manifest (JSON text)
//   | u64 tensor_count | tensors... | u64 fnv1a64(all preceding bytes)
// tensor: u32 name_len | name | u32 rank | u64 dims[rank] | f64 values[prod]
struct TensorRecord {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  bool operator==(const TensorRecord&) const = default;
};

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct Checkpoint {
  static constexpr char kMagic[8] = {'M', 'O', 'R', 'L', 'C', 'K', 'P', 'T'};
  static constexpr std::uint32_t kVersion = 1;

  nlohmann::json manifest = nlohmann::json::object();
  std::vector<TensorRecord> tensors;

  void add(const std::string& name, std::vector<std::size_t> shape, std::vector<double> values) {
    if (ParamTensor::element_count(shape) != values.size()) {
      throw CheckpointError("tensor '" + name + "': shape does not match value count");
    }
    tensors.push_back({name, std::move(shape), std::move(values)});
  }

  void add_buffer(const std::string& name, std::vector<std::size_t> shape, const AlignedBuffer& values) {
    add(name, std::move(shape), std::vector<double>(values.begin(), values.end()));
  }
  void add(const ParamTensor& p) { add_buffer(p.name, p.shape, p.values); }

  const TensorRecord* find(const std::string& name) const {
    for (const auto& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }

  const TensorRecord& at(const std::string& name) const {
    const auto* t = find(name);
    if (t == nullptr) throw CheckpointError("checkpoint has no tensor '" + name + "'");
    return *t;
  }

  // Copies values into an existing tensor; the shape must match.
  void restore(ParamTensor& p) const {
    const auto& t = at(p.name);
    if (t.shape != p.shape) throw CheckpointError("shape mismatch for tensor '" + p.name + "'");
    p.values.assign(t.values.begin(), t.values.end());
    p.zero_grad();
  }

  // Adds parameter values and the optimizer moments/step count.
  void add_optimizer(const Adam& adam, const std::string& prefix = "adam") {
    const auto& ps = adam.params();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      add_buffer(prefix + ".m/" + ps[i]->name, ps[i]->shape, adam.first_moment(i));
      add_buffer(prefix + ".v/" + ps[i]->name, ps[i]->shape, adam.second_moment(i));
    }
    manifest[prefix + ".step_count"] = adam.step_count();
  }

  void restore_optimizer(Adam& adam, const std::string& prefix = "adam") const {
    const auto& ps = adam.params();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const auto& m = at(prefix + ".m/" + ps[i]->name).values;
      adam.first_moment(i).assign(m.begin(), m.end());
      const auto& v = at(prefix + ".v/" + ps[i]->name).values;
      adam.second_moment(i).assign(v.begin(), v.end());
    }
    adam.set_step_count(manifest.at(prefix + ".step_count").get<std::uint64_t>());
  }

  std::string serialize() const {
    std::string out;
    auto put = [&out](const void* p, std::size_t n) {
      out.append(static_cast<const char*>(p), n);
    };
    auto put_u32 = [&put](std::uint32_t v) { put(&v, sizeof v); };
    auto put_u64 = [&put](std::uint64_t v) { put(&v, sizeof v); };

    put(kMagic, sizeof kMagic);
    put_u32(kVersion);
    const std::string m = manifest.dump();
    put_u64(m.size());
    put(m.data(), m.size());
    put_u64(tensors.size());
    for (const auto& t : tensors) {
      put_u32(static_cast<std::uint32_t>(t.name.size()));
      put(t.name.data(), t.name.size());
      put_u32(static_cast<std::uint32_t>(t.shape.size()));
      for (auto d : t.shape) put_u64(d);
      put(t.values.data(), t.values.size() * sizeof(double));
    }
    put_u64(fnv1a64(out.data(), out.size()));
    return out;
  }

  static Checkpoint deserialize(const std::string& bytes) {
    if (bytes.size() < sizeof kMagic + 4 + 8 + 8 + 8 ||
        std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
      throw CheckpointError("not a checkpoint file (bad magic)");
    }
    const std::size_t body = bytes.size() - 8;
    std::uint64_t stored = 0;
    std::memcpy(&stored, bytes.data() + body, 8);
    if (fnv1a64(bytes.data(), body) != stored) {
      throw CheckpointError("checkpoint checksum mismatch (file is corrupt or was modified)");
    }

    std::size_t pos = sizeof kMagic;
    auto get = [&](void* dst, std::size_t n) {
      if (pos + n > body) throw CheckpointError("truncated checkpoint");
      std::memcpy(dst, bytes.data() + pos, n);
      pos += n;
    };
    auto get_u32 = [&] { std::uint32_t v = 0; get(&v, sizeof v); return v; };
    auto get_u64 = [&] { std::uint64_t v = 0; get(&v, sizeof v); return v; };

    if (get_u32() != kVersion) throw CheckpointError("unsupported checkpoint version");
    Checkpoint ckpt;
    const auto mlen = get_u64();
    std::string m(mlen, '\0');
    get(m.data(), mlen);
    ckpt.manifest = nlohmann::json::parse(m);
    const auto count = get_u64();
    for (std::uint64_t k = 0; k < count; ++k) {
      TensorRecord t;
      t.name.resize(get_u32());
      get(t.name.data(), t.name.size());
      t.shape.resize(get_u32());
      for (auto& d : t.shape) d = get_u64();
      t.values.resize(ParamTensor::element_count(t.shape));
      get(t.values.data(), t.values.size() * sizeof(double));
      ckpt.tensors.push_back(std::move(t));
    }
    if (pos != body) throw CheckpointError("trailing bytes in checkpoint");
    return ckpt;
  }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
    const std::string bytes = serialize();
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }

  static Checkpoint load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
    const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
  }
};

}  // namespace morl::numkit

#endif  // MORL_NUMKIT_CHECKPOINT_HPP_
