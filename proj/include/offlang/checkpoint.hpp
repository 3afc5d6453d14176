// Copyright 2026 The offlang Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Checkpoints are the transfer currency: a single self-describing file
// holding the encoder weights, optionally the softmax head, the head's
// label scheme, and provenance. Two import strategies:
//   import_full         encoder + head (same class count; inter-language)
//   import_encoder_only encoder weights only, freshly seeded head sized
//                       for the target scheme (inter-task), never reading
//                       the stored head bytes.
//
// File layout (all integers little-endian):
//   magic "OFLGCKPT" | u32 version | u64 header_len | header JSON (UTF-8)
//   u32 encoder tensor count | tensors...
//   [if head present] u32 head tensor count | tensors...
//   tensor := u16 name_len | name | u8 ndim | u64 dims[] | f32 data[]

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "offlang/classifier.hpp"
#include "offlang/encoder.hpp"
#include "offlang/errors.hpp"
#include "offlang/mini_encoder.hpp"
#include "offlang/train.hpp"
#include "offlang/types.hpp"

namespace offlang {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'O', 'F', 'L', 'G',
                                             'C', 'K', 'P', 'T'};

struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<float> data;

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (std::uint64_t d : dims) n *= d;
    return n;
  }
};

struct Provenance {
  std::string source_dataset;  // profile or corpus tag the model was trained on
  std::optional<TrainConfig> train_config;
  std::uint64_t seed = 0;
  std::string created_utc;  // ISO-8601; excluded from byte-identity checks
};

struct Checkpoint {
  std::uint32_t version = kCheckpointFormatVersion;
  EncoderConfig encoder_config;
  std::string fingerprint;  // of encoder_config; re-verified on load
  std::vector<NamedTensor> encoder_tensors;
  bool has_head = false;
  LabelScheme head_scheme;  // meaningful iff has_head
  bool head_has_bias = false;
  std::vector<NamedTensor> head_tensors;
  Provenance provenance;
};

inline std::string utc_timestamp_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace detail {

inline nlohmann::json encoder_config_to_json(const EncoderConfig& c) {
  return nlohmann::json{{"vocab_size", c.vocab_size},
                        {"hidden_size", c.hidden_size},
                        {"num_layers", c.num_layers},
                        {"num_heads", c.num_heads},
                        {"feed_forward_size", c.feed_forward_size},
                        {"max_len", c.max_len},
                        {"tokenizer_seed", c.tokenizer_seed}};
}

inline EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.vocab_size = j.at("vocab_size").get<std::uint32_t>();
  c.hidden_size = j.at("hidden_size").get<std::uint32_t>();
  c.num_layers = j.at("num_layers").get<std::uint32_t>();
  c.num_heads = j.at("num_heads").get<std::uint32_t>();
  c.feed_forward_size = j.at("feed_forward_size").get<std::uint32_t>();
  c.max_len = j.at("max_len").get<std::uint32_t>();
  c.tokenizer_seed = j.at("tokenizer_seed").get<std::uint64_t>();
  return c;
}

inline nlohmann::json scheme_to_json(const LabelScheme& s) {
  return nlohmann::json{{"name", s.name}, {"classes", s.classes}};
}

inline LabelScheme scheme_from_json(const nlohmann::json& j) {
  LabelScheme s;
  s.name = j.at("name").get<std::string>();
  s.classes = j.at("classes").get<std::vector<std::string>>();
  return s;
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  return nlohmann::json{{"learning_rate", c.learning_rate},
                        {"epochs", c.epochs},
                        {"batch_size", c.batch_size},
                        {"seed", c.seed},
                        {"split_ratio", c.split_ratio},
                        {"optimizer", optimizer_to_string(c.optimizer)},
                        {"use_full_dataset", c.use_full_dataset}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<std::uint32_t>();
  c.batch_size = j.at("batch_size").get<std::uint32_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.split_ratio = j.at("split_ratio").get<double>();
  c.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
  c.use_full_dataset = j.at("use_full_dataset").get<bool>();
  return c;
}

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u32(out, bits);
}

class ByteReader {
 public:
  ByteReader(const char* data, std::size_t size) : data_(data), size_(size) {}

  std::size_t offset() const { return off_; }
  std::size_t remaining() const { return size_ - off_; }

  void read_bytes(void* dst, std::size_t n) {
    if (off_ + n > size_) {
      throw checkpoint_error("checkpoint: truncated file");
    }
    std::memcpy(dst, data_ + off_, n);
    off_ += n;
  }

  std::uint16_t u16() {
    std::uint8_t b[2];
    read_bytes(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    std::uint8_t b[4];
    read_bytes(b, 4);
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    std::uint8_t b[8];
    read_bytes(b, 8);
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  std::string str(std::size_t n) {
    std::string s(n, '\0');
    read_bytes(s.data(), n);
    return s;
  }

 private:
  const char* data_;
  std::size_t size_;
  std::size_t off_ = 0;
};

inline void append_tensor(std::string& out, const NamedTensor& t) {
  if (t.name.size() > 0xFFFF) {
    throw checkpoint_error("checkpoint: tensor name too long");
  }
  put_u16(out, static_cast<std::uint16_t>(t.name.size()));
  out.append(t.name);
  out.push_back(static_cast<char>(t.dims.size()));
  for (std::uint64_t d : t.dims) put_u64(out, d);
  if (t.element_count() != t.data.size()) {
    throw checkpoint_error("checkpoint: tensor '" + t.name +
                           "' dims do not match data size");
  }
  for (float v : t.data) put_f32(out, v);
}

inline NamedTensor read_tensor(ByteReader& r) {
  NamedTensor t;
  t.name = r.str(r.u16());
  std::uint8_t ndim;
  r.read_bytes(&ndim, 1);
  t.dims.resize(ndim);
  for (std::uint8_t i = 0; i < ndim; ++i) t.dims[i] = r.u64();
  const std::uint64_t n = t.element_count();
  if (n > r.remaining() / 4) {
    throw checkpoint_error("checkpoint: tensor '" + t.name +
                           "' larger than remaining file");
  }
  t.data.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) t.data[i] = r.f32();
  return t;
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json header;
  header["encoder"] = detail::encoder_config_to_json(ckpt.encoder_config);
  header["fingerprint"] = ckpt.fingerprint;
  header["head"]["present"] = ckpt.has_head;
  if (ckpt.has_head) {
    header["head"]["scheme"] = detail::scheme_to_json(ckpt.head_scheme);
    header["head"]["has_bias"] = ckpt.head_has_bias;
  }
  nlohmann::json prov;
  prov["source_dataset"] = ckpt.provenance.source_dataset;
  if (ckpt.provenance.train_config) {
    prov["train_config"] =
        detail::train_config_to_json(*ckpt.provenance.train_config);
  }
  prov["seed"] = ckpt.provenance.seed;
  prov["created_utc"] = ckpt.provenance.created_utc;
  header["provenance"] = prov;

  const std::string header_bytes = header.dump();  // sorted keys: stable

  std::string out;
  out.append(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_u32(out, ckpt.version);
  detail::put_u64(out, header_bytes.size());
  out.append(header_bytes);
  detail::put_u32(out, static_cast<std::uint32_t>(ckpt.encoder_tensors.size()));
  for (const NamedTensor& t : ckpt.encoder_tensors) {
    detail::append_tensor(out, t);
  }
  if (ckpt.has_head) {
    detail::put_u32(out, static_cast<std::uint32_t>(ckpt.head_tensors.size()));
    for (const NamedTensor& t : ckpt.head_tensors) {
      detail::append_tensor(out, t);
    }
  }
  return out;
}

// When skip_head is set, parsing stops after the encoder tensors: the head
// bytes are never touched, so encoder-only imports work even if that
// region is corrupt or missing.
inline Checkpoint parse_checkpoint(const char* data, std::size_t size,
                                   bool skip_head = false) {
  detail::ByteReader r(data, size);
  char magic[8];
  r.read_bytes(magic, 8);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw checkpoint_error("not a checkpoint file (bad magic)");
  }
  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != kCheckpointFormatVersion) {
    throw checkpoint_error("unsupported checkpoint format version " +
                           std::to_string(ckpt.version) + " (expected " +
                           std::to_string(kCheckpointFormatVersion) + ")");
  }
  const std::uint64_t header_len = r.u64();
  if (header_len > r.remaining()) {
    throw checkpoint_error("checkpoint: truncated header");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.str(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw checkpoint_error(std::string("checkpoint: malformed header: ") +
                           e.what());
  }
  try {
    ckpt.encoder_config =
        detail::encoder_config_from_json(header.at("encoder"));
    ckpt.fingerprint = header.at("fingerprint").get<std::string>();
    ckpt.has_head = header.at("head").at("present").get<bool>();
    if (ckpt.has_head) {
      ckpt.head_scheme =
          detail::scheme_from_json(header.at("head").at("scheme"));
      ckpt.head_has_bias = header.at("head").at("has_bias").get<bool>();
    }
    const auto& prov = header.at("provenance");
    ckpt.provenance.source_dataset =
        prov.at("source_dataset").get<std::string>();
    if (prov.contains("train_config")) {
      ckpt.provenance.train_config =
          detail::train_config_from_json(prov.at("train_config"));
    }
    ckpt.provenance.seed = prov.at("seed").get<std::uint64_t>();
    ckpt.provenance.created_utc = prov.at("created_utc").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw checkpoint_error(std::string("checkpoint: incomplete header: ") +
                           e.what());
  }

  if (ckpt.fingerprint != encoder_fingerprint(ckpt.encoder_config)) {
    throw checkpoint_error(
        "checkpoint: fingerprint does not match encoder config (corrupt or "
        "tampered file)");
  }

  // a tensor record is at least 3 bytes, so counts are bounded by the
  // remaining payload; anything larger is corruption
  const auto checked_count = [&r](std::uint32_t count) {
    if (count > r.remaining() / 3) {
      throw checkpoint_error("checkpoint: implausible tensor count " +
                             std::to_string(count));
    }
    return count;
  };

  const std::uint32_t enc_count = checked_count(r.u32());
  ckpt.encoder_tensors.reserve(enc_count);
  for (std::uint32_t i = 0; i < enc_count; ++i) {
    ckpt.encoder_tensors.push_back(detail::read_tensor(r));
  }

  if (ckpt.has_head && !skip_head) {
    const std::uint32_t head_count = checked_count(r.u32());
    ckpt.head_tensors.reserve(head_count);
    for (std::uint32_t i = 0; i < head_count; ++i) {
      ckpt.head_tensors.push_back(detail::read_tensor(r));
    }
  }
  return ckpt;
}

// Writes go to a temp file in the same directory, then an atomic rename.
inline void write_checkpoint_file(const std::filesystem::path& path,
                                  const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw checkpoint_error("cannot write checkpoint '" + tmp.string() + "'");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw checkpoint_error("write failed for checkpoint '" + tmp.string() +
                             "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw checkpoint_error("cannot move checkpoint into place: " +
                           ec.message());
  }
}

inline Checkpoint read_checkpoint_file(const std::filesystem::path& path,
                                       bool skip_head = false) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw checkpoint_error("cannot open checkpoint '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  return parse_checkpoint(bytes.data(), bytes.size(), skip_head);
}

// Lossless export of a float32 model. include_head=false drops the head
// and its scheme entirely (inter-task transfer saves only the encoder).
inline Checkpoint export_checkpoint(const ClassifierModel<float>& model,
                                    bool include_head,
                                    Provenance provenance = {}) {
  model.validate();
  Checkpoint ckpt;
  ckpt.encoder_config = model.encoder.config;
  ckpt.fingerprint = model.encoder.fingerprint();
  model.encoder.for_each_param([&](const std::string& name,
                                   const std::vector<std::size_t>& dims,
                                   const std::vector<float>& data) {
    NamedTensor t;
    t.name = name;
    t.dims.assign(dims.begin(), dims.end());
    t.data = data;
    ckpt.encoder_tensors.push_back(std::move(t));
  });
  if (include_head) {
    ckpt.has_head = true;
    ckpt.head_scheme = model.scheme;
    ckpt.head_has_bias = model.head.has_bias();
    NamedTensor w;
    w.name = "head.weight";
    w.dims = {model.head.weight.rows, model.head.weight.cols};
    w.data = model.head.weight.a;
    ckpt.head_tensors.push_back(std::move(w));
    if (model.head.has_bias()) {
      NamedTensor b;
      b.name = "head.bias";
      b.dims = {model.head.bias.size()};
      b.data = model.head.bias;
      ckpt.head_tensors.push_back(std::move(b));
    }
  }
  if (provenance.created_utc.empty()) {
    provenance.created_utc = utc_timestamp_now();
  }
  ckpt.provenance = std::move(provenance);
  return ckpt;
}

namespace detail {

inline MiniEncoder<float> encoder_from_checkpoint(const Checkpoint& ckpt) {
  MiniEncoder<float> enc(ckpt.encoder_config);
  std::map<std::string, const NamedTensor*> by_name;
  for (const NamedTensor& t : ckpt.encoder_tensors) by_name[t.name] = &t;
  std::size_t used = 0;
  enc.for_each_param([&](const std::string& name,
                         const std::vector<std::size_t>& dims,
                         std::vector<float>& data) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw checkpoint_error("checkpoint: missing encoder tensor '" + name +
                             "'");
    }
    const NamedTensor& t = *it->second;
    if (t.dims.size() != dims.size() ||
        !std::equal(dims.begin(), dims.end(), t.dims.begin())) {
      throw checkpoint_error("checkpoint: tensor '" + name +
                             "' shape does not match encoder config");
    }
    data = t.data;
    ++used;
  });
  if (used != by_name.size()) {
    throw checkpoint_error("checkpoint: unexpected extra encoder tensors");
  }
  return enc;
}

}  // namespace detail

// Inter-language strategy: restore encoder and softmax head together.
inline ClassifierModel<float> import_full(const Checkpoint& ckpt) {
  if (!ckpt.has_head) {
    throw checkpoint_error(
        "import_full: checkpoint has no classification head (encoder-only "
        "checkpoint)");
  }
  ClassifierModel<float> model;
  model.encoder = detail::encoder_from_checkpoint(ckpt);
  model.scheme = ckpt.head_scheme;

  const NamedTensor* w = nullptr;
  const NamedTensor* b = nullptr;
  for (const NamedTensor& t : ckpt.head_tensors) {
    if (t.name == "head.weight") w = &t;
    if (t.name == "head.bias") b = &t;
  }
  if (w == nullptr || w->dims.size() != 2) {
    throw checkpoint_error("import_full: head weight tensor missing");
  }
  model.head.weight = Mat<float>(w->dims[0], w->dims[1]);
  model.head.weight.a = w->data;
  if (ckpt.head_has_bias) {
    if (b == nullptr || b->dims.size() != 1) {
      throw checkpoint_error("import_full: head bias tensor missing");
    }
    model.head.bias = b->data;
  }
  model.validate();
  return model;
}

// Inter-task strategy: restore only the encoder weights and attach a
// freshly seeded head sized for the target scheme (which may have a
// different class count). The stored head, if any, is never used.
inline ClassifierModel<float> import_encoder_only(const Checkpoint& ckpt,
                                                  const LabelScheme& target,
                                                  std::uint64_t seed,
                                                  bool head_bias = true) {
  target.validate();
  ClassifierModel<float> model;
  model.encoder = detail::encoder_from_checkpoint(ckpt);
  model.scheme = target;
  model.head = HeadState<float>::init(target.num_classes(),
                                      model.encoder.hidden_size(), seed,
                                      head_bias);
  model.validate();
  return model;
}

// Re-labels an imported model's classes for a same-shape target task
// (e.g. offensive -> hate offensive). `mapping` sends source class names
// to target class names; when empty, classes map positionally.
inline ClassifierModel<float> remap_head_scheme(
    ClassifierModel<float> model, const LabelScheme& target,
    const std::map<std::string, std::string>& mapping = {}) {
  target.validate();
  if (target.num_classes() != model.scheme.num_classes()) {
    throw checkpoint_error(
        "class-count mismatch: source head has " +
        std::to_string(model.scheme.num_classes()) + " classes, target '" +
        target.name + "' has " + std::to_string(target.num_classes()));
  }
  if (mapping.empty()) {
    model.scheme = target;
    return model;
  }
  Mat<float> w(model.head.weight.rows, model.head.weight.cols);
  std::vector<float> bias(model.head.bias.size(), 0.0f);
  std::vector<bool> hit(target.num_classes(), false);
  for (std::size_t i = 0; i < model.scheme.num_classes(); ++i) {
    const std::string& src_name = model.scheme.classes[i];
    const auto it = mapping.find(src_name);
    if (it == mapping.end()) {
      throw config_error("class_map: no mapping for source class '" +
                         src_name + "'");
    }
    const auto j = target.index_of(it->second);
    if (!j) {
      throw config_error("class_map: '" + it->second +
                         "' is not a class of scheme '" + target.name + "'");
    }
    if (hit[*j]) {
      throw config_error("class_map: target class '" + it->second +
                         "' mapped twice");
    }
    hit[*j] = true;
    for (std::size_t c = 0; c < w.cols; ++c) w(*j, c) = model.head.weight(i, c);
    if (!bias.empty()) bias[*j] = model.head.bias[i];
  }
  model.head.weight = std::move(w);
  model.head.bias = std::move(bias);
  model.scheme = target;
  return model;
}

// Byte comparison with the creation timestamp normalized away.
inline bool checkpoints_equal_ignoring_timestamp(Checkpoint a, Checkpoint b) {
  a.provenance.created_utc.clear();
  b.provenance.created_utc.clear();
  return serialize_checkpoint(a) == serialize_checkpoint(b);
}

}  // namespace offlang
