#include "unipose/model/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace unipose::model {

const char* to_string(CheckpointErrorKind kind) {
  switch (kind) {
    case CheckpointErrorKind::kIo: return "io error";
    case CheckpointErrorKind::kVersionMismatch: return "version mismatch";
    case CheckpointErrorKind::kShapeMismatch: return "shape mismatch";
    case CheckpointErrorKind::kTruncated: return "truncated checkpoint";
    case CheckpointErrorKind::kMalformed: return "malformed checkpoint";
  }
  return "checkpoint error";
}

namespace {

constexpr char kMagic[8] = {'U', 'N', 'I', 'P', 'O', 'S', 'E', '\0'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

void put_f32(std::string& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<float>(bits);
}

[[noreturn]] void fail(CheckpointErrorKind kind, const std::string& what) {
  throw CheckpointError(kind, what);
}

struct ParamEntry {
  std::string name;
  Shape shape;
  std::uint64_t offset = 0;
};

}  // namespace

std::string serialize(const UniPoseModel<float>& model) {
  const auto params = model.parameters();
  std::string manifest;
  manifest += "format_version " + std::to_string(kCheckpointVersion) + "\n";
  manifest += "endianness little\n";
  manifest += "element_type float32\n";
  const auto config_kv = model.config().to_kv();
  for (const auto& [k, v] : config_kv.entries()) manifest += "config." + k + " " + v + "\n";
  std::uint64_t offset = 0;
  for (const auto& p : params) {
    const Shape& s = p.tensor.shape();
    manifest += "param " + p.name + " " + std::to_string(s.n) + " " + std::to_string(s.c) + " " +
                std::to_string(s.h) + " " + std::to_string(s.w) + " " + std::to_string(offset) + "\n";
    offset += 4 * s.numel();
  }
  manifest += "payload_bytes " + std::to_string(offset) + "\n";

  std::string out(kMagic, sizeof kMagic);
  put_u64(out, manifest.size());
  out += manifest;
  out.reserve(out.size() + offset);
  for (const auto& p : params) {
    for (float v : p.tensor.data()) put_f32(out, v);
  }
  return out;
}

UniPoseModel<float> deserialize(const std::string& bytes) {
  if (bytes.size() < 16) fail(CheckpointErrorKind::kTruncated, "file shorter than its header");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    fail(CheckpointErrorKind::kMalformed, "bad magic bytes");
  }
  const std::uint64_t manifest_len = get_u64(bytes, 8);
  if (manifest_len > bytes.size() - 16) fail(CheckpointErrorKind::kTruncated, "manifest cut short");
  std::istringstream manifest(bytes.substr(16, manifest_len));

  util::KeyValues config_kv;
  std::vector<ParamEntry> entries;
  std::map<std::string, std::string> header;
  std::uint64_t payload_bytes = 0;
  bool have_payload = false;
  std::string line;
  int number = 0;
  while (std::getline(manifest, line)) {
    ++number;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    const std::string where = "manifest line " + std::to_string(number);
    if (key.empty()) fail(CheckpointErrorKind::kMalformed, where + " is empty");
    if (key == "param") {
      ParamEntry e;
      if (!(fields >> e.name >> e.shape.n >> e.shape.c >> e.shape.h >> e.shape.w >> e.offset)) {
        fail(CheckpointErrorKind::kMalformed, where + ": bad param entry");
      }
      entries.push_back(e);
    } else if (key == "payload_bytes") {
      if (!(fields >> payload_bytes)) fail(CheckpointErrorKind::kMalformed, where + ": bad payload size");
      have_payload = true;
    } else if (key.rfind("config.", 0) == 0) {
      std::string value;
      std::getline(fields >> std::ws, value);
      try {
        config_kv.set(key.substr(7), value);
      } catch (const std::exception& e) {
        fail(CheckpointErrorKind::kMalformed, where + ": " + e.what());
      }
    } else {
      std::string value;
      fields >> value;
      header[key] = value;
    }
  }

  if (!header.count("format_version")) fail(CheckpointErrorKind::kMalformed, "no format_version");
  if (header["format_version"] != std::to_string(kCheckpointVersion)) {
    fail(CheckpointErrorKind::kVersionMismatch, "file has format_version " + header["format_version"] +
                                                    ", this build reads " + std::to_string(kCheckpointVersion));
  }
  if (header["endianness"] != "little" || header["element_type"] != "float32") {
    fail(CheckpointErrorKind::kMalformed, "unsupported endianness or element type");
  }
  if (!have_payload) fail(CheckpointErrorKind::kMalformed, "no payload_bytes entry");

  ModelConfig config;
  try {
    config = ModelConfig::from_kv(config_kv);
    config.validate();
  } catch (const std::exception& e) {
    fail(CheckpointErrorKind::kMalformed, std::string("stored config rejected: ") + e.what());
  }
  UniPoseModel<float> model(config, 0);
  auto params = model.parameters();
  if (params.size() != entries.size()) {
    fail(CheckpointErrorKind::kShapeMismatch, "file lists " + std::to_string(entries.size()) +
                                                  " parameters, the configured model has " +
                                                  std::to_string(params.size()));
  }
  std::uint64_t expected_offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (entries[i].name != params[i].name) {
      fail(CheckpointErrorKind::kShapeMismatch,
           "parameter " + std::to_string(i) + " is '" + entries[i].name + "', expected '" + params[i].name + "'");
    }
    if (!(entries[i].shape == params[i].tensor.shape())) {
      fail(CheckpointErrorKind::kShapeMismatch, "parameter '" + entries[i].name + "' has shape " +
                                                    entries[i].shape.str() + ", model expects " +
                                                    params[i].tensor.shape().str());
    }
    if (entries[i].offset != expected_offset) {
      fail(CheckpointErrorKind::kMalformed, "parameter '" + entries[i].name + "' has a bad offset");
    }
    expected_offset += 4 * params[i].tensor.numel();
  }
  if (payload_bytes != expected_offset) {
    fail(CheckpointErrorKind::kShapeMismatch, "payload size does not match the parameter table");
  }
  const std::uint64_t available = bytes.size() - 16 - manifest_len;
  if (available < payload_bytes) {
    fail(CheckpointErrorKind::kTruncated, "payload has " + std::to_string(available) + " of " +
                                              std::to_string(payload_bytes) + " bytes");
  }
  if (available > payload_bytes) fail(CheckpointErrorKind::kMalformed, "trailing bytes after payload");

  const char* p = bytes.data() + 16 + manifest_len;
  for (auto& param : params) {
    auto data = Tensor<float>(param.tensor).mutable_data();
    for (auto& v : data) {
      v = get_f32(p);
      p += 4;
    }
  }
  return model;
}

void save_weights(const UniPoseModel<float>& model, const std::string& path) {
  const std::string bytes = serialize(model);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(CheckpointErrorKind::kIo, "cannot open '" + tmp + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(CheckpointErrorKind::kIo, "write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(CheckpointErrorKind::kIo, "cannot move checkpoint into '" + path + "': " + ec.message());
}

UniPoseModel<float> load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(CheckpointErrorKind::kIo, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize(buffer.str());
}

}  // namespace unipose::model
