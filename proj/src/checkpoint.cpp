// SPDX-License-Identifier: Apache-2.0
#include "factscribe/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "factscribe/errors.hpp"

namespace factscribe {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

std::vector<const Tensor*> stored_tensors(const Model& model) { return model.params.all(); }

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  nlohmann::ordered_json manifest;
  manifest["format"] = std::string(kCheckpointMagic);
  manifest["version"] = kCheckpointVersion;
  manifest["config"] = to_json(ck.config);
  manifest["vocabulary"] = ck.model.vocab.words();
  manifest["metadata"] = {{"epoch", ck.metadata.epoch}, {"dev_bleu4", ck.metadata.dev_bleu4}};
  auto& entries = manifest["tensors"] = nlohmann::ordered_json::array();

  std::string payload;
  for (const Tensor* t : stored_tensors(ck.model)) {
    entries.push_back({{"name", t->name()},
                       {"shape", {t->rows(), t->cols()}},
                       {"dtype", "f32"},
                       {"offset", payload.size()}});
    for (Index r = 0; r < t->rows(); ++r) {
      for (Index c = 0; c < t->cols(); ++c) {
        put_u32(payload, std::bit_cast<std::uint32_t>(static_cast<float>(t->value()(r, c))));
      }
    }
  }
  const std::string text = manifest.dump();
  std::string out(kCheckpointMagic);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out += payload;
  return out;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ck);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

Checkpoint parse_checkpoint(std::string_view bytes, const std::string& source, const ModelConfig* expected) {
  auto fail = [&](const std::string& what) { return CheckpointError(source + ": " + what); };
  if (bytes.size() < 8 || bytes.substr(0, 4) != kCheckpointMagic) throw fail("not a checkpoint (bad magic)");
  const std::uint32_t manifest_len = get_u32(bytes.data() + 4);
  if (bytes.size() - 8 < manifest_len) throw fail("truncated manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(8, manifest_len));
  } catch (const nlohmann::json::parse_error& e) {
    throw fail(std::string("corrupt manifest: ") + e.what());
  }
  const std::string_view payload = bytes.substr(8 + manifest_len);

  Checkpoint ck;
  try {
    if (manifest.value("format", std::string()) != kCheckpointMagic) throw fail("manifest format tag missing");
    const int version = manifest.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw fail("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                 std::to_string(kCheckpointVersion) + ")");
    }
    ck.config = train_config_from_json(manifest.at("config"));
    ck.model.vocab = Vocabulary::from_words(manifest.at("vocabulary").get<std::vector<std::string>>());
    ck.metadata.epoch = manifest.at("metadata").at("epoch").get<int>();
    ck.metadata.dev_bleu4 = manifest.at("metadata").at("dev_bleu4").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("malformed manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw fail(std::string("embedded config: ") + e.what());
  } catch (const CheckpointError&) {
    throw;
  } catch (const DataError& e) {
    throw fail(std::string("embedded vocabulary: ") + e.what());
  }
  ck.model.config = ck.config.model(ck.model.vocab.size());
  ck.model.params = ModelParams(ck.model.config);
  const ModelConfig& shapes = expected ? *expected : ck.model.config;
  const ModelParams reference(shapes);

  std::map<std::string, const nlohmann::json*> entries;
  if (!manifest.contains("tensors") || !manifest["tensors"].is_array()) throw fail("manifest has no tensor list");
  for (const auto& e : manifest["tensors"]) {
    if (!e.is_object() || !e.contains("name") || !e["name"].is_string()) throw fail("tensor entry without a name");
    if (!entries.emplace(e["name"].get<std::string>(), &e).second) {
      throw fail("tensor '" + e["name"].get<std::string>() + "' listed twice");
    }
  }

  std::size_t expected_bytes = 0;
  std::vector<const Tensor*> wanted = reference.all();
  for (const Tensor* want : wanted) {
    auto it = entries.find(want->name());
    if (it == entries.end()) throw fail("tensor '" + want->name() + "' missing");
    const nlohmann::json& e = *it->second;
    Index rows = 0, cols = 0;
    std::size_t offset = 0;
    try {
      if (e.at("dtype").get<std::string>() != "f32") throw fail("tensor '" + want->name() + "' is not f32");
      rows = e.at("shape").at(0).get<Index>();
      cols = e.at("shape").at(1).get<Index>();
      offset = e.at("offset").get<std::size_t>();
    } catch (const nlohmann::json::exception& ex) {
      throw fail("tensor '" + want->name() + "': " + ex.what());
    }
    if (rows != want->rows() || cols != want->cols()) {
      throw ShapeError(source + ": tensor '" + want->name() + "' has shape " + shape_string(rows, cols) +
                       ", expected " + shape_string(want->rows(), want->cols()));
    }
    const std::size_t n_bytes = static_cast<std::size_t>(rows * cols) * 4;
    if (offset > payload.size() || payload.size() - offset < n_bytes) {
      throw fail("payload truncated in tensor '" + want->name() + "'");
    }
    Tensor* dst = ck.model.params.find(want->name());
    if (dst == nullptr) throw fail("tensor '" + want->name() + "' has no slot in the model");
    const char* p = payload.data() + offset;
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c, p += 4) {
        dst->value()(r, c) = static_cast<double>(std::bit_cast<float>(get_u32(p)));
      }
    }
    expected_bytes += n_bytes;
  }
  if (entries.size() != wanted.size()) {
    for (const auto& [name, e] : entries) {
      bool known = false;
      for (const Tensor* w : wanted) known = known || w->name() == name;
      if (!known) throw fail("unexpected tensor '" + name + "'");
    }
  }
  if (payload.size() != expected_bytes) {
    throw fail("payload is " + std::to_string(payload.size()) + " bytes, manifest describes " +
               std::to_string(expected_bytes));
  }
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str(), path.string(), expected);
}

}  // namespace factscribe
