// SPDX-License-Identifier: Apache-2.0
#include "factscribe/config.hpp"

#include <fstream>
#include <set>

#include "factscribe/errors.hpp"

namespace factscribe {
namespace {

using nlohmann::json;

template <typename T>
void read(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

void read_int(const json& j, const char* key, int& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number_integer()) throw ConfigError(std::string("config field '") + key + "' must be an integer");
  read(j, key, out);
}

void read_bool(const json& j, const char* key, bool& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_boolean()) throw ConfigError(std::string("config field '") + key + "' must be true or false");
  out = it->get<bool>();
}

std::string read_enum(const json& j, const char* key, std::string fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_string()) throw ConfigError(std::string("config field '") + key + "' must be a string");
  return it->get<std::string>();
}

void positive(const char* name, double value) {
  if (!(value > 0)) throw ConfigError(std::string("config field '") + name + "' must be positive");
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "epochs",        "learning_rate", "batch_size",     "seed",       "max_facts",
      "max_factual_words", "vocab_size", "vocab_source",  "embedding_dim", "hidden_dim",
      "attention_dim", "head_dim",      "max_phrase_length", "encoding", "mean_fact",
      "copy_only",     "max_decode_length", "grad_clip",  "dev_threads"};
  return keys;
}

}  // namespace

const char* vocab_source_name(VocabSource source) noexcept {
  return source == VocabSource::Descriptions ? "descriptions" : "descriptions_and_properties";
}

ModelConfig TrainConfig::model(int vocab_entries) const {
  ModelConfig m;
  m.embedding_dim = embedding_dim;
  m.hidden_dim = hidden_dim;
  m.attention_dim = attention_dim;
  m.head_dim = head_dim;
  m.vocab_size = vocab_entries;
  m.copy_positions = max_factual_words;
  m.max_phrase_length = max_phrase_length;
  m.encoding = encoding;
  m.mean_fact = mean_fact;
  m.copy_only = copy_only;
  return m;
}

void TrainConfig::validate() const {
  positive("epochs", epochs);
  positive("learning_rate", learning_rate);
  positive("batch_size", batch_size);
  positive("max_facts", max_facts);
  positive("max_factual_words", max_factual_words);
  positive("vocab_size", vocab_size);
  positive("embedding_dim", embedding_dim);
  positive("hidden_dim", hidden_dim);
  positive("attention_dim", attention_dim);
  positive("head_dim", head_dim);
  positive("max_phrase_length", max_phrase_length);
  positive("max_decode_length", max_decode_length);
  positive("dev_threads", dev_threads);
  if (grad_clip < 0) throw ConfigError("config field 'grad_clip' must be non-negative");
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["epochs"] = c.epochs;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["max_facts"] = c.max_facts;
  j["max_factual_words"] = c.max_factual_words;
  j["vocab_size"] = c.vocab_size;
  j["vocab_source"] = vocab_source_name(c.vocab_source);
  j["embedding_dim"] = c.embedding_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["attention_dim"] = c.attention_dim;
  j["head_dim"] = c.head_dim;
  j["max_phrase_length"] = c.max_phrase_length;
  j["encoding"] = encoding_mode_name(c.encoding);
  j["mean_fact"] = mean_fact_mode_name(c.mean_fact);
  j["copy_only"] = c.copy_only;
  j["max_decode_length"] = c.max_decode_length;
  j["grad_clip"] = c.grad_clip;
  j["dev_threads"] = c.dev_threads;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().count(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  TrainConfig c;
  read_int(j, "epochs", c.epochs);
  read(j, "learning_rate", c.learning_rate);
  read_int(j, "batch_size", c.batch_size);
  if (auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
      throw ConfigError("config field 'seed' must be a non-negative integer");
    }
    c.seed = it->get<std::uint64_t>();
  }
  read_int(j, "max_facts", c.max_facts);
  read_int(j, "max_factual_words", c.max_factual_words);
  read_int(j, "vocab_size", c.vocab_size);
  read_int(j, "embedding_dim", c.embedding_dim);
  read_int(j, "hidden_dim", c.hidden_dim);
  read_int(j, "attention_dim", c.attention_dim);
  read_int(j, "head_dim", c.head_dim);
  read_int(j, "max_phrase_length", c.max_phrase_length);
  read_bool(j, "copy_only", c.copy_only);
  read_int(j, "max_decode_length", c.max_decode_length);
  read(j, "grad_clip", c.grad_clip);
  read_int(j, "dev_threads", c.dev_threads);

  const std::string source = read_enum(j, "vocab_source", "descriptions");
  if (source == "descriptions") {
    c.vocab_source = VocabSource::Descriptions;
  } else if (source == "descriptions_and_properties") {
    c.vocab_source = VocabSource::DescriptionsAndProperties;
  } else {
    throw ConfigError("config field 'vocab_source': unknown value '" + source + "'");
  }
  const std::string enc = read_enum(j, "encoding", "positional");
  if (enc == "positional") {
    c.encoding = EncodingMode::Positional;
  } else if (enc == "mean_pool") {
    c.encoding = EncodingMode::MeanPool;
  } else {
    throw ConfigError("config field 'encoding': unknown value '" + enc + "'");
  }
  const std::string mean = read_enum(j, "mean_fact", "mean");
  if (mean == "mean") {
    c.mean_fact = MeanFactMode::Mean;
  } else if (mean == "fixed_random") {
    c.mean_fact = MeanFactMode::FixedRandom;
  } else {
    throw ConfigError("config field 'mean_fact': unknown value '" + mean + "'");
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return train_config_from_json(j);
}

}  // namespace factscribe
