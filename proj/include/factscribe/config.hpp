// SPDX-License-Identifier: Apache-2.0
//
// Training configuration and its JSON form. Keys mirror the field names;
// unknown keys are rejected so typos do not silently fall back to defaults.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "factscribe/corpus.hpp"
#include "factscribe/model.hpp"

namespace factscribe {

struct TrainConfig {
  int epochs = 25;
  double learning_rate = 0.001;
  int batch_size = 32;
  std::uint64_t seed = 42;
  int max_facts = 60;
  int max_factual_words = 60;
  int vocab_size = 1000;  // words besides the three specials
  VocabSource vocab_source = VocabSource::Descriptions;
  int embedding_dim = 100;
  int hidden_dim = 100;
  int attention_dim = 100;
  int head_dim = 100;
  int max_phrase_length = 60;
  EncodingMode encoding = EncodingMode::Positional;
  MeanFactMode mean_fact = MeanFactMode::Mean;
  bool copy_only = false;
  int max_decode_length = 20;
  double grad_clip = 0.0;  // global L2 norm; 0 disables
  int dev_threads = 1;

  CorpusLimits limits() const { return {max_facts, max_factual_words}; }
  /// Model shapes for a vocabulary of `vocab_entries` words including specials.
  ModelConfig model(int vocab_entries) const;
  /// Shapes assuming the vocabulary fills up to vocab_size.
  ModelConfig model() const { return model(vocab_size + Vocabulary::kSpecialCount); }
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

const char* vocab_source_name(VocabSource source) noexcept;

nlohmann::ordered_json to_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys and bad values throw ConfigError.
TrainConfig train_config_from_json(const nlohmann::json& json);
TrainConfig load_train_config(const std::filesystem::path& path);

}  // namespace factscribe
