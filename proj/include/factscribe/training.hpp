// SPDX-License-Identifier: Apache-2.0
//
// Teacher-forced objective and the minibatch training loop. The loss of one
// description is the sum over its tokens of the fact-selection NLL and the
// word NLL under whichever head the gold source routes to.
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "factscribe/alignment.hpp"
#include "factscribe/config.hpp"
#include "factscribe/corpus.hpp"
#include "factscribe/decoder.hpp"
#include "factscribe/model.hpp"

namespace factscribe {

/// One training pair with the encoder inputs precomputed.
struct TrainingExample {
  const Entity* entity = nullptr;
  EncoderInput input;
  AlignedDescription target;
};

/// Validates the alignment against the entity and the model shapes; throws
/// ContractError on any inconsistency.
TrainingExample prepare_example(const Entity& entity, const AlignedDescription& aligned, const Model& model);

struct LossTerms {
  Var total;
  Var word;  // sum of word NLLs
  Var fact;  // sum of fact-selection NLLs
  int steps = 0;
};

/// Builds the loss of one example on `tape`, bound to `weights`. In copy-only
/// mode tokens that do not come from a fact are skipped and the mean slot is
/// never selectable.
LossTerms step_loss(Tape& tape, const DecoderWeights& weights, const Model& model, const TrainingExample& example);

/// Convenience overload: fresh recording tape, gradients accumulated into
/// model.params scaled by `seed`. Returns the loss terms' values.
struct LossValue {
  double total = 0;
  double word = 0;
  double fact = 0;
};
LossValue accumulate_gradients(Model& model, const TrainingExample& example, double seed = 1.0);
/// Loss without gradients.
LossValue evaluate_loss(const Model& model, const TrainingExample& example);

struct EpochReport {
  int epoch = 0;           // 1-based
  double mean_loss = 0;    // per-example, averaged over the epoch
  double dev_bleu4 = -1;   // -1 when no dev split was given
  bool best = false;
};

struct TrainResult {
  Model model;  // best-dev snapshot, or the last epoch when dev is empty
  int best_epoch = 0;
  double best_dev_bleu4 = -1;
  std::vector<EpochReport> history;
};

using EpochCallback = std::function<void(const EpochReport&)>;

/// Builds the vocabulary from `train`, initializes from config.seed and runs
/// Adam. Throws ConfigError on an empty training split and NumericError when
/// the loss or a gradient goes non-finite.
TrainResult train(std::span<const Entity> train, std::span<const Entity> dev, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace factscribe
