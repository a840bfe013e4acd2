// SPDX-License-Identifier: Apache-2.0
#include "factscribe/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "factscribe/checkpoint.hpp"
#include "factscribe/config.hpp"
#include "factscribe/corpus.hpp"
#include "factscribe/decoder.hpp"
#include "factscribe/errors.hpp"
#include "factscribe/log.hpp"
#include "factscribe/metrics.hpp"
#include "factscribe/model.hpp"
#include "factscribe/training.hpp"

namespace factscribe {
namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

TrainConfig config_or_default(const std::string& path) {
  return path.empty() ? TrainConfig{} : load_train_config(path);
}

int cmd_train(const std::string& train_path, const std::string& dev_path, const std::string& config_path,
              const std::string& out_path, std::ostream& out) {
  const TrainConfig config = config_or_default(config_path);
  out << "seed " << config.seed << '\n';
  const auto train_set = load_entities(train_path, config.limits());
  const auto dev_set = dev_path.empty() ? std::vector<Entity>{} : load_entities(dev_path, config.limits());
  TrainResult result = train(train_set, dev_set, config, [&](const EpochReport& r) {
    out << "epoch " << r.epoch << " loss " << std::fixed << std::setprecision(4) << r.mean_loss;
    if (r.dev_bleu4 >= 0) out << " dev_bleu4 " << std::setprecision(2) << r.dev_bleu4;
    if (r.best) out << " *";
    out << std::defaultfloat << '\n' << std::flush;
  });
  Checkpoint ck{config, std::move(result.model), {result.best_epoch, result.best_dev_bleu4}};
  save_checkpoint(ck, out_path);
  out << "saved epoch " << result.best_epoch << " to " << out_path << '\n';
  return kExitOk;
}

int cmd_generate(const std::string& ck_path, const std::string& input, const std::string& out_path, int max_len,
                 int threads, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(ck_path);
  const int limit = max_len > 0 ? max_len : ck.config.max_decode_length;
  const auto entities = load_entities(input, ck.config.limits());
  const auto outputs = decode_all(ck.model, entities, limit, threads);
  std::ofstream file = open_output(out_path);
  for (std::size_t i = 0; i < entities.size(); ++i) {
    nlohmann::ordered_json j;
    j["id"] = entities[i].id;
    j["text"] = join(outputs[i]);
    file << j.dump() << '\n';
  }
  out << "generated " << entities.size() << " descriptions (max_len " << limit << ")\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& cands, const std::string& refs, const std::string& out_path, std::ostream& out) {
  const auto c = load_text_records(cands);
  const auto r = load_text_records(refs);
  const MetricReport report = evaluate_corpus(c, r);
  if (!out_path.empty()) open_output(out_path) << report.to_json().dump(2) << '\n';
  out << report.to_table();
  return kExitOk;
}

int cmd_align(const std::string& data, const std::string& config_path, const std::string& out_path,
              std::ostream& out) {
  const TrainConfig config = config_or_default(config_path);
  const auto entities = load_entities(data, config.limits());
  const Vocabulary vocab = build_vocabulary(entities, config.vocab_size, config.vocab_source);
  const AlignedCorpus aligned = align_corpus(entities, vocab);
  std::ofstream file = open_output(out_path);
  for (const auto& d : aligned.descriptions) file << alignment_to_json(d) << '\n';
  const AlignmentStats& s = aligned.stats;
  out << "descriptions " << s.descriptions << "\nfact " << s.fact << "\nvocab " << s.vocab << "\nunk " << s.unk
      << "\nunk_fraction " << std::setprecision(4) << s.unk_fraction() << '\n';
  return kExitOk;
}

int cmd_attention(const std::string& ck_path, const std::string& id, const std::string& data,
                  const std::string& out_path, int max_len, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(ck_path);
  const auto entities = load_entities(data, ck.config.limits());
  const Entity* entity = nullptr;
  for (const auto& e : entities) {
    if (e.id == id) entity = &e;
  }
  if (entity == nullptr) throw DataError("entity '" + id + "' not found in " + data);
  const DecodeResult result =
      greedy_decode(ck.model, *entity, max_len > 0 ? max_len : ck.config.max_decode_length);
  std::ofstream file = open_output(out_path);
  file << "token";
  for (const Fact& f : entity->facts) file << '\t' << f.label();
  file << "\tMEAN\n";
  file << std::setprecision(10);
  for (const DecodeStep& step : result.steps) {
    file << step.token;
    for (Index i = 0; i < step.alpha.size(); ++i) file << '\t' << step.alpha(i);
    file << '\n';
  }
  out << "wrote " << result.steps.size() << " steps x " << entity->facts.size() + 1 << " slots to " << out_path
      << '\n';
  return kExitOk;
}

int cmd_params(const std::string& config_path, std::ostream& out) {
  const TrainConfig config = config_or_default(config_path);
  out << format_parameter_table(count_parameters(config.model()));
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"factscribe: entity descriptions from knowledge-base facts"};
  app.require_subcommand(1);

  std::string train_path, dev_path, config_path, out_path, ck_path, input, cands, refs, data, id;
  int max_len = 0;
  int threads = 1;

  auto* train_cmd = app.add_subcommand("train", "train a model and write the best-dev checkpoint");
  train_cmd->add_option("--train", train_path, "training split (JSONL)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--dev", dev_path, "dev split (JSONL) for model selection")->check(CLI::ExistingFile);
  train_cmd->add_option("--config", config_path, "training config (JSON)")->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out_path, "checkpoint path")->required();

  auto* gen_cmd = app.add_subcommand("generate", "greedy-decode descriptions for entities");
  gen_cmd->add_option("--checkpoint", ck_path)->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--input", input, "entities (JSONL); descriptions optional")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--out", out_path, "output JSONL of {id, text}")->required();
  gen_cmd->add_option("--max-len", max_len, "decode step limit (default: from config)");
  gen_cmd->add_option("--threads", threads, "decode threads")->check(CLI::PositiveNumber);

  auto* eval_cmd = app.add_subcommand("evaluate", "score candidates against references");
  eval_cmd->add_option("--candidates", cands, "JSONL of {id, text}")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--references", refs, "JSONL of {id, text}")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", out_path, "JSON report");

  auto* align_cmd = app.add_subcommand("align", "annotate descriptions with their source facts");
  align_cmd->add_option("--data", data, "entities (JSONL)")->required()->check(CLI::ExistingFile);
  align_cmd->add_option("--config", config_path, "config for vocabulary and limits")->check(CLI::ExistingFile);
  align_cmd->add_option("--out", out_path, "output JSONL")->required();

  auto* attn_cmd = app.add_subcommand("attention", "dump per-step fact attention as TSV");
  attn_cmd->add_option("--checkpoint", ck_path)->required()->check(CLI::ExistingFile);
  attn_cmd->add_option("--id", id, "entity id")->required();
  attn_cmd->add_option("--data", data, "entities (JSONL)")->required()->check(CLI::ExistingFile);
  attn_cmd->add_option("--out", out_path, "output TSV")->required();
  attn_cmd->add_option("--max-len", max_len, "decode step limit (default: from config)");

  auto* params_cmd = app.add_subcommand("params", "learnable parameter breakdown");
  params_cmd->add_option("--config", config_path, "model config (JSON)")->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_path, dev_path, config_path, out_path, out);
    if (*gen_cmd) return cmd_generate(ck_path, input, out_path, max_len, threads, out);
    if (*eval_cmd) return cmd_evaluate(cands, refs, out_path, out);
    if (*align_cmd) return cmd_align(data, config_path, out_path, out);
    if (*attn_cmd) return cmd_attention(ck_path, id, data, out_path, max_len, out);
    if (*params_cmd) return cmd_params(config_path, out);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitData;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace factscribe
