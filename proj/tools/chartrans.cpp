// Copyright 2026 The chartrans Authors. All Rights Reserved.
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

// Command-line front end: train, predict, evaluate, sweep, gen-data.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "chartrans/chartrans.hpp"

#ifndef CHARTRANS_VERSION
#define CHARTRANS_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace chartrans;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNonFinite = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return hex.str();
}

std::string build_id() {
  std::string id = std::string("chartrans ") + CHARTRANS_VERSION + " (" + __VERSION__ + ", ";
  id += sizeof(real) == 8 ? "float64" : "float32";
  return id + ")";
}

// Tasks and their file formats.
TargetUnit default_unit(const std::string& task) {
  return task == "g2p" ? TargetUnit::kPhonemes : TargetUnit::kCharacters;
}

std::vector<Example> load_examples(const std::string& path, const std::string& task,
                                   TargetUnit unit) {
  if (task == "inflection") return read_inflection_tsv(path);
  return read_pair_tsv(path, unit);
}

const std::vector<std::string> kTasks = {"inflection", "normalization", "g2p", "transliteration"};

struct ModelFlags {
  TransformerConfig arch;
  TrainConfig train;
  std::string encoder = "feature_invariant";
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  auto& t = f.train;
  cmd->add_option("--peak_lr,--lr", t.peak_lr, "peak learning rate")->capture_default_str();
  cmd->add_option("--warmup_steps", t.warmup_steps, "linear warmup length")
      ->capture_default_str();
  cmd->add_option("--total_steps,--steps", t.total_steps, "number of updates")
      ->capture_default_str();
  cmd->add_option("--eval_every", t.eval_every, "updates between dev evaluations")
      ->capture_default_str();
  cmd->add_option("--batch_size", t.batch_size, "examples per update")->capture_default_str();
  cmd->add_option("--label_smoothing", t.label_smoothing, "label smoothing epsilon")
      ->capture_default_str();
  cmd->add_option("--adam_beta2", t.adam_beta2, "Adam beta2")->capture_default_str();
  cmd->add_option("--dropout_rate,--dropout", t.dropout_rate, "dropout rate")
      ->capture_default_str();
  cmd->add_option("--seed", t.seed, "random seed")->capture_default_str();
  cmd->add_option("--encoder_mode,--encoder", f.encoder, "feature_invariant or vanilla")
      ->check(CLI::IsMember({"feature_invariant", "vanilla"}))
      ->capture_default_str();
  cmd->add_option("--eval_batch_size", t.eval_batch_size, "rows per decoding batch")
      ->capture_default_str();
  auto& a = f.arch;
  cmd->add_option("--num_layers", a.num_layers, "layers per stack")->capture_default_str();
  cmd->add_option("--num_heads", a.num_heads, "attention heads")->capture_default_str();
  cmd->add_option("--d_model", a.d_model, "model width")->capture_default_str();
  cmd->add_option("--d_ff", a.d_ff, "feed-forward width")->capture_default_str();
}

void resolve(ModelFlags& f) {
  f.train.encoder_mode = parse_encoder_mode(f.encoder);
  try {
    f.train.validate();
  } catch (const InvariantError& e) {
    throw UsageError(e.what());
  }
}

void write_history(const fs::path& path, const std::vector<EvalRecord>& history) {
  std::ofstream out(path);
  out << "step\tdev_acc\ttrain_loss\n";
  for (const auto& r : history) {
    out << r.step << '\t' << std::setprecision(17) << r.dev_acc << '\t' << r.train_loss << '\n';
  }
}

void write_metrics_file(const fs::path& path, const MetricsReport& report) {
  std::ofstream out(path);
  write_metrics(out, report);
}

std::string step_name(long step) {
  std::ostringstream s;
  s << "step_" << std::setw(6) << std::setfill('0') << step << ".ckpt";
  return s.str();
}

// Fills options of `cmd` that were not given on the command line from a
// TOML/INI file. Keys are flag names without dashes, optionally under a
// section named after the subcommand.
void apply_config(CLI::App* cmd, const std::string& path) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::Error& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (!item.parents.empty() &&
        !(item.parents.size() == 1 && item.parents[0] == cmd->get_name())) {
      continue;
    }
    if (item.name == "config") throw UsageError("config " + path + ": nested config files");
    CLI::Option* opt = nullptr;
    try {
      opt = cmd->get_option("--" + item.name);
    } catch (const CLI::OptionNotFound&) {
      throw UsageError("config " + path + ": unknown key '" + item.name + "' for " +
                       cmd->get_name());
    }
    if (opt->count() > 0) continue;  // the command line wins
    try {
      opt->add_result(item.inputs);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError("config " + path + ": " + item.name + ": " + e.what());
    }
  }
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  ModelFlags model;
  std::string train_path, dev_path, task = "inflection", unit, out = "run", resume;
  bool keep_all = false;
};

nlohmann::json make_manifest(const TrainArgs& a, const TransformerConfig& arch,
                             const std::vector<std::string>& argv) {
  nlohmann::json m;
  m["build"] = build_id();
  m["command"] = argv;
  m["task"] = a.task;
  m["unit"] = a.unit;
  m["model_config"] = to_json(arch);
  m["train_config"] = to_json(a.model.train);
  m["data"] = {{"train", {{"path", a.train_path}, {"sha256", sha256_file(a.train_path)}}},
               {"dev", {{"path", a.dev_path}, {"sha256", sha256_file(a.dev_path)}}}};
  if (!a.resume.empty()) m["resume"] = a.resume;
  m["layout"] = {{"manifest", "manifest.json"},     {"checkpoints", "checkpoints/"},
                 {"history", "history.tsv"},        {"predictions", "predictions.tsv"},
                 {"metrics", "metrics.txt"},        {"best", "checkpoints/best.ckpt"},
                 {"last", "checkpoints/last.ckpt"}};
  return m;
}

int cmd_train(TrainArgs& a, const std::vector<std::string>& argv) {
  resolve(a.model);
  if (a.unit.empty()) a.unit = to_string(default_unit(a.task));
  const TargetUnit unit = parse_target_unit(a.unit);
  const auto train_set = load_examples(a.train_path, a.task, unit);
  const auto dev_set = load_examples(a.dev_path, a.task, unit);
  auto data = make_train_data(train_set, dev_set, a.task);
  const auto& cfg = a.model.train;

  std::optional<Checkpoint<real>> resume, resume_best;
  if (!a.resume.empty()) {
    resume = load_checkpoint<real>(a.resume);
    if (!(resume->train_config == cfg)) {
      throw CheckpointError("resume: checkpoint train config differs from the requested one");
    }
    data.src_vocab = resume->src_vocab;
    data.tgt_vocab = resume->tgt_vocab;
    const auto best_path = fs::path(a.resume).parent_path() / "best.ckpt";
    if (fs::exists(best_path) && fs::path(a.resume) != best_path) {
      resume_best = load_checkpoint<real>(best_path.string());
    }
  }

  auto model = make_model<real>(a.model.arch, cfg, data);
  if (resume && !(resume->model_config == model.config())) {
    throw CheckpointError("resume: checkpoint architecture differs from the requested one");
  }
  const fs::path out(a.out);
  fs::create_directories(out / "checkpoints");
  {
    std::ofstream mf(out / "manifest.json");
    mf << make_manifest(a, model.config(), argv).dump(2) << '\n';
  }
  std::cout << "parameters: " << count_parameters(model.parameters(), "total") << " total, "
            << count_parameters(model.parameters(), "layer-stack") << " layer stack\n";

  TrainHooks<real> hooks;
  std::vector<EvalRecord> seen = resume ? resume->history : std::vector<EvalRecord>{};
  hooks.on_eval = [&](const EvalRecord& r) {
    std::cout << "step " << r.step << "\tdev_acc " << std::fixed << std::setprecision(4)
              << r.dev_acc << "\ttrain_loss " << r.train_loss << std::defaultfloat << std::endl;
    seen.push_back(r);
    write_history(out / "history.tsv", seen);
  };
  double best_acc = -1.0;
  for (const auto& r : seen) best_acc = std::max(best_acc, r.dev_acc);
  hooks.on_checkpoint = [&](const Checkpoint<real>& ck) {
    save_checkpoint(ck, (out / "checkpoints" / "last.ckpt").string());
    if (a.keep_all) save_checkpoint(ck, (out / "checkpoints" / step_name(ck.step)).string());
    const double acc = ck.history.back().dev_acc;
    if (acc > best_acc) {
      best_acc = acc;
      save_checkpoint(ck, (out / "checkpoints" / "best.ckpt").string());
    }
  };

  auto result = train(model, data, cfg, hooks, resume ? &*resume : nullptr,
                      resume_best ? &*resume_best : nullptr);
  save_checkpoint(result.last, (out / "checkpoints" / "last.ckpt").string());
  save_checkpoint(result.best, (out / "checkpoints" / "best.ckpt").string());
  write_history(out / "history.tsv", result.history);

  auto best_model = model_from_checkpoint(result.best);
  const auto preds = predict(best_model, data.dev, data.src_vocab, data.tgt_vocab,
                             static_cast<std::size_t>(cfg.eval_batch_size));
  {
    std::ofstream pf(out / "predictions.tsv");
    write_predictions(pf, preds, unit);
  }
  if (!preds.empty()) {
    const auto report = evaluate(preds);
    write_metrics_file(out / "metrics.txt", report);
    std::cout << "best checkpoint: step " << result.best.step << ", dev acc " << report.acc
              << '\n';
  }
  return kExitOk;
}

// ---- predict / evaluate ----------------------------------------------------

struct PredictArgs {
  std::string checkpoint, input, task, unit, out = ".";
  long batch_size = 256;
};

std::vector<Prediction> run_predict(const PredictArgs& a, TargetUnit unit) {
  const auto ck = load_checkpoint<real>(a.checkpoint);
  const std::string task = a.task.empty() ? ck.task : a.task;
  const auto examples = load_examples(a.input, task, unit);
  const auto model = model_from_checkpoint(ck);
  return predict(model, examples, ck.src_vocab, ck.tgt_vocab,
                 static_cast<std::size_t>(a.batch_size));
}

TargetUnit resolve_unit(const std::string& unit, const std::string& task,
                        const std::string& checkpoint) {
  if (!unit.empty()) return parse_target_unit(unit);
  if (!task.empty()) return default_unit(task);
  if (!checkpoint.empty()) return default_unit(load_checkpoint<real>(checkpoint).task);
  return TargetUnit::kCharacters;
}

int cmd_predict(const PredictArgs& a) {
  const TargetUnit unit = resolve_unit(a.unit, a.task, a.checkpoint);
  const auto preds = run_predict(a, unit);
  fs::create_directories(a.out);
  std::ofstream out(fs::path(a.out) / "predictions.tsv");
  write_predictions(out, preds, unit);
  std::cout << "wrote " << preds.size() << " predictions to "
            << (fs::path(a.out) / "predictions.tsv").string() << '\n';
  return kExitOk;
}

struct EvaluateArgs {
  PredictArgs source;
  std::string predictions;
  std::vector<std::string> metrics;
  std::size_t bin_width = 1;
};

int cmd_evaluate(EvaluateArgs& a) {
  const bool wants_per =
      std::find(a.metrics.begin(), a.metrics.end(), "per") != a.metrics.end();
  auto& src = a.source;
  TargetUnit unit;
  if (!src.unit.empty() || !src.task.empty()) {
    unit = resolve_unit(src.unit, src.task, "");
  } else if (wants_per) {
    unit = TargetUnit::kPhonemes;  // phoneme error rate scores space-separated units
  } else {
    unit = resolve_unit("", "", src.checkpoint);
  }
  std::vector<Prediction> preds;
  if (!a.predictions.empty()) {
    if (!src.checkpoint.empty() || !src.input.empty()) {
      throw UsageError("evaluate: give either --predictions or --checkpoint with --input");
    }
    preds = read_predictions(a.predictions, unit);
  } else {
    if (src.checkpoint.empty() || src.input.empty()) {
      throw UsageError("evaluate: needs --predictions or both --checkpoint and --input");
    }
    preds = run_predict(src, unit);
  }
  if (preds.empty()) throw ParseError(a.predictions, 0, "no items to evaluate");
  const auto report = evaluate(preds, a.bin_width);
  fs::create_directories(src.out);
  write_metrics_file(fs::path(src.out) / "metrics.txt", report);
  if (a.metrics.empty() || a.metrics == std::vector<std::string>{"all"}) {
    write_metrics(std::cout, report);
  } else {
    for (const auto& m : a.metrics) {
      double v = 0.0;
      if (m == "acc") v = report.acc;
      else if (m == "dist") v = report.mean_dist;
      else if (m == "wer") v = report.wer;
      else if (m == "per") v = report.per;
      else v = report.cer_i;
      std::cout << m << '=' << std::setprecision(17) << v << '\n';
    }
  }
  return kExitOk;
}

// ---- sweep -----------------------------------------------------------------

struct SweepArgs {
  ModelFlags model;
  std::string train_path, dev_path, task = "inflection", unit, out = "sweep";
  std::vector<long> sizes = {20, 128, 400};
  std::vector<std::string> modes = {"feature_invariant"};
  bool parallel = false;
};

int cmd_sweep(SweepArgs& a) {
  resolve(a.model);
  if (a.unit.empty()) a.unit = to_string(default_unit(a.task));
  const TargetUnit unit = parse_target_unit(a.unit);
  const auto train_set = load_examples(a.train_path, a.task, unit);
  const auto dev_set = load_examples(a.dev_path, a.task, unit);
  const auto data = make_train_data(train_set, dev_set, a.task);
  std::vector<EncoderMode> modes;
  for (const auto& m : a.modes) modes.push_back(parse_encoder_mode(m));
  for (long s : a.sizes) {
    if (s < 1) throw UsageError("sweep: batch sizes must be >= 1");
  }
  auto on_row = [](const SweepRow& r) {
    std::cout << to_string(r.mode) << " batch " << r.batch_size << ": best dev acc "
              << std::fixed << std::setprecision(4) << r.best_dev_acc << " at step "
              << r.best_step << std::defaultfloat << std::endl;
  };
  const auto report = sweep_batch_size<real>(a.model.arch, data, a.model.train, a.sizes, modes,
                                             a.parallel, on_row);
  fs::create_directories(a.out);
  std::ofstream out(fs::path(a.out) / "sweep.txt");
  write_sweep_report(out, report);
  write_sweep_report(std::cout, report);
  return kExitOk;
}

// ---- gen-data --------------------------------------------------------------

struct GenArgs {
  std::string out = "synthetic", rules;
  std::uint64_t seed = 7;
  std::size_t num_examples = 2500, alphabet = 26, min_length = 3, max_length = 7;
};

int cmd_gen_data(const GenArgs& a) {
  RuleTable rules = default_rule_table();
  if (!a.rules.empty()) {
    auto in = detail::open_input(a.rules);
    rules = parse_rule_table(in, a.rules);
  }
  SyntheticOptions opt;
  opt.min_length = a.min_length;
  opt.max_length = a.max_length;
  const auto splits = gen_synthetic_inflection(a.num_examples, a.alphabet, rules, a.seed, opt);
  fs::create_directories(a.out);
  const fs::path out(a.out);
  auto write = [&](const char* name, const std::vector<Example>& ex) {
    std::ofstream f(out / name);
    write_inflection_tsv(f, ex);
  };
  write("train.tsv", splits.train);
  write("dev.tsv", splits.dev);
  write("test.tsv", splits.test);
  std::ofstream rf(out / "rules.tsv");
  write_rule_table(rf, rules);
  std::cout << "wrote " << splits.train.size() << '/' << splits.dev.size() << '/'
            << splits.test.size() << " examples to " << a.out << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Character-level transduction with a feature-invariant transformer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", build_id());

  const std::vector<std::string> task_names = kTasks;
  std::string config_path;
  const std::vector<std::string> unit_names = {"characters", "phonemes"};

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train a model and select the best checkpoint");
  train_cmd->add_option("--config", config_path, "TOML/INI file with flag values")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--train", ta.train_path, "training file");
  train_cmd->add_option("--dev", ta.dev_path, "development file");
  train_cmd->add_option("--task", ta.task, "task format")->check(CLI::IsMember(task_names))
      ->capture_default_str();
  train_cmd->add_option("--unit", ta.unit, "target unit")->check(CLI::IsMember(unit_names));
  train_cmd->add_option("--out", ta.out, "run directory")->capture_default_str();
  train_cmd->add_option("--resume", ta.resume, "checkpoint to continue from");
  train_cmd->add_flag("--keep_all_checkpoints", ta.keep_all,
                      "also keep every periodic checkpoint as checkpoints/step_N.ckpt");
  add_model_flags(train_cmd, ta.model);

  PredictArgs pa;
  auto* predict_cmd = app.add_subcommand("predict", "greedy-decode an input file");
  predict_cmd->add_option("--config", config_path, "TOML/INI file with flag values")
      ->check(CLI::ExistingFile);
  predict_cmd->add_option("--checkpoint", pa.checkpoint, "model checkpoint");
  predict_cmd->add_option("--input", pa.input, "input file");
  predict_cmd->add_option("--task", pa.task, "input format (default: checkpoint task)")
      ->check(CLI::IsMember(task_names));
  predict_cmd->add_option("--unit", pa.unit, "target unit")->check(CLI::IsMember(unit_names));
  predict_cmd->add_option("--out", pa.out, "output directory")->capture_default_str();
  predict_cmd->add_option("--eval_batch_size", pa.batch_size, "rows per decoding batch")
      ->capture_default_str();

  EvaluateArgs ea;
  auto* eval_cmd = app.add_subcommand("evaluate", "score predictions");
  eval_cmd->add_option("--config", config_path, "TOML/INI file with flag values")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--predictions", ea.predictions, "predictions file");
  eval_cmd->add_option("--checkpoint", ea.source.checkpoint, "model checkpoint");
  eval_cmd->add_option("--input", ea.source.input, "gold-annotated input file");
  eval_cmd->add_option("--task", ea.source.task, "input format")->check(CLI::IsMember(task_names));
  eval_cmd->add_option("--unit", ea.source.unit, "scoring unit")->check(CLI::IsMember(unit_names));
  eval_cmd->add_option("--metrics", ea.metrics, "metrics to print (default all)")
      ->delimiter(',')
      ->check(CLI::IsMember({"all", "acc", "dist", "wer", "per", "cer_i"}));
  eval_cmd->add_option("--bin_width", ea.bin_width, "gold-length bin width")
      ->check(CLI::PositiveNumber)->capture_default_str();
  eval_cmd->add_option("--out", ea.source.out, "output directory")->capture_default_str();
  eval_cmd->add_option("--eval_batch_size", ea.source.batch_size, "rows per decoding batch")
      ->capture_default_str();

  SweepArgs sa;
  auto* sweep_cmd = app.add_subcommand("sweep", "train once per batch size and encoder mode");
  sweep_cmd->add_option("--config", config_path, "TOML/INI file with flag values")
      ->check(CLI::ExistingFile);
  sweep_cmd->add_option("--train", sa.train_path, "training file");
  sweep_cmd->add_option("--dev", sa.dev_path, "development file");
  sweep_cmd->add_option("--task", sa.task, "task format")->check(CLI::IsMember(task_names))
      ->capture_default_str();
  sweep_cmd->add_option("--unit", sa.unit, "target unit")->check(CLI::IsMember(unit_names));
  sweep_cmd->add_option("--out", sa.out, "output directory")->capture_default_str();
  sweep_cmd->add_option("--batch-sizes,--batch_sizes", sa.sizes, "comma-separated sizes")
      ->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--modes", sa.modes, "comma-separated encoder modes")
      ->delimiter(',')
      ->check(CLI::IsMember({"feature_invariant", "vanilla"}))
      ->capture_default_str();
  sweep_cmd->add_flag("--parallel", sa.parallel, "run the trainings concurrently");
  add_model_flags(sweep_cmd, sa.model);

  GenArgs ga;
  auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic inflection task");
  gen_cmd->add_option("--config", config_path, "TOML/INI file with flag values")
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--out", ga.out, "output directory")->capture_default_str();
  gen_cmd->add_option("--seed", ga.seed, "random seed")->capture_default_str();
  gen_cmd->add_option("--num_examples", ga.num_examples, "lemmata across all splits")
      ->capture_default_str();
  gen_cmd->add_option("--alphabet", ga.alphabet, "alphabet size (1-26)")
      ->check(CLI::Range(1, 26))->capture_default_str();
  gen_cmd->add_option("--min_length", ga.min_length, "shortest lemma")->capture_default_str();
  gen_cmd->add_option("--max_length", ga.max_length, "longest lemma")->capture_default_str();
  gen_cmd->add_option("--rules", ga.rules, "rule table TSV (default: built-in)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  const std::vector<std::string> args(argv, argv + argc);
  try {
    CLI::App* active = app.get_subcommands().front();
    if (!config_path.empty()) apply_config(active, config_path);
    for (const char* name : {"--train", "--dev"}) {
      if ((active == train_cmd || active == sweep_cmd) && active->get_option(name)->empty()) {
        throw UsageError(std::string(name) + " is required");
      }
    }
    if (active == predict_cmd && (pa.checkpoint.empty() || pa.input.empty())) {
      throw UsageError("predict: --checkpoint and --input are required");
    }
    if (*train_cmd) return cmd_train(ta, args);
    if (*predict_cmd) return cmd_predict(pa);
    if (*eval_cmd) return cmd_evaluate(ea);
    if (*sweep_cmd) return cmd_sweep(sa);
    if (*gen_cmd) return cmd_gen_data(ga);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NonFiniteLossError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNonFinite;
  } catch (const InvariantError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
