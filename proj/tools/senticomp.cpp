// Command-line entry point: train, eval, analyze, trace, diff.
//
// Exit codes: 0 success; 2 configuration/parse failure; 3 non-finite loss
// abort; 4 checkpoint incompatibility.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "senticomp/config.hpp"
#include "senticomp/evalsuite.hpp"
#include "senticomp/model.hpp"
#include "senticomp/objective.hpp"
#include "senticomp/treebank.hpp"

using namespace senticomp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitCheckpoint = 4;

struct FlagOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<double> label_fraction;
  std::optional<std::string> granularity;
  std::optional<bool> token_node_objective;
  std::optional<std::string> out_dir;
  std::optional<std::string> train_path, test_path, vocab_path, lexicon_path;
  std::optional<std::string> checkpoint, init_checkpoint;
  std::optional<bool> mean_pool, finetune;
  std::optional<double> learning_rate;
  std::optional<std::size_t> batch_size;
  std::optional<double> mlm_weight, phrase_weight;
  std::optional<double> stop_at_phrase_acc;
};

void add_common_flags(CLI::App* cmd, FlagOverrides& f) {
  cmd->add_option("--config", f.config_path, "configuration file");
  cmd->add_option("--seed", f.seed, "random seed (mandatory for train)");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--label-fraction", f.label_fraction,
                  "fraction of phrase labels kept for supervision");
  cmd->add_option("--granularity", f.granularity, "label granularity {5,3,2}");
  cmd->add_option("--token-node-objective", f.token_node_objective,
                  "enable the token-node prediction objective");
  cmd->add_option("--out-dir", f.out_dir, "output directory");
  cmd->add_option("--train", f.train_path, "training treebank");
  cmd->add_option("--test", f.test_path, "test treebank");
  cmd->add_option("--vocab", f.vocab_path, "vocabulary file");
  cmd->add_option("--lexicon", f.lexicon_path, "opinion lexicon file");
  cmd->add_option("--checkpoint", f.checkpoint, "checkpoint path");
  cmd->add_option("--init-checkpoint", f.init_checkpoint,
                  "checkpoint to fine-tune from");
  cmd->add_option("--mean-pool", f.mean_pool,
                  "mean-pooling baseline instead of composition");
  cmd->add_option("--finetune", f.finetune, "sentence-level fine-tuning mode");
  cmd->add_option("--learning-rate", f.learning_rate, "optimizer step size");
  cmd->add_option("--batch-size", f.batch_size, "sentences per step");
  cmd->add_option("--mlm-weight", f.mlm_weight, "weight of the MLM loss");
  cmd->add_option("--phrase-weight", f.phrase_weight,
                  "weight of the phrase loss");
  cmd->add_option("--stop-at-phrase-acc", f.stop_at_phrase_acc,
                  "stop once training phrase accuracy reaches this");
}

RunConfig merge_config(const FlagOverrides& f) {
  RunConfig cfg;
  if (!f.config_path.empty()) cfg = RunConfig::from_file(f.config_path);
  if (f.seed) cfg.apply("seed", std::to_string(*f.seed));
  if (f.epochs) cfg.apply("epochs", std::to_string(*f.epochs));
  if (f.label_fraction) cfg.apply("label_fraction", std::to_string(*f.label_fraction));
  if (f.granularity) cfg.apply("granularity", *f.granularity);
  if (f.token_node_objective)
    cfg.apply("token_node_objective", *f.token_node_objective ? "true" : "false");
  if (f.out_dir) cfg.apply("out_dir", *f.out_dir);
  if (f.train_path) cfg.apply("train", *f.train_path);
  if (f.test_path) cfg.apply("test", *f.test_path);
  if (f.vocab_path) cfg.apply("vocab", *f.vocab_path);
  if (f.lexicon_path) cfg.apply("lexicon", *f.lexicon_path);
  if (f.checkpoint) cfg.apply("checkpoint", *f.checkpoint);
  if (f.init_checkpoint) cfg.apply("init_checkpoint", *f.init_checkpoint);
  if (f.mean_pool) cfg.apply("mean_pool", *f.mean_pool ? "true" : "false");
  if (f.finetune) cfg.apply("finetune", *f.finetune ? "true" : "false");
  if (f.learning_rate) {
    cfg.train.learning_rate = *f.learning_rate;
  }
  if (f.batch_size) cfg.apply("batch_size", std::to_string(*f.batch_size));
  if (f.mlm_weight) cfg.train.mlm_weight = *f.mlm_weight;
  if (f.phrase_weight) cfg.train.phrase_weight = *f.phrase_weight;
  if (f.stop_at_phrase_acc) cfg.train.stop_at_phrase_acc = *f.stop_at_phrase_acc;
  return cfg;
}

MaskingPolicy make_policy(const RunConfig& cfg) {
  MaskingPolicy policy;
  policy.opinion_word_prob = cfg.masking_opinion_prob;
  policy.other_word_prob = cfg.masking_other_prob;
  if (!cfg.lexicon_path.empty())
    policy.opinion_lexicon = load_lexicon(cfg.lexicon_path);
  return policy;
}

Vocabulary load_or_build_vocab(const RunConfig& cfg,
                               const std::vector<PhraseTree>& train_corpus) {
  if (!cfg.vocab_path.empty()) return Vocabulary::from_file(cfg.vocab_path);
  std::string derived = cfg.out_dir + "/vocab.txt";
  Vocabulary vocab = Vocabulary::build(train_corpus);
  std::filesystem::create_directories(cfg.out_dir);
  vocab.save(derived);
  return vocab;
}

int cmd_train(const FlagOverrides& flags) {
  RunConfig cfg = merge_config(flags);
  cfg.validate_for_train();
  std::vector<PhraseTree> corpus = load_treebank(cfg.train_path);
  Vocabulary vocab = load_or_build_vocab(cfg, corpus);
  MaskingPolicy policy = make_policy(cfg);

  std::filesystem::create_directories(cfg.out_dir);
  TrainResult result;
  if (cfg.finetune) {
    // Transfer load: heads of a different granularity start fresh.
    SentiModel model = SentiModel::from_checkpoint_transfer(
        cfg.model, vocab, cfg.init_checkpoint, cfg.train.seed);
    result = finetune_sentence(model, corpus, cfg.train,
                               cfg.finetune_keep_phrase_labels);
    model.params().save(cfg.resolved_checkpoint());
  } else {
    SentiModel model(cfg.model, vocab, cfg.train.seed);
    result = train(model, corpus, policy, cfg.train);
    model.params().save(cfg.resolved_checkpoint());
  }
  std::ofstream log(cfg.out_dir + "/train_log.jsonl");
  log << result.to_jsonl();
  if (!result.log.empty()) {
    const auto& last = result.log.back();
    std::cout << "epochs=" << result.log.size()
              << " phrase_acc=" << last.phrase_acc
              << " root_acc=" << last.root_acc << "\n";
  } else {
    std::cout << "epochs=0 (checkpoint equals initialization)\n";
  }
  std::cout << "checkpoint: " << cfg.resolved_checkpoint() << "\n";
  return kExitOk;
}

int cmd_eval(const FlagOverrides& flags, const std::string& report_path) {
  RunConfig cfg = merge_config(flags);
  cfg.validate_for_eval();
  std::vector<PhraseTree> corpus = load_treebank(cfg.test_path);
  Vocabulary vocab = Vocabulary::from_file(cfg.resolved_vocab());
  SentiModel model = SentiModel::from_checkpoint(cfg.model, vocab,
                                                 cfg.resolved_checkpoint());
  EvalOptions opts;
  opts.include_leaf_edges = cfg.include_leaf_edges;
  EvalReport report = evaluate(model, corpus, opts);
  std::string out_path =
      report_path.empty() ? cfg.out_dir + "/eval_report.json" : report_path;
  std::filesystem::create_directories(
      std::filesystem::path(out_path).parent_path().string().empty()
          ? "."
          : std::filesystem::path(out_path).parent_path().string());
  std::ofstream out(out_path);
  out << report.to_json();
  std::cout << "phrase_accuracy=" << report.phrase_acc
            << " root_accuracy=" << report.root_acc << "\n";
  std::cout << "report: " << out_path << "\n";
  return kExitOk;
}

int cmd_analyze(const std::string& treebank_path, const std::string& out_path,
                bool phrase_edges_only) {
  std::vector<PhraseTree> corpus = load_treebank(treebank_path);
  std::vector<PhraseTree> three;
  three.reserve(corpus.size());
  for (const auto& t : corpus)
    three.push_back(coarsen_labels(t, Granularity::Three));
  TreebankStats stats = compute_stats(three, !phrase_edges_only);
  std::string json = stats.to_json();
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot write " + out_path);
    out << json << "\n";
  }
  std::cout << json << "\n";
  return kExitOk;
}

int cmd_trace(const FlagOverrides& flags, std::int64_t index,
              const std::string& range, const std::string& trace_dir) {
  RunConfig cfg = merge_config(flags);
  cfg.validate_for_eval();
  std::vector<PhraseTree> corpus = load_treebank(cfg.test_path);
  Vocabulary vocab = Vocabulary::from_file(cfg.resolved_vocab());
  SentiModel model = SentiModel::from_checkpoint(cfg.model, vocab,
                                                 cfg.resolved_checkpoint());
  std::vector<std::size_t> indices;
  if (!range.empty()) {
    auto colon = range.find(':');
    if (colon == std::string::npos)
      throw ConfigError("range must be a:b, got '" + range + "'");
    long a = std::stol(range.substr(0, colon));
    long b = std::stol(range.substr(colon + 1));
    if (a < 0 || b <= a)
      throw ConfigError("range must satisfy 0 <= a < b, got '" + range + "'");
    for (long i = a; i < b; ++i) indices.push_back(static_cast<std::size_t>(i));
  } else if (index >= 0) {
    indices.push_back(static_cast<std::size_t>(index));
  } else {
    throw ConfigError("trace needs --index or --range");
  }
  for (std::size_t i : indices)
    if (i >= corpus.size())
      throw ConfigError("sentence index " + std::to_string(i) +
                        " outside corpus of " + std::to_string(corpus.size()));
  std::string dir = trace_dir.empty() ? cfg.out_dir + "/traces" : trace_dir;
  export_traces(model, corpus, indices, dir);
  std::cout << "traces: " << dir << " (" << indices.size() << " sentences)\n";
  return kExitOk;
}

int cmd_diff(const std::string& report_a, const std::string& report_b) {
  auto read = [](const std::string& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot read report: " + p);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return EvalReport::from_json(text);
  };
  EvalReport a = read(report_a);
  EvalReport b = read(report_b);
  nlohmann::json j;
  j["phrase_accuracy_diff"] = a.phrase_acc - b.phrase_acc;
  j["root_accuracy_diff"] = a.root_acc - b.root_acc;
  auto diff_bins = [](const auto& x, const auto& y) {
    nlohmann::json out;
    for (const auto& [k, v] : x) {
      auto it = y.find(k);
      if (it != y.end()) {
        std::string key;
        if constexpr (std::is_same_v<std::decay_t<decltype(k)>, int>)
          key = std::to_string(k);
        else
          key = k;
        out[key] = v.accuracy() - it->second.accuracy();
      }
    }
    return out;
  };
  j["local_difficulty_diff"] = diff_bins(a.by_local_difficulty, b.by_local_difficulty);
  j["global_difficulty_diff"] =
      diff_bins(a.by_global_difficulty, b.by_global_difficulty);
  j["negation_diff"] = diff_bins(a.by_negation, b.by_negation);
  if (a.contrastive && b.contrastive)
    j["contrastive_diff"] = a.contrastive->accuracy() - b.contrastive->accuracy();
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree-structured sentiment composition over a toy encoder"};
  app.require_subcommand(1);

  FlagOverrides train_flags, eval_flags, trace_flags;
  std::string eval_report_path;
  std::string analyze_treebank, analyze_out;
  bool analyze_phrase_edges_only = false;
  std::int64_t trace_index = -1;
  std::string trace_range, trace_out_dir;
  std::string diff_a, diff_b;

  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  add_common_flags(train_cmd, train_flags);

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common_flags(eval_cmd, eval_flags);
  eval_cmd->add_option("--report", eval_report_path, "report output path");

  CLI::App* analyze_cmd =
      app.add_subcommand("analyze", "treebank statistics (3-class analysis)");
  analyze_cmd->add_option("treebank", analyze_treebank, "treebank file")
      ->required();
  analyze_cmd->add_option("--out", analyze_out, "stats JSON output path");
  analyze_cmd->add_flag("--phrase-edges-only", analyze_phrase_edges_only,
                        "count only phrase-phrase sentiment switches");

  CLI::App* trace_cmd =
      app.add_subcommand("trace", "attention-trace JSON + DOT export");
  add_common_flags(trace_cmd, trace_flags);
  trace_cmd->add_option("--index", trace_index, "sentence index");
  trace_cmd->add_option("--range", trace_range, "half-open slice a:b");
  trace_cmd->add_option("--trace-dir", trace_out_dir, "trace output directory");

  CLI::App* diff_cmd =
      app.add_subcommand("diff", "accuracy differences of two eval reports");
  diff_cmd->add_option("report_a", diff_a, "first report")->required();
  diff_cmd->add_option("report_b", diff_b, "second (baseline) report")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_flags);
    if (eval_cmd->parsed()) return cmd_eval(eval_flags, eval_report_path);
    if (analyze_cmd->parsed())
      return cmd_analyze(analyze_treebank, analyze_out,
                         analyze_phrase_edges_only);
    if (trace_cmd->parsed())
      return cmd_trace(trace_flags, trace_index, trace_range, trace_out_dir);
    if (diff_cmd->parsed()) return cmd_diff(diff_a, diff_b);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    // checkpoint problems (layout, truncation) are the shape-mismatch class
    std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    return what.find("checkpoint") != std::string::npos ? kExitCheckpoint
                                                        : kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
