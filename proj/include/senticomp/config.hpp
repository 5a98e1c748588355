#pragma once

#include <string>
#include <vector>

#include "senticomp/encoder.hpp"
#include "senticomp/model.hpp"
#include "senticomp/objective.hpp"

namespace senticomp {

/// Merged run configuration: defaults, then config-file keys, then flag
/// overrides (flag > file > default). The file grammar is a TOML-style
/// key/value subset: one `key = value` per line, `#` comments, double-quoted
/// or bare strings, integers, reals, true/false.
struct RunConfig {
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string vocab_path;    // empty: derive from the training corpus
  std::string lexicon_path;  // empty: no opinion lexicon
  std::string out_dir = "out";
  std::string checkpoint_path;   // empty: <out_dir>/model.ckpt
  std::string init_checkpoint;   // fine-tuning starts from this

  ModelConfig model;
  TrainConfig train;
  double masking_opinion_prob = 0.20;
  double masking_other_prob = 0.15;
  bool finetune = false;
  bool finetune_keep_phrase_labels = false;
  bool include_leaf_edges = true;

  bool seed_set = false;

  std::string resolved_checkpoint() const {
    return checkpoint_path.empty() ? out_dir + "/model.ckpt" : checkpoint_path;
  }
  std::string resolved_vocab() const {
    return vocab_path.empty() ? out_dir + "/vocab.txt" : vocab_path;
  }

  /// Applies one key/value pair; ConfigError names the key on any problem.
  void apply(const std::string& key, const std::string& value);

  static RunConfig from_file(const std::string& path);

  /// Field-level validation; messages name the offending field.
  void validate_for_train() const;
  void validate_for_eval() const;
};

Granularity granularity_from_string(const std::string& s);

}  // namespace senticomp
