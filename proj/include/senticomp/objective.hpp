#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "senticomp/encoder.hpp"
#include "senticomp/model.hpp"
#include "senticomp/treebank.hpp"

namespace senticomp {

enum class SupervisionMode {
  PhraseFraction,     // label_fraction of phrase nodes, corpus-global
  RootOnly,           // sentence-level: root node only
  RootPlusFraction,   // roots plus label_fraction of phrase nodes
};

struct TrainConfig {
  double learning_rate = 1e-3;  // paper preset: 2e-5
  std::size_t batch_size = 16;
  std::size_t epochs = 3;
  std::uint64_t seed = 0;
  double mlm_weight = 1.0;
  double phrase_weight = 1.0;
  bool token_node_objective = false;
  double label_fraction = 1.0;
  SupervisionMode supervision = SupervisionMode::PhraseFraction;
  bool mlm_enabled = true;
  double grad_clip = 1.0;
  double warmup_fraction = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Stop once clean training phrase accuracy reaches this value (<=0: off).
  double stop_at_phrase_acc = 0.0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double mlm_loss = 0.0;
  double phrase_loss = 0.0;
  double phrase_acc = 0.0;
  double root_acc = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  /// JSON-lines, one record per epoch.
  std::string to_jsonl() const;
};

/// Adam with bias correction, global-norm clipping and linear warmup are
/// handled by the trainer; this holds the per-parameter moments.
class Adam {
 public:
  Adam(const ParamStore& params, double beta1, double beta2, double eps);
  /// grads is aligned with the store's entry order.
  void step(ParamStore& params, const std::vector<std::vector<double>>& grads,
            double lr);
  std::size_t steps_taken() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Joint MLM + phrase-supervision training. Deterministic given the seed:
/// per-sentence generators are derived from (seed, epoch, corpus index) and
/// gradient reduction follows the batch's sentence order.
TrainResult train(SentiModel& model, const std::vector<PhraseTree>& corpus5,
                  const MaskingPolicy& policy, const TrainConfig& config);

/// Sentence-level fine-tuning: supervision restricted to roots (plus the
/// configured phrase fraction when keep_phrase_labels), MLM off.
TrainResult finetune_sentence(SentiModel& model,
                              const std::vector<PhraseTree>& corpus5,
                              const TrainConfig& config,
                              bool keep_phrase_labels = false);

}  // namespace senticomp
