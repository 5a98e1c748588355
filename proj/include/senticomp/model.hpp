#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "senticomp/composition.hpp"
#include "senticomp/encoder.hpp"
#include "senticomp/tensor.hpp"
#include "senticomp/treebank.hpp"
#include "senticomp/vocab.hpp"

namespace senticomp {

struct ModelConfig {
  EncoderConfig encoder;
  Granularity granularity = Granularity::Five;
  bool token_head = false;  // created when the token-node objective is on
  bool mean_pool = false;   // mean-pooling baseline instead of composition
};

/// Linear map d -> C over a node representation.
struct SentimentHead {
  Tensor w, b;
  SentimentHead() = default;
  SentimentHead(const std::string& prefix, std::size_t dim, int classes,
                ParamStore& params, Rng& rng);
  SentimentHead(const std::string& prefix, const ParamStore& params);
  Tensor logits(Graph& g, const Tensor& rep) const;
  Tensor logits_batch(Graph& g, const Tensor& reps) const;  // {n,d} -> {n,C}
};

/// The assembled system: vocabulary, encoder, composition (or mean pooling),
/// and sentiment heads over one parameter store.
class SentiModel {
 public:
  /// Fresh parameters from the seed.
  SentiModel(const ModelConfig& config, Vocabulary vocab, std::uint64_t seed);
  /// Bind to a checkpoint; layout mismatches raise IoError.
  static SentiModel from_checkpoint(const ModelConfig& config, Vocabulary vocab,
                                    const std::string& path);

  /// Warm start for fine-tuning, possibly across label granularities: fresh
  /// parameters from seed, then values copied for every checkpoint entry
  /// whose name and shape match (a head of a different width stays fresh).
  /// The token embedding must match or the checkpoint is unusable (IoError).
  static SentiModel from_checkpoint_transfer(const ModelConfig& config,
                                             Vocabulary vocab,
                                             const std::string& path,
                                             std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParamStore& params() { return *params_; }
  const ParamStore& params() const { return *params_; }
  int classes() const { return class_count(config_.granularity); }

  struct Forward {
    Tokenized tokenized;
    Tensor h;
    TreeStates states;
    std::vector<MlmTarget> mlm_targets;  // empty on clean passes
  };

  /// Clean pass: no masking, no dropout. Used by evaluation.
  Forward forward_clean(Graph& g, const PhraseTree& tree) const;

  /// Training pass: masking corruption plus dropout, both driven by rng.
  Forward forward_train(Graph& g, const PhraseTree& tree,
                        const MaskingPolicy& policy, Rng& rng) const;

  Tensor mlm_loss(Graph& g, const Forward& f) const;

  /// Mean cross-entropy of head(p_i) over supervised, non-excluded phrase
  /// nodes; constant 0 when none. mask may be empty (= all supervised).
  Tensor phrase_loss(Graph& g, const Forward& f, const PhraseTree& tree,
                     const std::vector<bool>& mask) const;

  /// Mean cross-entropy over leaf representations against leaf gold labels.
  Tensor token_node_loss(Graph& g, const Forward& f,
                         const PhraseTree& tree) const;

  struct TreePrediction {
    std::vector<int> node_pred;  // per node id; -1 where not predicted
    int root_pred = -1;
  };
  /// Clean forward + argmax heads. Non-leaf nodes always predicted; leaves
  /// only when the token head exists (the root leaf of a one-token sentence
  /// is always predicted).
  TreePrediction predict(const PhraseTree& tree) const;

  const SentimentHead& phrase_head() const { return phrase_head_; }

 private:
  SentiModel(const ModelConfig& config, Vocabulary vocab,
             std::shared_ptr<ParamStore> params);
  static std::shared_ptr<ParamStore> build_params(const ModelConfig& config,
                                                  const Vocabulary& vocab,
                                                  std::uint64_t seed);

  ModelConfig config_;
  Vocabulary vocab_;
  std::shared_ptr<ParamStore> params_;
  std::optional<Encoder> encoder_;
  std::optional<Composition> composition_;
  SentimentHead phrase_head_;
  SentimentHead token_head_;
};

}  // namespace senticomp
