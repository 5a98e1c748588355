#pragma once

#include <cstddef>
#include <string>
#include <unordered_set>
#include <vector>

#include "senticomp/rng.hpp"
#include "senticomp/tensor.hpp"
#include "senticomp/vocab.hpp"

namespace senticomp {

struct EncoderConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t model_dim = 64;
  std::size_t ffn_dim = 256;
  std::size_t max_len = 64;
  std::size_t vocab_size = 0;  // filled from the vocabulary
  double dropout = 0.1;
};

/// Surface-word masking policy with an opinion-word bias. All subtokens of a
/// selected word share one treatment draw from the mask/random/keep split.
struct MaskingPolicy {
  double opinion_word_prob = 0.20;
  double other_word_prob = 0.15;
  double mask_split = 0.8;
  double random_split = 0.1;
  double keep_split = 0.1;
  std::unordered_set<std::string> opinion_lexicon;  // lowercase entries

  void validate() const;
  bool is_opinion_word(const std::string& word) const;
};

std::unordered_set<std::string> load_lexicon(const std::string& path);

struct MlmTarget {
  std::size_t position;  // index into the id sequence
  int original_id;
};

struct MaskingResult {
  std::vector<int> corrupted_ids;
  std::vector<MlmTarget> targets;
};

MaskingResult apply_masking(const Tokenized& tokenized,
                            const std::vector<std::string>& surface_tokens,
                            const MaskingPolicy& policy,
                            const Vocabulary& vocab, Rng& rng);

/// Toy transformer encoder: learned token + position embeddings, pre-norm
/// residual self-attention blocks, a final layer norm, then the
/// fully-connected projection that produces h.
class Encoder {
 public:
  /// Creates parameters in the store (training from scratch).
  Encoder(const EncoderConfig& config, ParamStore& params, Rng& rng);
  /// Binds to parameters that already exist in the store (checkpoint load).
  Encoder(const EncoderConfig& config, const ParamStore& params);

  /// h for the whole id sequence, shape (len, d). Dropout only when training.
  Tensor encode(Graph& g, const std::vector<int>& ids, bool training = false,
                Rng* dropout_rng = nullptr) const;

  /// Mean cross-entropy over target positions through the tied-embedding
  /// output projection; constant 0 when no positions were selected.
  Tensor mlm_loss(Graph& g, const Tensor& h,
                  const std::vector<MlmTarget>& targets) const;

  const EncoderConfig& config() const { return config_; }
  Tensor token_embedding() const { return tok_embed_; }

 private:
  struct Block {
    Tensor ln1_gain, ln1_bias;
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln2_gain, ln2_bias;
    Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  };

  EncoderConfig config_;
  Tensor tok_embed_, pos_embed_;
  std::vector<Block> blocks_;
  Tensor final_ln_gain_, final_ln_bias_;
  Tensor post_fc_w_, post_fc_b_;
  Tensor mlm_bias_;
};

}  // namespace senticomp
