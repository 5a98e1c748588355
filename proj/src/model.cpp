#include "senticomp/model.hpp"

namespace senticomp {

SentimentHead::SentimentHead(const std::string& prefix, std::size_t dim,
                             int classes, ParamStore& params, Rng& rng) {
  w = params.create_uniform(prefix + ".w",
                            {static_cast<std::size_t>(classes), dim}, dim, rng);
  b = params.create_zeros(prefix + ".b", {static_cast<std::size_t>(classes)});
}

SentimentHead::SentimentHead(const std::string& prefix,
                             const ParamStore& params) {
  w = params.get(prefix + ".w");
  b = params.get(prefix + ".b");
}

Tensor SentimentHead::logits(Graph& g, const Tensor& rep) const {
  return g.add(g.matmul(w, rep), b);
}

Tensor SentimentHead::logits_batch(Graph& g, const Tensor& reps) const {
  return g.add_rowwise(g.matmul(reps, w, false, true), b);
}

// -- model assembly -------------------------------------------------------------

std::shared_ptr<ParamStore> SentiModel::build_params(const ModelConfig& config,
                                                     const Vocabulary& vocab,
                                                     std::uint64_t seed) {
  auto store = std::make_shared<ParamStore>();
  Rng rng(seed);
  EncoderConfig enc_cfg = config.encoder;
  enc_cfg.vocab_size = vocab.size();
  Encoder enc(enc_cfg, *store, rng);  // registers encoder parameters
  if (!config.mean_pool) Composition comp(enc_cfg.model_dim, *store, rng);
  Rng head_rng(rng.next_u64());
  SentimentHead("head.phrase", enc_cfg.model_dim,
                class_count(config.granularity), *store, head_rng);
  if (config.token_head)
    SentimentHead("head.token", enc_cfg.model_dim,
                  class_count(config.granularity), *store, head_rng);
  return store;
}

SentiModel::SentiModel(const ModelConfig& config, Vocabulary vocab,
                       std::shared_ptr<ParamStore> params)
    : config_(config), vocab_(std::move(vocab)), params_(std::move(params)) {
  config_.encoder.vocab_size = vocab_.size();
  encoder_.emplace(config_.encoder, *params_);
  if (!config_.mean_pool)
    composition_.emplace(config_.encoder.model_dim, *params_);
  phrase_head_ = SentimentHead("head.phrase", *params_);
  if (config_.token_head) token_head_ = SentimentHead("head.token", *params_);
}

SentiModel::SentiModel(const ModelConfig& config, Vocabulary vocab,
                       std::uint64_t seed)
    : SentiModel(config, vocab, build_params(config, vocab, seed)) {}

SentiModel SentiModel::from_checkpoint(const ModelConfig& config,
                                       Vocabulary vocab,
                                       const std::string& path) {
  auto expected = build_params(config, vocab, 0);
  auto loaded = std::make_shared<ParamStore>(ParamStore::load(path));
  expected->check_layout_matches(*loaded);
  return SentiModel(config, std::move(vocab), std::move(loaded));
}

SentiModel SentiModel::from_checkpoint_transfer(const ModelConfig& config,
                                                Vocabulary vocab,
                                                const std::string& path,
                                                std::uint64_t seed) {
  auto fresh = build_params(config, vocab, seed);
  ParamStore loaded = ParamStore::load(path);
  bool embedding_copied = false;
  for (auto& [name, t] : fresh->entries()) {
    if (!loaded.has(name)) continue;
    Tensor src = loaded.get(name);
    if (src.shape() != t.shape()) continue;
    Tensor dst = t;
    dst.values() = src.values();
    if (name == "embed.tok") embedding_copied = true;
  }
  if (!embedding_copied)
    throw IoError(
        "checkpoint transfer failed: token embedding in '" + path +
        "' does not match the configured vocabulary and model_dim");
  return SentiModel(config, std::move(vocab), fresh);
}

// -- forward passes ---------------------------------------------------------------

SentiModel::Forward SentiModel::forward_clean(Graph& g,
                                              const PhraseTree& tree) const {
  Forward f;
  f.tokenized = tokenize(vocab_, tree.tokens);
  f.h = encoder_->encode(g, f.tokenized.ids, false, nullptr);
  f.states = config_.mean_pool
                 ? mean_pool_tree(g, tree, f.h, f.tokenized.alignment)
                 : forward_tree(g, tree, f.h, f.tokenized.alignment,
                                *composition_);
  return f;
}

SentiModel::Forward SentiModel::forward_train(Graph& g, const PhraseTree& tree,
                                              const MaskingPolicy& policy,
                                              Rng& rng) const {
  Forward f;
  f.tokenized = tokenize(vocab_, tree.tokens);
  MaskingResult masked =
      apply_masking(f.tokenized, tree.tokens, policy, vocab_, rng);
  f.mlm_targets = std::move(masked.targets);
  f.h = encoder_->encode(g, masked.corrupted_ids, true, &rng);
  // Composition runs over the uncorrupted tree spans on the corrupted input:
  // one shared forward pass for both objectives.
  f.states = config_.mean_pool
                 ? mean_pool_tree(g, tree, f.h, f.tokenized.alignment)
                 : forward_tree(g, tree, f.h, f.tokenized.alignment,
                                *composition_);
  return f;
}

Tensor SentiModel::mlm_loss(Graph& g, const Forward& f) const {
  return encoder_->mlm_loss(g, f.h, f.mlm_targets);
}

Tensor SentiModel::phrase_loss(Graph& g, const Forward& f,
                               const PhraseTree& tree,
                               const std::vector<bool>& mask) const {
  std::vector<Tensor> reps;
  std::vector<int> golds;
  for (const auto& n : tree.nodes) {
    if (n.leaf || n.loss_excluded) continue;
    if (!mask.empty() && !mask[static_cast<std::size_t>(n.id)]) continue;
    reps.push_back(f.states.nodes[static_cast<std::size_t>(n.id)].rep);
    golds.push_back(n.label);
  }
  if (reps.empty()) return Tensor::scalar(0.0);
  Tensor logits = phrase_head_.logits_batch(g, g.stack(reps));
  return g.cross_entropy(logits, golds);
}

Tensor SentiModel::token_node_loss(Graph& g, const Forward& f,
                                   const PhraseTree& tree) const {
  if (!config_.token_head)
    throw ConfigError("token-node objective requires the token head");
  std::vector<Tensor> reps;
  std::vector<int> golds;
  for (const auto& n : tree.nodes) {
    if (!n.leaf || n.loss_excluded) continue;
    const auto& st = f.states.nodes[static_cast<std::size_t>(n.id)];
    if (!st.has_rep) continue;
    reps.push_back(st.rep);
    golds.push_back(n.label);
  }
  if (reps.empty()) return Tensor::scalar(0.0);
  Tensor logits = token_head_.logits_batch(g, g.stack(reps));
  return g.cross_entropy(logits, golds);
}

SentiModel::TreePrediction SentiModel::predict(const PhraseTree& tree) const {
  Graph g;
  Forward f = forward_clean(g, tree);
  TreePrediction out;
  out.node_pred.assign(tree.nodes.size(), -1);
  auto argmax = [&](const Tensor& logits) {
    int best = 0;
    for (std::size_t j = 1; j < logits.size(); ++j)
      if (logits.at(j) > logits.at(static_cast<std::size_t>(best)))
        best = static_cast<int>(j);
    return best;
  };
  for (const auto& n : tree.nodes) {
    const auto& st = f.states.nodes[static_cast<std::size_t>(n.id)];
    if (!st.has_rep) continue;
    bool is_root = n.id == tree.root_id;
    if (n.leaf && !config_.token_head && !is_root) continue;
    const SentimentHead& head =
        n.leaf && config_.token_head && !is_root ? token_head_ : phrase_head_;
    out.node_pred[static_cast<std::size_t>(n.id)] =
        argmax(head.logits(g, st.rep));
  }
  out.root_pred = out.node_pred[static_cast<std::size_t>(tree.root_id)];
  return out;
}

}  // namespace senticomp
