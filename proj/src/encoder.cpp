#include "senticomp/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

namespace senticomp {

namespace {
std::string lowercase(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}
}  // namespace

void MaskingPolicy::validate() const {
  for (double p : {opinion_word_prob, other_word_prob})
    if (p < 0.0 || p > 1.0)
      throw ConfigError("masking probability outside [0,1]");
  double s = mask_split + random_split + keep_split;
  if (std::fabs(s - 1.0) > 1e-9)
    throw ConfigError("mask/random/keep split must sum to 1");
}

bool MaskingPolicy::is_opinion_word(const std::string& word) const {
  return opinion_lexicon.count(lowercase(word)) != 0;
}

std::unordered_set<std::string> load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon: " + path);
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.insert(lowercase(line));
  }
  return out;
}

MaskingResult apply_masking(const Tokenized& tokenized,
                            const std::vector<std::string>& surface_tokens,
                            const MaskingPolicy& policy,
                            const Vocabulary& vocab, Rng& rng) {
  policy.validate();
  if (surface_tokens.size() != tokenized.alignment.size())
    throw DomainError("apply_masking: surface/alignment size mismatch");
  MaskingResult result;
  result.corrupted_ids = tokenized.ids;
  const std::size_t vocab_size = vocab.size();
  for (std::size_t t = 0; t < surface_tokens.size(); ++t) {
    double p = policy.is_opinion_word(surface_tokens[t])
                   ? policy.opinion_word_prob
                   : policy.other_word_prob;
    if (!rng.bernoulli(p)) continue;
    double treatment = rng.uniform();
    const TokenRange& range = tokenized.alignment[t];
    for (std::size_t pos = range.first; pos <= range.last; ++pos) {
      result.targets.push_back({pos, tokenized.ids[pos]});
      if (treatment < policy.mask_split) {
        result.corrupted_ids[pos] = Vocabulary::kMask;
      } else if (treatment < policy.mask_split + policy.random_split) {
        // uniform over non-special entries
        std::size_t span = vocab_size - Vocabulary::kSpecialCount;
        result.corrupted_ids[pos] =
            Vocabulary::kSpecialCount + static_cast<int>(rng.uniform_int(span));
      }
      // keep: position stays, still predicted
    }
  }
  return result;
}

// -- encoder -------------------------------------------------------------------

namespace {
std::string block_key(std::size_t layer, const char* suffix) {
  return "enc." + std::to_string(layer) + "." + suffix;
}
}  // namespace

Encoder::Encoder(const EncoderConfig& config, ParamStore& params, Rng& rng)
    : config_(config) {
  const std::size_t d = config.model_dim;
  if (config.heads == 0 || d % config.heads != 0)
    throw ConfigError("model_dim must be divisible by heads");
  if (config.vocab_size == 0) throw ConfigError("vocab_size not set");

  tok_embed_ = params.create_uniform("embed.tok", {config.vocab_size, d}, d, rng);
  pos_embed_ = params.create_uniform("embed.pos", {config.max_len, d}, d, rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    Block b;
    b.ln1_gain = params.create_ones(block_key(l, "ln1.gain"), {d});
    b.ln1_bias = params.create_zeros(block_key(l, "ln1.bias"), {d});
    b.wq = params.create_uniform(block_key(l, "attn.wq"), {d, d}, d, rng);
    b.bq = params.create_zeros(block_key(l, "attn.bq"), {d});
    b.wk = params.create_uniform(block_key(l, "attn.wk"), {d, d}, d, rng);
    b.bk = params.create_zeros(block_key(l, "attn.bk"), {d});
    b.wv = params.create_uniform(block_key(l, "attn.wv"), {d, d}, d, rng);
    b.bv = params.create_zeros(block_key(l, "attn.bv"), {d});
    b.wo = params.create_uniform(block_key(l, "attn.wo"), {d, d}, d, rng);
    b.bo = params.create_zeros(block_key(l, "attn.bo"), {d});
    b.ln2_gain = params.create_ones(block_key(l, "ln2.gain"), {d});
    b.ln2_bias = params.create_zeros(block_key(l, "ln2.bias"), {d});
    b.ffn_w1 = params.create_uniform(block_key(l, "ffn.w1"),
                                     {config.ffn_dim, d}, d, rng);
    b.ffn_b1 = params.create_zeros(block_key(l, "ffn.b1"), {config.ffn_dim});
    b.ffn_w2 = params.create_uniform(block_key(l, "ffn.w2"),
                                     {d, config.ffn_dim}, config.ffn_dim, rng);
    b.ffn_b2 = params.create_zeros(block_key(l, "ffn.b2"), {d});
    blocks_.push_back(std::move(b));
  }
  final_ln_gain_ = params.create_ones("enc.final_ln.gain", {d});
  final_ln_bias_ = params.create_zeros("enc.final_ln.bias", {d});
  post_fc_w_ = params.create_uniform("enc.post_fc.w", {d, d}, d, rng);
  post_fc_b_ = params.create_zeros("enc.post_fc.b", {d});
  mlm_bias_ = params.create_zeros("mlm.bias", {config.vocab_size});
}

Encoder::Encoder(const EncoderConfig& config, const ParamStore& params)
    : config_(config) {
  tok_embed_ = params.get("embed.tok");
  pos_embed_ = params.get("embed.pos");
  for (std::size_t l = 0; l < config.layers; ++l) {
    Block b;
    b.ln1_gain = params.get(block_key(l, "ln1.gain"));
    b.ln1_bias = params.get(block_key(l, "ln1.bias"));
    b.wq = params.get(block_key(l, "attn.wq"));
    b.bq = params.get(block_key(l, "attn.bq"));
    b.wk = params.get(block_key(l, "attn.wk"));
    b.bk = params.get(block_key(l, "attn.bk"));
    b.wv = params.get(block_key(l, "attn.wv"));
    b.bv = params.get(block_key(l, "attn.bv"));
    b.wo = params.get(block_key(l, "attn.wo"));
    b.bo = params.get(block_key(l, "attn.bo"));
    b.ln2_gain = params.get(block_key(l, "ln2.gain"));
    b.ln2_bias = params.get(block_key(l, "ln2.bias"));
    b.ffn_w1 = params.get(block_key(l, "ffn.w1"));
    b.ffn_b1 = params.get(block_key(l, "ffn.b1"));
    b.ffn_w2 = params.get(block_key(l, "ffn.w2"));
    b.ffn_b2 = params.get(block_key(l, "ffn.b2"));
    blocks_.push_back(std::move(b));
  }
  final_ln_gain_ = params.get("enc.final_ln.gain");
  final_ln_bias_ = params.get("enc.final_ln.bias");
  post_fc_w_ = params.get("enc.post_fc.w");
  post_fc_b_ = params.get("enc.post_fc.b");
  mlm_bias_ = params.get("mlm.bias");
}

Tensor Encoder::encode(Graph& g, const std::vector<int>& ids, bool training,
                       Rng* dropout_rng) const {
  const std::size_t n = ids.size();
  const std::size_t d = config_.model_dim;
  const std::size_t heads = config_.heads;
  const std::size_t dk = d / heads;
  if (n == 0) throw DomainError("encode: empty id sequence");
  if (n > config_.max_len)
    throw LengthError("sequence of " + std::to_string(n) +
                      " subtokens exceeds max_len " +
                      std::to_string(config_.max_len));
  const bool drop = training && config_.dropout > 0.0 && dropout_rng;
  auto maybe_dropout = [&](Tensor x) {
    return drop ? g.dropout(x, config_.dropout, *dropout_rng) : x;
  };

  std::vector<std::size_t> tok_rows, pos_rows;
  for (std::size_t i = 0; i < n; ++i) {
    int id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size)
      throw DomainError("token id " + std::to_string(id) +
                        " outside vocabulary");
    tok_rows.push_back(static_cast<std::size_t>(id));
    pos_rows.push_back(i);
  }
  Tensor x = g.add(g.gather_rows(tok_embed_, tok_rows),
                   g.gather_rows(pos_embed_, pos_rows));
  x = maybe_dropout(x);

  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  for (const Block& b : blocks_) {
    Tensor a_in = g.layer_norm(x, b.ln1_gain, b.ln1_bias);
    Tensor q = g.add_rowwise(g.matmul(a_in, b.wq, false, true), b.bq);
    Tensor k = g.add_rowwise(g.matmul(a_in, b.wk, false, true), b.bk);
    Tensor v = g.add_rowwise(g.matmul(a_in, b.wv, false, true), b.bv);
    Tensor context;
    for (std::size_t h = 0; h < heads; ++h) {
      Tensor qh = g.slice_cols(q, h * dk, dk);
      Tensor kh = g.slice_cols(k, h * dk, dk);
      Tensor vh = g.slice_cols(v, h * dk, dk);
      Tensor scores = g.scale(g.matmul(qh, kh, false, true), inv_sqrt_dk);
      Tensor probs = maybe_dropout(g.softmax(scores));
      Tensor ctx = g.matmul(probs, vh);
      context = h == 0 ? ctx : g.concat(context, ctx);
    }
    Tensor attn_out =
        g.add_rowwise(g.matmul(context, b.wo, false, true), b.bo);
    x = g.add(x, maybe_dropout(attn_out));

    Tensor f_in = g.layer_norm(x, b.ln2_gain, b.ln2_bias);
    Tensor ff = g.gelu(
        g.add_rowwise(g.matmul(f_in, b.ffn_w1, false, true), b.ffn_b1));
    Tensor ff2 = g.add_rowwise(g.matmul(ff, b.ffn_w2, false, true), b.ffn_b2);
    x = g.add(x, maybe_dropout(ff2));
  }
  x = g.layer_norm(x, final_ln_gain_, final_ln_bias_);
  return g.add_rowwise(g.matmul(x, post_fc_w_, false, true), post_fc_b_);
}

Tensor Encoder::mlm_loss(Graph& g, const Tensor& h,
                         const std::vector<MlmTarget>& targets) const {
  if (targets.empty()) return Tensor::scalar(0.0);
  std::vector<std::size_t> positions;
  std::vector<int> golds;
  for (const auto& t : targets) {
    positions.push_back(t.position);
    golds.push_back(t.original_id);
  }
  Tensor rows = g.gather_rows(h, positions);
  Tensor logits =
      g.add_rowwise(g.matmul(rows, tok_embed_, false, true), mlm_bias_);
  return g.cross_entropy(logits, golds);
}

}  // namespace senticomp
