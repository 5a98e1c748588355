#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "senticomp/encoder.hpp"
#include "senticomp/model.hpp"
#include "senticomp/objective.hpp"
#include "senticomp/treebank.hpp"
#include "senticomp/vocab.hpp"
#include "support/synthetic.hpp"

using namespace senticomp;
using namespace senticomp::testing;

namespace {

Vocabulary toy_vocab() {
  std::vector<PhraseTree> corpus = {
      parse_ptb("(3 (2 Good) (2 movie))"),
      parse_ptb("(1 (2 really) (1 (2 n't) (1 dull)))"),
  };
  return Vocabulary::build(corpus);
}

EncoderConfig small_config(const Vocabulary& v) {
  EncoderConfig c;
  c.layers = 2;
  c.heads = 2;
  c.model_dim = 16;
  c.ffn_dim = 32;
  c.max_len = 32;
  c.vocab_size = v.size();
  c.dropout = 0.0;
  return c;
}

}  // namespace

TEST_CASE("tokenize: in-vocabulary words are single subtokens") {
  Vocabulary v = toy_vocab();
  Tokenized t = tokenize(v, {"Good", "movie"});
  CHECK(t.ids.size() == 4);  // CLS w w SEP
  CHECK(t.ids.front() == Vocabulary::kCls);
  CHECK(t.ids.back() == Vocabulary::kSep);
  REQUIRE(t.alignment.size() == 2);
  CHECK(t.alignment[0].first == 1);
  CHECK(t.alignment[0].last == 1);
  CHECK(t.alignment[1].first == 2);
  CHECK(t.alignment[1].last == 2);
}

TEST_CASE("tokenize: OOV word decomposes to characters") {
  Vocabulary v = toy_vocab();
  // "dim" is OOV; its letters appear in corpus words (d in dull, i in movie, m in movie)
  Tokenized t = tokenize(v, {"dim"});
  REQUIRE(t.alignment.size() == 1);
  CHECK(t.alignment[0].width() == 3);
  for (std::size_t p = t.alignment[0].first; p <= t.alignment[0].last; ++p)
    CHECK_FALSE(Vocabulary::is_special(t.ids[p]));
  // a word with unseen characters falls back to UNK per character
  Tokenized u = tokenize(v, {"zzq"});
  CHECK(u.alignment[0].width() == 3);
  for (std::size_t p = u.alignment[0].first; p <= u.alignment[0].last; ++p)
    CHECK(u.ids[p] == Vocabulary::kUnk);
}

TEST_CASE("tokenize: empty sentence is a domain error") {
  Vocabulary v = toy_vocab();
  CHECK_THROWS_AS(tokenize(v, {}), DomainError);
}

TEST_CASE("alignment covers every non-special position exactly once") {
  Rng rng(71);
  std::vector<PhraseTree> corpus;
  for (int i = 0; i < 40; ++i) corpus.push_back(random_tree(rng));
  Vocabulary v = Vocabulary::build(corpus);
  for (const auto& tree : corpus) {
    Tokenized t = tokenize(v, tree.tokens);
    // Exhaustive coverage scan.
    std::vector<int> covered(t.ids.size(), 0);
    for (const auto& r : t.alignment) {
      REQUIRE(r.first <= r.last);
      REQUIRE(r.last < t.ids.size());
      for (std::size_t p = r.first; p <= r.last; ++p) ++covered[p];
    }
    for (std::size_t p = 0; p < t.ids.size(); ++p) {
      bool special_pos = p == 0 || p + 1 == t.ids.size();
      CHECK(covered[p] == (special_pos ? 0 : 1));
      if (special_pos) CHECK(Vocabulary::is_special(t.ids[p]));
    }
    // ranges are ordered and contiguous
    for (std::size_t i = 1; i < t.alignment.size(); ++i)
      CHECK(t.alignment[i].first == t.alignment[i - 1].last + 1);
  }
}

TEST_CASE("vocabulary file round-trip keeps ids") {
  Vocabulary v = toy_vocab();
  auto path = std::filesystem::temp_directory_path() / "senticomp_vocab.txt";
  v.save(path.string());
  Vocabulary w = Vocabulary::from_file(path.string());
  CHECK(w.size() == v.size());
  CHECK(w.id_of("movie") == v.id_of("movie"));
  CHECK(w.id_of("[MASK]") == Vocabulary::kMask);
  std::filesystem::remove(path);
}

TEST_CASE("encode is deterministic and length-checked") {
  Vocabulary v = toy_vocab();
  EncoderConfig cfg = small_config(v);
  Rng rng(5);
  ParamStore params;
  Encoder enc(cfg, params, rng);
  Tokenized t = tokenize(v, {"Good", "movie"});

  Graph g1, g2;
  Tensor h1 = enc.encode(g1, t.ids);
  Tensor h2 = enc.encode(g2, t.ids);
  CHECK(h1.values() == h2.values());
  CHECK(h1.shape() == Shape{t.ids.size(), cfg.model_dim});

  std::vector<int> too_long(cfg.max_len + 1, Vocabulary::kUnk);
  Graph g3;
  CHECK_THROWS_AS(enc.encode(g3, too_long), LengthError);
}

TEST_CASE("permuting input tokens changes both positions") {
  Vocabulary v = toy_vocab();
  EncoderConfig cfg = small_config(v);
  Rng rng(6);
  ParamStore params;
  Encoder enc(cfg, params, rng);
  Tokenized ab = tokenize(v, {"Good", "movie"});
  Tokenized ba = tokenize(v, {"movie", "Good"});
  Graph g1, g2;
  Tensor h1 = enc.encode(g1, ab.ids);
  Tensor h2 = enc.encode(g2, ba.ids);
  std::size_t d = cfg.model_dim;
  auto row_differs = [&](std::size_t r) {
    for (std::size_t j = 0; j < d; ++j)
      if (h1.at(r * d + j) != h2.at(r * d + j)) return true;
    return false;
  };
  CHECK(row_differs(1));
  CHECK(row_differs(2));
}

TEST_CASE("a sentence's representation is independent of batch order") {
  // Encoding is per-sentence; verify no hidden cross-call state by encoding
  // the same sentence before and after other sentences.
  Vocabulary v = toy_vocab();
  EncoderConfig cfg = small_config(v);
  Rng rng(7);
  ParamStore params;
  Encoder enc(cfg, params, rng);
  Tokenized a = tokenize(v, {"Good", "movie"});
  Tokenized b = tokenize(v, {"really", "dull"});
  Graph g1;
  Tensor first = enc.encode(g1, a.ids);
  Graph g2, g3;
  enc.encode(g2, b.ids);
  Tensor again = enc.encode(g3, a.ids);
  CHECK(first.values() == again.values());
}

TEST_CASE("embedding gradients pass finite differences") {
  Vocabulary v = toy_vocab();
  EncoderConfig cfg = small_config(v);
  cfg.layers = 1;
  cfg.model_dim = 8;
  cfg.ffn_dim = 16;
  cfg.heads = 2;
  Rng rng(8);
  ParamStore params;
  Encoder enc(cfg, params, rng);
  Tokenized t = tokenize(v, {"Good", "movie"});
  Rng ro(9);
  Tensor readout(
      {t.ids.size(), cfg.model_dim});
  for (auto& x : readout.values()) x = ro.uniform(-1, 1);
  auto f = [&](Graph& g) {
    return g.sum(g.mul(enc.encode(g, t.ids), readout));
  };
  auto rep = finite_difference_check(
      f, {{"embed.tok", params.get("embed.tok")},
          {"embed.pos", params.get("embed.pos")},
          {"attn.wq", params.get("enc.0.attn.wq")}},
      1e-5);
  CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("masking: degenerate policies behave exactly") {
  Vocabulary v = toy_vocab();
  Tokenized t = tokenize(v, {"Good", "movie", "really", "dull"});
  std::vector<std::string> words = {"Good", "movie", "really", "dull"};

  MaskingPolicy none;
  none.opinion_word_prob = 0.0;
  none.other_word_prob = 0.0;
  Rng r1(10);
  MaskingResult res = apply_masking(t, words, none, v, r1);
  CHECK(res.targets.empty());
  CHECK(res.corrupted_ids == t.ids);

  MaskingPolicy all;
  all.opinion_word_prob = 1.0;
  all.other_word_prob = 1.0;
  all.mask_split = 1.0;
  all.random_split = 0.0;
  all.keep_split = 0.0;
  Rng r2(11);
  MaskingResult res2 = apply_masking(t, words, all, v, r2);
  CHECK(res2.targets.size() == t.ids.size() - 2);  // every non-special position
  for (const auto& tgt : res2.targets)
    CHECK(res2.corrupted_ids[tgt.position] == Vocabulary::kMask);
  // specials untouched
  CHECK(res2.corrupted_ids.front() == Vocabulary::kCls);
  CHECK(res2.corrupted_ids.back() == Vocabulary::kSep);
}

TEST_CASE("masking: invalid policies are config errors") {
  Vocabulary v = toy_vocab();
  Tokenized t = tokenize(v, {"Good"});
  MaskingPolicy bad;
  bad.mask_split = 0.5;
  bad.random_split = 0.1;
  bad.keep_split = 0.1;
  Rng r(12);
  CHECK_THROWS_AS(apply_masking(t, {"Good"}, bad, v, r), ConfigError);
  MaskingPolicy bad2;
  bad2.opinion_word_prob = 1.5;
  CHECK_THROWS_AS(apply_masking(t, {"Good"}, bad2, v, r), ConfigError);
}

TEST_CASE("masking: empirical rates near policy probabilities") {
  Rng rng(73);
  std::vector<PhraseTree> corpus;
  for (int i = 0; i < 400; ++i) corpus.push_back(random_tree(rng));
  Vocabulary v = Vocabulary::build(corpus);
  MaskingPolicy policy;
  policy.opinion_lexicon = {"good", "great", "funny", "dull", "bad", "bland",
                            "sharp", "warm", "flat"};
  Rng mask_rng(74);
  std::size_t opinion_total = 0, opinion_selected = 0;
  std::size_t other_total = 0, other_selected = 0;
  for (const auto& tree : corpus) {
    Tokenized t = tokenize(v, tree.tokens);
    MaskingResult res = apply_masking(t, tree.tokens, policy, v, mask_rng);
    std::set<std::size_t> selected_positions;
    for (const auto& tgt : res.targets) selected_positions.insert(tgt.position);
    for (std::size_t i = 0; i < tree.tokens.size(); ++i) {
      bool op = policy.is_opinion_word(tree.tokens[i]);
      bool sel = selected_positions.count(t.alignment[i].first) != 0;
      (op ? opinion_total : other_total) += 1;
      if (sel) (op ? opinion_selected : other_selected) += 1;
    }
  }
  REQUIRE(opinion_total > 500);
  REQUIRE(other_total > 1500);
  double op_rate = static_cast<double>(opinion_selected) / opinion_total;
  double ot_rate = static_cast<double>(other_selected) / other_total;
  CHECK(op_rate == doctest::Approx(0.20).epsilon(0.15));
  CHECK(ot_rate == doctest::Approx(0.15).epsilon(0.15));
}

TEST_CASE("mlm overfit: 50 distinct sentences reach loss below 0.1") {
  // Sentences carry mostly sentence-unique tokens, so the visible context
  // identifies every masked word once the model memorizes the corpus.
  std::vector<PhraseTree> corpus;
  {
    Rng rng(5007);
    const char* glue[4] = {"the", "is", "and", "."};
    for (int s = 0; s < 50; ++s) {
      std::vector<std::string> words;
      for (int j = 0; j < 8; ++j)
        words.push_back("tok" + std::to_string(s) + "x" + std::to_string(j));
      for (int j = 0; j < 2; ++j) words.push_back(glue[(s + j) % 4]);
      rng.shuffle(words);
      TreeGenOptions opt;
      opt.min_tokens = opt.max_tokens = static_cast<int>(words.size());
      PhraseTree t = random_tree(rng, opt);
      t.tokens = words;
      corpus.push_back(std::move(t));
    }
  }
  ModelConfig mc;
  mc.encoder.layers = 2;
  mc.encoder.heads = 4;
  mc.encoder.model_dim = 64;
  mc.encoder.ffn_dim = 256;
  mc.encoder.max_len = 64;
  mc.encoder.dropout = 0.0;
  SentiModel model(mc, Vocabulary::build(corpus), 3);
  MaskingPolicy policy;
  policy.opinion_word_prob = 0.25;
  policy.other_word_prob = 0.25;
  TrainConfig cfg;
  cfg.epochs = 240;
  cfg.batch_size = 16;
  cfg.seed = 3;
  cfg.learning_rate = 1.5e-3;
  cfg.mlm_weight = 1.0;
  cfg.phrase_weight = 0.0;
  TrainResult res = train(model, corpus, policy, cfg);
  double best_late = 1e9;
  for (std::size_t i = res.log.size() - 30; i < res.log.size(); ++i)
    best_late = std::min(best_late, res.log[i].mlm_loss);
  CHECK(best_late < 0.1);
}

TEST_CASE("mlm loss: zero targets, uniform-logit magnitude, trains signal") {
  Vocabulary v = toy_vocab();
  EncoderConfig cfg = small_config(v);
  Rng rng(14);
  ParamStore params;
  Encoder enc(cfg, params, rng);
  Tokenized t = tokenize(v, {"Good", "movie", "really", "dull"});

  Graph g;
  Tensor h = enc.encode(g, t.ids);
  Tensor zero = enc.mlm_loss(g, h, {});
  CHECK(zero.item() == 0.0);

  // untrained logits are near-uniform: loss within 10% of ln V
  std::vector<MlmTarget> targets;
  for (std::size_t p = 1; p + 1 < t.ids.size(); ++p)
    targets.push_back({p, t.ids[p]});
  Tensor loss = enc.mlm_loss(g, h, targets);
  double lnv = std::log(static_cast<double>(v.size()));
  CHECK(loss.item() == doctest::Approx(lnv).epsilon(0.10));

  // gradient flows into the tied embedding from both uses
  g.backward(loss);
  const auto* ge = g.grad(params.get("embed.tok"));
  REQUIRE(ge != nullptr);
  double norm = 0.0;
  for (double x : *ge) norm += x * x;
  CHECK(norm > 0.0);
}
