#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "senticomp/error.hpp"

namespace senticomp {

enum class Granularity { Five, Three, Two };

int class_count(Granularity g);
const char* granularity_name(Granularity g);

/// Sentiment class index under a given granularity.
/// Five: 0..4 (very negative .. very positive).
/// Three: 0 negative, 1 neutral, 2 positive.
/// Two: 0 negative, 1 positive (neutral nodes are flagged excluded).
struct SentimentLabel {
  int value = 0;
  Granularity granularity = Granularity::Five;
};

struct PhraseNode {
  int id = -1;
  int span_st = 0;  // 1-based inclusive token span
  int span_en = 0;
  int label = 0;
  int left = -1;   // child node ids; -1 on leaves
  int right = -1;
  bool leaf = false;
  /// Neutral nodes under 2-class stay in the tree but leave loss/accuracy.
  bool loss_excluded = false;
};

/// Binary constituency tree over one sentence. Node ids are indices into
/// nodes (preorder, root first). Token indices are 1-based.
struct PhraseTree {
  std::vector<PhraseNode> nodes;
  int root_id = 0;
  std::vector<std::string> tokens;
  Granularity granularity = Granularity::Five;

  const PhraseNode& node(int id) const { return nodes.at(id); }
  const std::string& token(int i) const { return tokens.at(i - 1); }
  int token_count() const { return static_cast<int>(tokens.size()); }
  SentimentLabel label_of(int id) const {
    return {nodes.at(id).label, granularity};
  }
  std::vector<int> nonleaf_ids() const;
};

struct ButTriplet {
  int parent;  // the `X but Y` node
  int x;
  int y;
};

struct TreebankStats {
  std::array<std::int64_t, 3> local_bins{};     // difficulty 0 / 1 / 2
  std::array<std::int64_t, 5> global_bins{};    // 0-4 / 5-9 / 10-14 / 15-19 / 20-23
  std::array<std::int64_t, 3> negation_bins{};  // 0 / 1 / 2+
  std::int64_t total_nonleaf_nodes = 0;
  std::int64_t total_sentences = 0;

  std::string to_json() const;
};

/// Parses one SST-style s-expression: `(label ...)` with integer labels 0-4
/// on every node and surface tokens at leaves. Spans are assigned by
/// left-to-right leaf enumeration.
PhraseTree parse_ptb(const std::string& text);

/// One tree per line, UTF-8. Blank lines are skipped. Parse failures carry
/// the 1-based line number in the message.
std::vector<PhraseTree> load_treebank(const std::string& path);

std::string serialize(const PhraseTree& tree);

bool trees_identical(const PhraseTree& a, const PhraseTree& b);

PhraseTree coarsen_labels(const PhraseTree& tree, Granularity target);

/// Number of children whose label differs from the node's (0..2).
/// The node must be non-leaf; leaf children participate.
int local_difficulty(const PhraseTree& tree, int node_id);

/// Total sentiment switches over the tree. With include_leaf_edges=false
/// only phrase-phrase edges count.
int global_difficulty(const PhraseTree& tree, bool include_leaf_edges = true);

extern const std::unordered_set<std::string> kDefaultNegationLexicon;

/// Case-insensitive surface count of lexicon tokens in the sentence.
int count_negations(const PhraseTree& tree,
                    const std::unordered_set<std::string>& lexicon =
                        kDefaultNegationLexicon);

/// Every (parent, X, Y) where parent spans exactly `X but Y`, X and Y are
/// phrases (non-leaf), "but" is the sole token between them, and the gold
/// labels of X and Y differ.
std::vector<ButTriplet> extract_but_triplets(const PhraseTree& tree);

TreebankStats compute_stats(const std::vector<PhraseTree>& trees,
                            bool include_leaf_edges = true);

/// Per-tree node mask marking supervised non-leaf nodes: a uniformly random
/// corpus-global subset of round(fraction * N) phrase nodes keeps
/// supervision. Deterministic given seed.
std::vector<std::vector<bool>> subsample_phrase_labels(
    const std::vector<PhraseTree>& trees, double fraction,
    std::uint64_t seed);

}  // namespace senticomp
