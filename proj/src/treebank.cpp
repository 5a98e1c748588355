#include "senticomp/treebank.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "senticomp/rng.hpp"

namespace senticomp {

int class_count(Granularity g) {
  switch (g) {
    case Granularity::Five: return 5;
    case Granularity::Three: return 3;
    case Granularity::Two: return 2;
  }
  return 0;
}

const char* granularity_name(Granularity g) {
  switch (g) {
    case Granularity::Five: return "5";
    case Granularity::Three: return "3";
    case Granularity::Two: return "2";
  }
  return "?";
}

std::vector<int> PhraseTree::nonleaf_ids() const {
  std::vector<int> out;
  for (const auto& n : nodes)
    if (!n.leaf) out.push_back(n.id);
  return out;
}

// -- parser -------------------------------------------------------------------

namespace {

class PtbReader {
 public:
  explicit PtbReader(const std::string& text) : s_(text) {}

  PhraseTree parse() {
    skip_ws();
    if (pos_ >= s_.size())
      throw ParseError("empty input", pos_);
    int root = parse_node();
    skip_ws();
    if (pos_ != s_.size())
      throw ParseError("trailing characters after tree", pos_);
    tree_.root_id = root;
    assign_spans(root);
    return std::move(tree_);
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }

  int parse_node() {
    if (pos_ >= s_.size() || s_[pos_] != '(')
      throw ParseError("expected '('", pos_);
    ++pos_;
    skip_ws();
    std::size_t label_start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    if (pos_ == label_start)
      throw ParseError("expected integer label", pos_);
    int label = std::stoi(s_.substr(label_start, pos_ - label_start));
    if (label > 4)
      throw LabelError("label " + std::to_string(label) +
                       " outside 0-4 at byte " + std::to_string(label_start));

    int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[id].id = id;
    tree_.nodes[id].label = label;

    skip_ws();
    if (pos_ >= s_.size())
      throw ParseError("unexpected end of input", pos_);

    if (s_[pos_] == '(') {
      int left = parse_node();
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ')')
        throw ArityError("node with a single child at byte " +
                         std::to_string(pos_));
      int right = parse_node();
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] != ')')
        throw ArityError("node with more than two children at byte " +
                         std::to_string(pos_));
      tree_.nodes[id].left = left;
      tree_.nodes[id].right = right;
    } else if (s_[pos_] == ')') {
      throw ParseError("node without content", pos_);
    } else {
      std::size_t tok_start = pos_;
      while (pos_ < s_.size() && s_[pos_] != '(' && s_[pos_] != ')' &&
             !std::isspace(static_cast<unsigned char>(s_[pos_])))
        ++pos_;
      std::string word = s_.substr(tok_start, pos_ - tok_start);
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] != ')')
        throw ArityError("leaf with extra content at byte " +
                         std::to_string(pos_));
      tree_.nodes[id].leaf = true;
      tree_.tokens.push_back(word);
      tree_.nodes[id].span_st = tree_.nodes[id].span_en =
          static_cast<int>(tree_.tokens.size());
    }
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != ')')
      throw ParseError("expected ')'", pos_);
    ++pos_;
    return id;
  }

  void assign_spans(int id) {
    auto& n = tree_.nodes[id];
    if (n.leaf) return;
    assign_spans(n.left);
    assign_spans(n.right);
    n.span_st = tree_.nodes[n.left].span_st;
    n.span_en = tree_.nodes[n.right].span_en;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  PhraseTree tree_;
};

}  // namespace

PhraseTree parse_ptb(const std::string& text) {
  return PtbReader(text).parse();
}

std::vector<PhraseTree> load_treebank(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open treebank: " + path);
  std::vector<PhraseTree> trees;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    bool blank = std::all_of(line.begin(), line.end(), [](unsigned char c) {
      return std::isspace(c);
    });
    if (blank) continue;
    try {
      trees.push_back(parse_ptb(line));
    } catch (const Error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(),
                       line_no);
    }
  }
  return trees;
}

namespace {

void serialize_node(const PhraseTree& t, int id, std::string& out) {
  const auto& n = t.node(id);
  out += '(';
  out += std::to_string(n.label);
  out += ' ';
  if (n.leaf) {
    out += t.token(n.span_st);
  } else {
    serialize_node(t, n.left, out);
    out += ' ';
    serialize_node(t, n.right, out);
  }
  out += ')';
}

}  // namespace

std::string serialize(const PhraseTree& tree) {
  std::string out;
  serialize_node(tree, tree.root_id, out);
  return out;
}

bool trees_identical(const PhraseTree& a, const PhraseTree& b) {
  if (a.tokens != b.tokens || a.nodes.size() != b.nodes.size()) return false;
  // Preorder ids make structural equality a direct node-for-node compare.
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const auto& x = a.nodes[i];
    const auto& y = b.nodes[i];
    if (x.label != y.label || x.leaf != y.leaf || x.left != y.left ||
        x.right != y.right || x.span_st != y.span_st || x.span_en != y.span_en)
      return false;
  }
  return a.root_id == b.root_id;
}

// -- label coarsening ----------------------------------------------------------

namespace {

enum class Polarity { Negative, Neutral, Positive };

Polarity polarity_of(int label, Granularity g, bool excluded) {
  switch (g) {
    case Granularity::Five:
      return label <= 1 ? Polarity::Negative
                        : (label == 2 ? Polarity::Neutral : Polarity::Positive);
    case Granularity::Three:
      return label == 0 ? Polarity::Negative
                        : (label == 1 ? Polarity::Neutral : Polarity::Positive);
    case Granularity::Two:
      return excluded ? Polarity::Neutral
                      : (label == 0 ? Polarity::Negative : Polarity::Positive);
  }
  return Polarity::Neutral;
}

}  // namespace

PhraseTree coarsen_labels(const PhraseTree& tree, Granularity target) {
  PhraseTree out = tree;
  out.granularity = target;
  for (auto& n : out.nodes) {
    Polarity p = polarity_of(n.label, tree.granularity, n.loss_excluded);
    switch (target) {
      case Granularity::Five:
        // Identity on 5-class input; coarser labels cannot be refined.
        if (tree.granularity != Granularity::Five)
          throw DomainError("cannot refine labels back to 5-class");
        break;
      case Granularity::Three:
        n.label = p == Polarity::Negative ? 0 : (p == Polarity::Neutral ? 1 : 2);
        n.loss_excluded = false;
        break;
      case Granularity::Two:
        if (p == Polarity::Neutral) {
          n.label = 0;
          n.loss_excluded = true;
        } else {
          n.label = p == Polarity::Negative ? 0 : 1;
          n.loss_excluded = false;
        }
        break;
    }
  }
  return out;
}

// -- difficulty ----------------------------------------------------------------

int local_difficulty(const PhraseTree& tree, int node_id) {
  const auto& n = tree.node(node_id);
  if (n.leaf)
    throw DomainError("local_difficulty of leaf node " +
                      std::to_string(node_id));
  int switches = 0;
  if (tree.node(n.left).label != n.label) ++switches;
  if (tree.node(n.right).label != n.label) ++switches;
  return switches;
}

int global_difficulty(const PhraseTree& tree, bool include_leaf_edges) {
  int total = 0;
  for (const auto& n : tree.nodes) {
    if (n.leaf) continue;
    for (int child : {n.left, n.right}) {
      if (!include_leaf_edges && tree.node(child).leaf) continue;
      if (tree.node(child).label != n.label) ++total;
    }
  }
  return total;
}

// -- negation ------------------------------------------------------------------

const std::unordered_set<std::string> kDefaultNegationLexicon = {"no", "n't",
                                                                 "not"};

namespace {
std::string lowercase(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}
}  // namespace

int count_negations(const PhraseTree& tree,
                    const std::unordered_set<std::string>& lexicon) {
  int count = 0;
  for (const auto& tok : tree.tokens)
    if (lexicon.count(lowercase(tok))) ++count;
  return count;
}

// -- contrastive triple-lets -----------------------------------------------------

std::vector<ButTriplet> extract_but_triplets(const PhraseTree& tree) {
  std::vector<ButTriplet> out;
  auto is_but_leaf = [&](int id) {
    const auto& n = tree.node(id);
    return n.leaf && lowercase(tree.token(n.span_st)) == "but";
  };
  for (const auto& p : tree.nodes) {
    if (p.leaf) continue;
    const auto& l = tree.node(p.left);
    const auto& r = tree.node(p.right);
    // (X (but Y)): "but" is the sole token between the X and Y spans.
    if (!l.leaf && !r.leaf && is_but_leaf(r.left) && !tree.node(r.right).leaf) {
      int x = p.left, y = r.right;
      if (tree.node(x).label != tree.node(y).label)
        out.push_back({p.id, x, y});
    }
    // ((X but) Y)
    if (!l.leaf && !r.leaf && is_but_leaf(l.right) && !tree.node(l.left).leaf) {
      int x = l.left, y = p.right;
      if (tree.node(x).label != tree.node(y).label)
        out.push_back({p.id, x, y});
    }
  }
  return out;
}

// -- corpus statistics -----------------------------------------------------------

namespace {
int global_bin_index(int g) {
  if (g <= 4) return 0;
  if (g <= 9) return 1;
  if (g <= 14) return 2;
  if (g <= 19) return 3;
  return 4;  // 20-23 in SST; absorbs anything larger
}
}  // namespace

TreebankStats compute_stats(const std::vector<PhraseTree>& trees,
                            bool include_leaf_edges) {
  TreebankStats st;
  st.total_sentences = static_cast<std::int64_t>(trees.size());
  for (const auto& t : trees) {
    for (const auto& n : t.nodes) {
      if (n.leaf) continue;
      ++st.total_nonleaf_nodes;
      ++st.local_bins[static_cast<std::size_t>(local_difficulty(t, n.id))];
    }
    ++st.global_bins[static_cast<std::size_t>(
        global_bin_index(global_difficulty(t, include_leaf_edges)))];
    int neg = count_negations(t);
    ++st.negation_bins[static_cast<std::size_t>(neg >= 2 ? 2 : neg)];
  }
  return st;
}

std::string TreebankStats::to_json() const {
  nlohmann::json j;
  j["local_difficulty"] = {{"0", local_bins[0]},
                           {"1", local_bins[1]},
                           {"2", local_bins[2]}};
  j["global_difficulty"] = {{"0-4", global_bins[0]},
                            {"5-9", global_bins[1]},
                            {"10-14", global_bins[2]},
                            {"15-19", global_bins[3]},
                            {"20-23", global_bins[4]}};
  j["negation"] = {{"0", negation_bins[0]},
                   {"1", negation_bins[1]},
                   {"2+", negation_bins[2]}};
  j["total_nonleaf_nodes"] = total_nonleaf_nodes;
  j["total_sentences"] = total_sentences;
  return j.dump(2);
}

// -- phrase-label subsampling -----------------------------------------------------

std::vector<std::vector<bool>> subsample_phrase_labels(
    const std::vector<PhraseTree>& trees, double fraction,
    std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0)
    throw DomainError("label fraction must lie in [0,1]");
  std::vector<std::pair<std::size_t, int>> pool;  // (tree index, node id)
  for (std::size_t t = 0; t < trees.size(); ++t)
    for (const auto& n : trees[t].nodes)
      if (!n.leaf) pool.emplace_back(t, n.id);

  Rng rng(seed);
  rng.shuffle(pool);
  auto kept = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(pool.size())));

  std::vector<std::vector<bool>> masks;
  masks.reserve(trees.size());
  for (const auto& t : trees) masks.emplace_back(t.nodes.size(), false);
  for (std::size_t i = 0; i < kept; ++i)
    masks[pool[i].first][static_cast<std::size_t>(pool[i].second)] = true;
  return masks;
}

}  // namespace senticomp
