#pragma once

// Independent oracles for the derived expected values in the test suites.
// Everything here is written against first principles (plain loops, span
// arithmetic, scalar math) and must stay decoupled from the library paths it
// checks.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "senticomp/treebank.hpp"

namespace senticomp::testing {

// -- minimal recursive s-expression reader (parser oracle) ---------------------
//
// Returns (st, en) spans in preorder by walking the raw string, counting
// leaves as it goes. Shares nothing with PtbReader.

struct SpanOracle {
  std::vector<std::pair<int, int>> spans;
  int leaf_count = 0;

  static SpanOracle read(const std::string& s) {
    SpanOracle o;
    std::size_t pos = 0;
    o.node(s, pos);
    return o;
  }

 private:
  std::pair<int, int> node(const std::string& s, std::size_t& pos) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
    ++pos;  // '('
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;  // label
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
    std::size_t my_slot = spans.size();
    spans.emplace_back(0, 0);
    std::pair<int, int> span;
    if (s[pos] == '(') {
      auto left = node(s, pos);
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
        ++pos;
      auto right = node(s, pos);
      span = {left.first, right.second};
    } else {
      while (pos < s.size() && s[pos] != ')' &&
             !std::isspace(static_cast<unsigned char>(s[pos])))
        ++pos;
      ++leaf_count;
      span = {leaf_count, leaf_count};
    }
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
    ++pos;  // ')'
    spans[my_slot] = span;
    return span;
  }
};

// -- treebank oracles ------------------------------------------------------------

inline int oracle_local_difficulty(const PhraseTree& t, int id) {
  const auto& n = t.node(id);
  int d = 0;
  for (int c : {n.left, n.right})
    if (t.node(c).label != n.label) ++d;
  return d;
}

/// Edge-enumeration route: one indicator per (parent, child) edge.
inline int oracle_global_difficulty(const PhraseTree& t,
                                    bool include_leaf_edges) {
  int total = 0;
  for (const auto& parent : t.nodes) {
    if (parent.leaf) continue;
    for (int c : {parent.left, parent.right}) {
      if (t.node(c).leaf && !include_leaf_edges) continue;
      total += t.node(c).label != parent.label ? 1 : 0;
    }
  }
  return total;
}

inline int oracle_count_negations(const PhraseTree& t) {
  static const std::unordered_set<std::string> lex = {"no", "n't", "not"};
  int count = 0;
  for (auto tok : t.tokens) {
    std::transform(tok.begin(), tok.end(), tok.begin(), [](unsigned char c) {
      return static_cast<char>(std::tolower(c));
    });
    count += lex.count(tok) ? 1 : 0;
  }
  return count;
}

/// Span-arithmetic route over all (parent, x, y) node triples; independent of
/// the structural child-shape matching in the library.
inline std::vector<std::tuple<int, int, int>> oracle_but_triplets(
    const PhraseTree& t) {
  std::vector<std::tuple<int, int, int>> out;
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
      return static_cast<char>(std::tolower(c));
    });
    return s;
  };
  for (const auto& p : t.nodes) {
    if (p.leaf) continue;
    for (const auto& x : t.nodes) {
      if (x.leaf) continue;
      for (const auto& y : t.nodes) {
        if (y.leaf) continue;
        if (x.span_en + 2 != y.span_st) continue;
        if (p.span_st != x.span_st || p.span_en != y.span_en) continue;
        if (lower(t.token(x.span_en + 1)) != "but") continue;
        if (x.label == y.label) continue;
        out.emplace_back(p.id, x.id, y.id);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::array<std::int64_t, 3> oracle_local_bins(
    const std::vector<PhraseTree>& trees) {
  std::array<std::int64_t, 3> bins{};
  for (const auto& t : trees)
    for (const auto& n : t.nodes)
      if (!n.leaf) ++bins[static_cast<std::size_t>(oracle_local_difficulty(t, n.id))];
  return bins;
}

// -- scalar-math oracle for the attention pipeline --------------------------------
//
// Plain double-vector arithmetic re-deriving the composition formulas with no
// tensor machinery.

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;  // row-major rows

inline Vec matvec(const Mat& m, const Vec& x) {
  Vec y(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += m[i][j] * x[j];
  return y;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double selu_scalar(double x) {
  const double lambda = 1.0507009873554804934193349852946;
  const double alpha = 1.6732632423543772848170429916717;
  return x > 0.0 ? lambda * x : lambda * alpha * (std::exp(x) - 1.0);
}

inline Vec selu_vec(Vec v) {
  for (auto& x : v) x = selu_scalar(x);
  return v;
}

inline double gelu_scalar(double x) {
  return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
}

inline Vec softmax_vec(const Vec& v) {
  double mx = *std::max_element(v.begin(), v.end());
  Vec out(v.size());
  double z = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    z += out[i];
  }
  for (auto& x : out) x /= z;
  return out;
}

inline Vec layer_norm_vec(const Vec& x, const Vec& gain, const Vec& bias) {
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mu) * (v - mu);
  var /= static_cast<double>(x.size());
  double istd = 1.0 / std::sqrt(var + 1e-5);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = gain[i] * (x[i] - mu) * istd + bias[i];
  return out;
}

/// tanh((1/4) selu((W1 a)^T W3 selu(W2 b)))
inline double oracle_attention_score(const Vec& a, const Vec& b, const Mat& w1,
                                     const Mat& w2, const Mat& w3) {
  Vec ya = matvec(w1, a);
  Vec zb = selu_vec(matvec(w2, b));
  Vec w3zb = matvec(w3, zb);
  return std::tanh(0.25 * selu_scalar(dot(ya, w3zb)));
}

struct OracleLayer1 {
  Mat w1, w2, w3;
  Mat ffn_w;   // d x 2d
  Vec ffn_b;   // d
};

struct OracleLayer2 {
  Mat w1, w2, w3;
  Mat ffn_w1;  // d x 2d
  Vec ffn_b1;
  Vec ln_gain, ln_bias;
  Mat ffn_w2;  // d x d
  Vec ffn_b2;
};

struct OracleAttendResult {
  Vec value;
  Vec weights;
};

/// Token attention: query = span mean, bilinear scores, softmax, weighted
/// sum, then concat(o, q) through linear + selu.
inline OracleAttendResult oracle_attend_to_tokens(const Mat& h_span,
                                                  const OracleLayer1& l) {
  std::size_t n = h_span.size(), d = h_span[0].size();
  Vec q(d, 0.0);
  for (const auto& row : h_span)
    for (std::size_t j = 0; j < d; ++j) q[j] += row[j];
  for (auto& x : q) x /= static_cast<double>(n);
  Vec scores(n);
  for (std::size_t j = 0; j < n; ++j)
    scores[j] = oracle_attention_score(q, h_span[j], l.w1, l.w2, l.w3);
  Vec a = softmax_vec(scores);
  Vec o(d, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < d; ++k) o[k] += a[j] * h_span[j][k];
  Vec cat = o;
  cat.insert(cat.end(), q.begin(), q.end());
  Vec lin = matvec(l.ffn_w, cat);
  for (std::size_t i = 0; i < lin.size(); ++i) lin[i] += l.ffn_b[i];
  return {selu_vec(lin), a};
}

/// Child attention + the layer-2 feed-forward (linear, selu, layer norm, linear, gelu).
inline OracleAttendResult oracle_attend_to_children(const Vec& v_self,
                                                    const Vec& v_l,
                                                    const Vec& v_r,
                                                    const OracleLayer2& l) {
  Vec scores = {oracle_attention_score(v_self, v_l, l.w1, l.w2, l.w3),
                oracle_attention_score(v_self, v_r, l.w1, l.w2, l.w3),
                oracle_attention_score(v_self, v_self, l.w1, l.w2, l.w3)};
  Vec r = softmax_vec(scores);
  std::size_t d = v_self.size();
  Vec f(d, 0.0);
  for (std::size_t j = 0; j < d; ++j)
    f[j] = r[0] * v_l[j] + r[1] * v_r[j] + r[2] * v_self[j];
  Vec cat = f;
  cat.insert(cat.end(), v_self.begin(), v_self.end());
  Vec z = matvec(l.ffn_w1, cat);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += l.ffn_b1[i];
  z = selu_vec(z);
  z = layer_norm_vec(z, l.ln_gain, l.ln_bias);
  Vec p = matvec(l.ffn_w2, z);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += l.ffn_b2[i];
  for (auto& x : p) x = gelu_scalar(x);
  return {p, r};
}

/// Subtoken attention for leaf children: layer-2 scores with the phrase's
/// v_self as query, softmax, weighted sum.
inline OracleAttendResult oracle_leaf_representation(const Mat& h_sub,
                                                     const Vec& v_query,
                                                     const OracleLayer2& l) {
  std::size_t n = h_sub.size(), d = h_sub[0].size();
  Vec scores(n);
  for (std::size_t j = 0; j < n; ++j)
    scores[j] = oracle_attention_score(v_query, h_sub[j], l.w1, l.w2, l.w3);
  Vec a = softmax_vec(scores);
  Vec out(d, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < d; ++k) out[k] += a[j] * h_sub[j][k];
  return {out, a};
}

}  // namespace senticomp::testing
