#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "senticomp/tensor.hpp"
#include "senticomp/treebank.hpp"
#include "senticomp/vocab.hpp"

namespace senticomp {

/// Two-level attention network for semantic composition. Layer 1 (attention
/// to tokens) builds the initial phrase vector v from the contextualized
/// rows the phrase spans; layer 2 (attention to children) refines it into p
/// from (v_self, v_lson, v_rson). The two layers hold disjoint parameters.
class Composition {
 public:
  enum class Layer { Tokens, Children };

  /// Fixed temperature of the bilinear scoring function.
  static constexpr double kAlpha = 4.0;

  Composition(std::size_t model_dim, ParamStore& params, Rng& rng);
  Composition(std::size_t model_dim, const ParamStore& params);

  std::size_t model_dim() const { return dim_; }

  /// tanh((1/alpha) selu((W1 a)^T W3 selu(W2 b))); strictly inside (-1, 1).
  Tensor attention_score(Graph& g, const Tensor& a, const Tensor& b,
                         Layer layer) const;

  struct SpanAttend {
    Tensor value;    // v, length d
    Tensor weights;  // a over the span rows, sums to 1
    Tensor scores;   // raw bilinear scores t, each in (-1, 1)
  };
  /// Attention to tokens over the rows of h_span: query = row mean, softmax
  /// of scores, weighted sum, then concat(o, q) -> linear -> selu.
  SpanAttend attend_to_tokens(Graph& g, const Tensor& h_span) const;

  struct ChildAttend {
    Tensor value;    // p, length d
    Tensor weights;  // {r_lson, r_rson, r_self}, sums to 1
    Tensor scores;   // {c_lson, c_rson, c_self}
  };
  /// Attention to children plus the layer-2 feed-forward:
  /// concat(f, v_self) -> linear -> selu -> layer norm -> linear -> gelu.
  ChildAttend attend_to_children(Graph& g, const Tensor& v_self,
                                 const Tensor& v_lson,
                                 const Tensor& v_rson) const;

  /// Subtoken attention for a token-node child: layer-2 scoring with the
  /// phrase's v_self as query over the token's subtoken rows.
  SpanAttend leaf_representation(Graph& g, const Tensor& h_subtokens,
                                 const Tensor& v_query) const;

 private:
  struct ScoreParams {
    Tensor w1, w2, w3;
  };
  Tensor score_from_query(Graph& g, const Tensor& w3t_y, const Tensor& b,
                          const ScoreParams& sp) const;

  std::size_t dim_;
  ScoreParams l1_score_;
  Tensor l1_ffn_w_, l1_ffn_b_;
  ScoreParams l2_score_;
  Tensor l2_ffn_w1_, l2_ffn_b1_, l2_ln_gain_, l2_ln_bias_, l2_ffn_w2_,
      l2_ffn_b2_;
};

/// Per-node composition results for one sentence. Indexed by node id.
struct TreeStates {
  struct Node {
    Tensor v;              // phrases only
    Tensor p;              // phrases only
    Tensor rep;            // head input: p for phrases, subtoken blend for leaves
    Tensor token_weights;  // a over the node's subtoken rows
    Tensor token_scores;
    Tensor child_weights;  // {r_lson, r_rson, r_self} (phrases)
    Tensor child_scores;
    std::size_t sub_first = 0;  // subtoken row range the node spans
    std::size_t sub_last = 0;
    bool has_v = false, has_p = false, has_rep = false;
    bool has_token_weights = false, has_child_weights = false;
  };
  std::vector<Node> nodes;
};

/// Bottom-up composition over the whole tree in one post-order traversal:
/// children's v before each parent's p; leaf children handled through
/// leaf_representation with the parent's v as query.
TreeStates forward_tree(Graph& g, const PhraseTree& tree, const Tensor& h,
                        const std::vector<TokenRange>& alignment,
                        const Composition& comp);

/// Mean-pooling baseline: every node's rep is the mean of the h rows its
/// span covers. Same shape of output, no attention state.
TreeStates mean_pool_tree(Graph& g, const PhraseTree& tree, const Tensor& h,
                          const std::vector<TokenRange>& alignment);

}  // namespace senticomp
