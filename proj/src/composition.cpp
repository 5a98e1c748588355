#include "senticomp/composition.hpp"

namespace senticomp {

Composition::Composition(std::size_t model_dim, ParamStore& params, Rng& rng)
    : dim_(model_dim) {
  const std::size_t d = model_dim;
  l1_score_.w1 = params.create_uniform("comp.l1.w1", {d, d}, d, rng);
  l1_score_.w2 = params.create_uniform("comp.l1.w2", {d, d}, d, rng);
  l1_score_.w3 = params.create_uniform("comp.l1.w3", {d, d}, d, rng);
  l1_ffn_w_ = params.create_uniform("comp.l1.ffn.w", {d, 2 * d}, 2 * d, rng);
  l1_ffn_b_ = params.create_zeros("comp.l1.ffn.b", {d});
  l2_score_.w1 = params.create_uniform("comp.l2.w1", {d, d}, d, rng);
  l2_score_.w2 = params.create_uniform("comp.l2.w2", {d, d}, d, rng);
  l2_score_.w3 = params.create_uniform("comp.l2.w3", {d, d}, d, rng);
  l2_ffn_w1_ = params.create_uniform("comp.l2.ffn.w1", {d, 2 * d}, 2 * d, rng);
  l2_ffn_b1_ = params.create_zeros("comp.l2.ffn.b1", {d});
  l2_ln_gain_ = params.create_ones("comp.l2.ln.gain", {d});
  l2_ln_bias_ = params.create_zeros("comp.l2.ln.bias", {d});
  l2_ffn_w2_ = params.create_uniform("comp.l2.ffn.w2", {d, d}, d, rng);
  l2_ffn_b2_ = params.create_zeros("comp.l2.ffn.b2", {d});
}

Composition::Composition(std::size_t model_dim, const ParamStore& params)
    : dim_(model_dim) {
  l1_score_.w1 = params.get("comp.l1.w1");
  l1_score_.w2 = params.get("comp.l1.w2");
  l1_score_.w3 = params.get("comp.l1.w3");
  l1_ffn_w_ = params.get("comp.l1.ffn.w");
  l1_ffn_b_ = params.get("comp.l1.ffn.b");
  l2_score_.w1 = params.get("comp.l2.w1");
  l2_score_.w2 = params.get("comp.l2.w2");
  l2_score_.w3 = params.get("comp.l2.w3");
  l2_ffn_w1_ = params.get("comp.l2.ffn.w1");
  l2_ffn_b1_ = params.get("comp.l2.ffn.b1");
  l2_ln_gain_ = params.get("comp.l2.ln.gain");
  l2_ln_bias_ = params.get("comp.l2.ln.bias");
  l2_ffn_w2_ = params.get("comp.l2.ffn.w2");
  l2_ffn_b2_ = params.get("comp.l2.ffn.b2");
}

Tensor Composition::score_from_query(Graph& g, const Tensor& w3t_y,
                                     const Tensor& b,
                                     const ScoreParams& sp) const {
  Tensor z = g.selu(g.matmul(sp.w2, b));
  Tensor raw = g.matmul(w3t_y, z);
  return g.tanh(g.scale(g.selu(raw), 1.0 / kAlpha));
}

Tensor Composition::attention_score(Graph& g, const Tensor& a, const Tensor& b,
                                    Layer layer) const {
  const ScoreParams& sp = layer == Layer::Tokens ? l1_score_ : l2_score_;
  if (a.rank() != 1 || a.dim(0) != dim_ || b.rank() != 1 || b.dim(0) != dim_)
    throw ShapeError("attention_score: expected vectors of length " +
                     std::to_string(dim_) + ", got " + shape_str(a.shape()) +
                     " and " + shape_str(b.shape()));
  Tensor y = g.matmul(sp.w1, a);
  Tensor w3t_y = g.matmul(sp.w3, y, true, false);  // W3^T (W1 a)
  return score_from_query(g, w3t_y, b, sp);
}

Composition::SpanAttend Composition::attend_to_tokens(
    Graph& g, const Tensor& h_span) const {
  if (h_span.rank() != 2 || h_span.dim(0) == 0 || h_span.dim(1) != dim_)
    throw DomainError("attend_to_tokens: empty span or wrong width " +
                      shape_str(h_span.shape()));
  Tensor q = g.mean_rows(h_span);
  Tensor y = g.matmul(l1_score_.w1, q);
  Tensor w3t_y = g.matmul(l1_score_.w3, y, true, false);
  // Vectorized per-row scores: selu(W2 h_j) dot (W3^T y)
  Tensor z = g.selu(g.matmul(h_span, l1_score_.w2, false, true));
  Tensor raw = g.matmul(z, w3t_y);
  Tensor scores = g.tanh(g.scale(g.selu(raw), 1.0 / kAlpha));
  Tensor a = g.softmax(scores);
  Tensor o = g.matmul(a, h_span);
  Tensor v = g.selu(
      g.add(g.matmul(l1_ffn_w_, g.concat(o, q)), l1_ffn_b_));
  return {v, a, scores};
}

Composition::ChildAttend Composition::attend_to_children(
    Graph& g, const Tensor& v_self, const Tensor& v_lson,
    const Tensor& v_rson) const {
  for (const Tensor* t : {&v_self, &v_lson, &v_rson})
    if (t->rank() != 1 || t->dim(0) != dim_)
      throw ShapeError("attend_to_children: expected vectors of length " +
                       std::to_string(dim_) + ", got " +
                       shape_str(t->shape()));
  Tensor y = g.matmul(l2_score_.w1, v_self);
  Tensor w3t_y = g.matmul(l2_score_.w3, y, true, false);
  Tensor c_l = score_from_query(g, w3t_y, v_lson, l2_score_);
  Tensor c_r = score_from_query(g, w3t_y, v_rson, l2_score_);
  Tensor c_s = score_from_query(g, w3t_y, v_self, l2_score_);
  Tensor scores = g.stack_scalars({c_l, c_r, c_s});
  Tensor r = g.softmax(scores);
  Tensor f = g.add(g.add(g.mul_scalar(v_lson, g.slice(r, 0, 1)),
                         g.mul_scalar(v_rson, g.slice(r, 1, 1))),
                   g.mul_scalar(v_self, g.slice(r, 2, 1)));
  Tensor z = g.selu(
      g.add(g.matmul(l2_ffn_w1_, g.concat(f, v_self)), l2_ffn_b1_));
  z = g.layer_norm(z, l2_ln_gain_, l2_ln_bias_);
  Tensor p = g.gelu(g.add(g.matmul(l2_ffn_w2_, z), l2_ffn_b2_));
  return {p, r, scores};
}

Composition::SpanAttend Composition::leaf_representation(
    Graph& g, const Tensor& h_subtokens, const Tensor& v_query) const {
  if (h_subtokens.rank() != 2 || h_subtokens.dim(0) == 0 ||
      h_subtokens.dim(1) != dim_)
    throw DomainError("leaf_representation: empty subtoken range " +
                      shape_str(h_subtokens.shape()));
  Tensor y = g.matmul(l2_score_.w1, v_query);
  Tensor w3t_y = g.matmul(l2_score_.w3, y, true, false);
  Tensor z = g.selu(g.matmul(h_subtokens, l2_score_.w2, false, true));
  Tensor raw = g.matmul(z, w3t_y);
  Tensor scores = g.tanh(g.scale(g.selu(raw), 1.0 / kAlpha));
  Tensor a = g.softmax(scores);
  Tensor out = g.matmul(a, h_subtokens);
  return {out, a, scores};
}

// -- tree traversal ---------------------------------------------------------

namespace {

struct SubSpan {
  std::size_t first, last;  // inclusive subtoken rows
};

SubSpan subtoken_span(const PhraseTree& tree, int node_id,
                      const std::vector<TokenRange>& alignment) {
  const auto& n = tree.node(node_id);
  if (n.span_st < 1 ||
      static_cast<std::size_t>(n.span_en) > alignment.size())
    throw AlignmentError(
        "node " + std::to_string(node_id) + " spans tokens " +
        std::to_string(n.span_st) + ".." + std::to_string(n.span_en) +
        " but alignment covers " + std::to_string(alignment.size()));
  return {alignment[static_cast<std::size_t>(n.span_st - 1)].first,
          alignment[static_cast<std::size_t>(n.span_en - 1)].last};
}

Tensor span_rows(Graph& g, const Tensor& h, SubSpan s) {
  std::vector<std::size_t> rows;
  for (std::size_t r = s.first; r <= s.last; ++r) rows.push_back(r);
  return g.gather_rows(h, rows);
}

}  // namespace

TreeStates forward_tree(Graph& g, const PhraseTree& tree, const Tensor& h,
                        const std::vector<TokenRange>& alignment,
                        const Composition& comp) {
  if (static_cast<std::size_t>(tree.token_count()) != alignment.size())
    throw AlignmentError("tree has " + std::to_string(tree.token_count()) +
                         " tokens but alignment covers " +
                         std::to_string(alignment.size()) + " (node " +
                         std::to_string(tree.root_id) + ")");
  TreeStates states;
  states.nodes.resize(tree.nodes.size());

  // Post-order recursion; children's v exist before the parent computes p.
  struct Walker {
    Graph& g;
    const PhraseTree& tree;
    const Tensor& h;
    const std::vector<TokenRange>& alignment;
    const Composition& comp;
    TreeStates& states;

    void visit(int id) {
      const auto& n = tree.node(id);
      auto& st = states.nodes[static_cast<std::size_t>(id)];
      SubSpan span = subtoken_span(tree, id, alignment);
      st.sub_first = span.first;
      st.sub_last = span.last;
      if (n.leaf) return;  // leaf rep needs the parent's v; filled by parent
      visit(n.left);
      visit(n.right);

      auto att = comp.attend_to_tokens(g, span_rows(g, h, span));
      st.v = att.value;
      st.token_weights = att.weights;
      st.token_scores = att.scores;
      st.has_v = true;
      st.has_token_weights = true;

      Tensor v_l = child_vector(n.left, st.v);
      Tensor v_r = child_vector(n.right, st.v);
      auto children = comp.attend_to_children(g, st.v, v_l, v_r);
      st.p = children.value;
      st.child_weights = children.weights;
      st.child_scores = children.scores;
      st.has_p = true;
      st.has_child_weights = true;
      st.rep = st.p;
      st.has_rep = true;
    }

    Tensor child_vector(int child_id, const Tensor& v_query) {
      const auto& c = tree.node(child_id);
      auto& cst = states.nodes[static_cast<std::size_t>(child_id)];
      if (!c.leaf) return cst.v;
      auto leaf = comp.leaf_representation(
          g, span_rows(g, h, {cst.sub_first, cst.sub_last}), v_query);
      cst.rep = leaf.value;
      cst.token_weights = leaf.weights;
      cst.token_scores = leaf.scores;
      cst.has_rep = true;
      cst.has_token_weights = true;
      return leaf.value;
    }
  };

  Walker w{g, tree, h, alignment, comp, states};
  w.visit(tree.root_id);

  // Single-token sentence: the root is a leaf with no parent to query from;
  // fall back to the mean of its subtoken rows.
  auto& root_state = states.nodes[static_cast<std::size_t>(tree.root_id)];
  if (tree.node(tree.root_id).leaf) {
    SubSpan span = subtoken_span(tree, tree.root_id, alignment);
    root_state.sub_first = span.first;
    root_state.sub_last = span.last;
    root_state.rep = g.mean_rows(span_rows(g, h, span));
    root_state.has_rep = true;
  }
  return states;
}

TreeStates mean_pool_tree(Graph& g, const PhraseTree& tree, const Tensor& h,
                          const std::vector<TokenRange>& alignment) {
  if (static_cast<std::size_t>(tree.token_count()) != alignment.size())
    throw AlignmentError("tree has " + std::to_string(tree.token_count()) +
                         " tokens but alignment covers " +
                         std::to_string(alignment.size()) + " (node " +
                         std::to_string(tree.root_id) + ")");
  TreeStates states;
  states.nodes.resize(tree.nodes.size());
  for (const auto& n : tree.nodes) {
    auto& st = states.nodes[static_cast<std::size_t>(n.id)];
    SubSpan span = subtoken_span(tree, n.id, alignment);
    st.sub_first = span.first;
    st.sub_last = span.last;
    st.rep = g.mean_rows(span_rows(g, h, span));
    st.has_rep = true;
  }
  return states;
}

}  // namespace senticomp
