#include "senticomp/evalsuite.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "senticomp/threading.hpp"

namespace senticomp {

namespace {

const char* global_bin_name(int g) {
  if (g <= 4) return "0-4";
  if (g <= 9) return "5-9";
  if (g <= 14) return "10-14";
  if (g <= 19) return "15-19";
  return "20-23";
}

const char* negation_bin_name(int n) {
  if (n == 0) return "0";
  if (n == 1) return "1";
  return "2+";
}

}  // namespace

CorpusPredictions predict_corpus(const SentiModel& model,
                                 const std::vector<PhraseTree>& corpus) {
  CorpusPredictions preds(corpus.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(max_threads())
  for (long i = 0; i < static_cast<long>(corpus.size()); ++i) {
    try {
      preds[static_cast<std::size_t>(i)] =
          model.predict(corpus[static_cast<std::size_t>(i)]).node_pred;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return preds;
}

namespace {

void check_coverage(const CorpusPredictions& preds,
                    const std::vector<PhraseTree>& corpus) {
  if (preds.size() != corpus.size())
    throw CoverageError("predictions cover " + std::to_string(preds.size()) +
                        " trees of " + std::to_string(corpus.size()));
  for (std::size_t t = 0; t < corpus.size(); ++t) {
    if (preds[t].size() != corpus[t].nodes.size())
      throw CoverageError("tree " + std::to_string(t) + " has " +
                          std::to_string(corpus[t].nodes.size()) +
                          " nodes but " + std::to_string(preds[t].size()) +
                          " predictions");
    for (const auto& n : corpus[t].nodes)
      if (!n.leaf && !n.loss_excluded &&
          preds[t][static_cast<std::size_t>(n.id)] < 0)
        throw CoverageError("tree " + std::to_string(t) + " node " +
                            std::to_string(n.id) + " lacks a prediction");
  }
}

}  // namespace

double phrase_accuracy(const CorpusPredictions& preds,
                       const std::vector<PhraseTree>& corpus) {
  check_coverage(preds, corpus);
  std::int64_t total = 0, correct = 0;
  for (std::size_t t = 0; t < corpus.size(); ++t) {
    for (const auto& n : corpus[t].nodes) {
      if (n.leaf || n.loss_excluded) continue;
      ++total;
      if (preds[t][static_cast<std::size_t>(n.id)] == n.label) ++correct;
    }
  }
  return total == 0 ? 0.0
                    : static_cast<double>(correct) / static_cast<double>(total);
}

Breakdown difficulty_breakdown(const CorpusPredictions& preds,
                               const std::vector<PhraseTree>& corpus,
                               const std::vector<PhraseTree>& analysis3,
                               bool include_leaf_edges) {
  check_coverage(preds, corpus);
  Breakdown out;
  for (std::size_t t = 0; t < corpus.size(); ++t) {
    const PhraseTree& run = corpus[t];
    const PhraseTree& ana = analysis3[t];
    int gbin_difficulty = global_difficulty(ana, include_leaf_edges);
    std::string gname = global_bin_name(gbin_difficulty);
    for (const auto& n : run.nodes) {
      if (n.leaf || n.loss_excluded) continue;
      bool ok = preds[t][static_cast<std::size_t>(n.id)] == n.label;
      int ld = local_difficulty(ana, n.id);
      auto& lbin = out.local[ld];
      ++lbin.count;
      lbin.correct += ok ? 1 : 0;
      auto& gbin = out.global[gname];
      ++gbin.count;
      gbin.correct += ok ? 1 : 0;
    }
  }
  return out;
}

std::map<std::string, BinStat> negation_breakdown(
    const CorpusPredictions& preds, const std::vector<PhraseTree>& corpus,
    const std::vector<PhraseTree>& analysis3) {
  check_coverage(preds, corpus);
  std::map<std::string, BinStat> out;
  for (std::size_t t = 0; t < corpus.size(); ++t) {
    std::string bin = negation_bin_name(count_negations(analysis3[t]));
    for (const auto& n : corpus[t].nodes) {
      if (n.leaf || n.loss_excluded) continue;
      auto& b = out[bin];
      ++b.count;
      b.correct += preds[t][static_cast<std::size_t>(n.id)] == n.label ? 1 : 0;
    }
  }
  return out;
}

std::optional<BinStat> contrastive_accuracy(
    const CorpusPredictions& preds, const std::vector<PhraseTree>& corpus,
    const std::vector<PhraseTree>& analysis3) {
  check_coverage(preds, corpus);
  BinStat stat;
  for (std::size_t t = 0; t < corpus.size(); ++t) {
    for (const auto& trip : extract_but_triplets(analysis3[t])) {
      ++stat.count;
      bool all = true;
      for (int id : {trip.parent, trip.x, trip.y}) {
        const auto& n = corpus[t].node(id);
        if (n.loss_excluded ||
            preds[t][static_cast<std::size_t>(id)] != n.label)
          all = false;
      }
      stat.correct += all ? 1 : 0;
    }
  }
  if (stat.count == 0) return std::nullopt;
  return stat;
}

// -- full report -------------------------------------------------------------

namespace {

nlohmann::json bin_to_json(const BinStat& b) {
  return {{"accuracy", b.accuracy()}, {"count", b.count}, {"correct", b.correct}};
}

BinStat bin_from_json(const nlohmann::json& j) {
  BinStat b;
  b.count = j.at("count").get<std::int64_t>();
  b.correct = j.at("correct").get<std::int64_t>();
  return b;
}

}  // namespace

EvalReport evaluate(const SentiModel& model,
                    const std::vector<PhraseTree>& corpus5,
                    const EvalOptions& options) {
  std::vector<PhraseTree> run, analysis;
  run.reserve(corpus5.size());
  analysis.reserve(corpus5.size());
  for (const auto& t : corpus5) {
    run.push_back(coarsen_labels(t, model.config().granularity));
    analysis.push_back(coarsen_labels(t, Granularity::Three));
  }
  CorpusPredictions preds = predict_corpus(model, run);

  EvalReport report;
  report.granularity = granularity_name(model.config().granularity);
  report.phrase_acc = phrase_accuracy(preds, run);
  for (std::size_t t = 0; t < run.size(); ++t) {
    for (const auto& n : run[t].nodes) {
      if (n.leaf || n.loss_excluded) continue;
      ++report.phrase_total;
      report.phrase_correct +=
          preds[t][static_cast<std::size_t>(n.id)] == n.label ? 1 : 0;
    }
    const auto& root = run[t].node(run[t].root_id);
    if (!root.loss_excluded && preds[t][static_cast<std::size_t>(root.id)] >= 0) {
      ++report.root_total;
      report.root_correct +=
          preds[t][static_cast<std::size_t>(root.id)] == root.label ? 1 : 0;
    }
  }
  report.root_acc = report.root_total == 0
                        ? 0.0
                        : static_cast<double>(report.root_correct) /
                              static_cast<double>(report.root_total);
  Breakdown bd =
      difficulty_breakdown(preds, run, analysis, options.include_leaf_edges);
  report.by_local_difficulty = std::move(bd.local);
  report.by_global_difficulty = std::move(bd.global);
  report.by_negation = negation_breakdown(preds, run, analysis);
  report.contrastive = contrastive_accuracy(preds, run, analysis);
  for (std::size_t t = 0; t < run.size(); ++t) {
    for (const auto& n : run[t].nodes) {
      if (n.leaf) continue;
      report.dump.push_back({static_cast<std::int64_t>(t), n.id, n.label,
                             preds[t][static_cast<std::size_t>(n.id)],
                             n.loss_excluded});
    }
  }
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["granularity"] = granularity;
  j["phrase_accuracy"] = phrase_acc;
  j["phrase_total"] = phrase_total;
  j["phrase_correct"] = phrase_correct;
  j["root_accuracy"] = root_acc;
  j["root_total"] = root_total;
  j["root_correct"] = root_correct;
  auto& local = j["accuracy_by_local_difficulty"];
  for (const auto& [k, v] : by_local_difficulty)
    local[std::to_string(k)] = bin_to_json(v);
  auto& global = j["accuracy_by_global_difficulty_bin"];
  for (const auto& [k, v] : by_global_difficulty) global[k] = bin_to_json(v);
  auto& neg = j["accuracy_by_negation_bin"];
  for (const auto& [k, v] : by_negation) neg[k] = bin_to_json(v);
  if (contrastive) {
    j["contrastive_tripletlet_accuracy"] = contrastive->accuracy();
    j["contrastive_tripletlet_count"] = contrastive->count;
    j["contrastive_tripletlet_correct"] = contrastive->correct;
  }
  auto& dump_json = j["per_node"];
  dump_json = nlohmann::json::array();
  for (const auto& d : dump) {
    dump_json.push_back({{"tree", d.tree},
                         {"node", d.node},
                         {"gold", d.gold},
                         {"pred", d.pred},
                         {"excluded", d.excluded}});
  }
  return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  EvalReport r;
  r.granularity = j.at("granularity").get<std::string>();
  r.phrase_acc = j.at("phrase_accuracy").get<double>();
  r.phrase_total = j.at("phrase_total").get<std::int64_t>();
  r.phrase_correct = j.at("phrase_correct").get<std::int64_t>();
  r.root_acc = j.at("root_accuracy").get<double>();
  r.root_total = j.at("root_total").get<std::int64_t>();
  r.root_correct = j.at("root_correct").get<std::int64_t>();
  for (const auto& [k, v] : j.at("accuracy_by_local_difficulty").items())
    r.by_local_difficulty[std::stoi(k)] = bin_from_json(v);
  for (const auto& [k, v] : j.at("accuracy_by_global_difficulty_bin").items())
    r.by_global_difficulty[k] = bin_from_json(v);
  for (const auto& [k, v] : j.at("accuracy_by_negation_bin").items())
    r.by_negation[k] = bin_from_json(v);
  if (j.contains("contrastive_tripletlet_accuracy")) {
    BinStat b;
    b.count = j.at("contrastive_tripletlet_count").get<std::int64_t>();
    b.correct = j.at("contrastive_tripletlet_correct").get<std::int64_t>();
    r.contrastive = b;
  }
  for (const auto& d : j.at("per_node")) {
    r.dump.push_back({d.at("tree").get<std::int64_t>(),
                      d.at("node").get<int>(), d.at("gold").get<int>(),
                      d.at("pred").get<int>(), d.at("excluded").get<bool>()});
  }
  return r;
}

// -- traces -------------------------------------------------------------------

namespace {

std::vector<double> tensor_values(const Tensor& t) {
  return std::vector<double>(t.data(), t.data() + t.size());
}

/// Trace r order is (r_lson, r_self, r_rson); internal order is (l, r, self).
std::array<double, 3> reorder_r(const Tensor& internal) {
  return {internal.at(0), internal.at(2), internal.at(1)};
}

int pred3_of(int pred, Granularity g) {
  if (pred < 0) return -1;
  switch (g) {
    case Granularity::Five: return pred <= 1 ? 0 : (pred == 2 ? 1 : 2);
    case Granularity::Three: return pred;
    case Granularity::Two: return pred == 0 ? 0 : 2;
  }
  return -1;
}

const char* color_of(int pred3) {
  switch (pred3) {
    case 0: return "#f4a582";   // negative
    case 1: return "#d9d9d9";   // neutral
    case 2: return "#a6d96a";   // positive
    default: return "#ffffff";
  }
}

}  // namespace

std::string trace_json(const PhraseTree& run_tree, const TreeStates& states,
                       const std::vector<int>& node_pred,
                       std::size_t sentence_index) {
  nlohmann::json j;
  j["sentence_index"] = sentence_index;
  j["tokens"] = run_tree.tokens;
  auto& nodes = j["nodes"];
  nodes = nlohmann::json::array();
  for (const auto& n : run_tree.nodes) {
    const auto& st = states.nodes[static_cast<std::size_t>(n.id)];
    nlohmann::json nj;
    nj["id"] = n.id;
    nj["leaf"] = n.leaf;
    nj["span"] = {n.span_st, n.span_en};
    nj["gold"] = n.label;
    nj["pred"] = node_pred[static_cast<std::size_t>(n.id)];
    if (st.has_token_weights) nj["a_weights"] = tensor_values(st.token_weights);
    if (st.has_child_weights) {
      auto r = reorder_r(st.child_weights);
      nj["r"] = {r[0], r[1], r[2]};  // (r_lson, r_self, r_rson)
    }
    nodes.push_back(std::move(nj));
  }
  return j.dump(2);
}

std::string trace_dot(const PhraseTree& run_tree, const TreeStates& states,
                      const std::vector<int>& pred3,
                      std::size_t sentence_index) {
  std::string out = "digraph sentence_" + std::to_string(sentence_index) + " {\n";
  out += "  node [style=filled, fontname=\"Helvetica\"];\n";
  char buf[160];
  for (const auto& n : run_tree.nodes) {
    const auto& st = states.nodes[static_cast<std::size_t>(n.id)];
    std::string label;
    if (n.leaf) {
      label = run_tree.token(n.span_st);
    } else {
      label = "phrase " + std::to_string(n.span_st) + ".." +
              std::to_string(n.span_en);
    }
    if (st.has_child_weights) {
      auto r = reorder_r(st.child_weights);
      std::snprintf(buf, sizeof(buf), "\\nr_self=%.3f", r[1]);
      label += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "  n%d [label=\"%s\", fillcolor=\"%s\"];\n", n.id,
                  label.c_str(),
                  color_of(pred3[static_cast<std::size_t>(n.id)]));
    out += buf;
    if (!n.leaf) {
      auto r = reorder_r(st.child_weights);
      std::snprintf(buf, sizeof(buf),
                    "  n%d -> n%d [label=\"r_lson=%.3f\"];\n", n.id, n.left,
                    r[0]);
      out += buf;
      std::snprintf(buf, sizeof(buf),
                    "  n%d -> n%d [label=\"r_rson=%.3f\"];\n", n.id, n.right,
                    r[2]);
      out += buf;
    }
  }
  out += "}\n";
  return out;
}

void export_traces(const SentiModel& model,
                   const std::vector<PhraseTree>& corpus5,
                   const std::vector<std::size_t>& sentence_indices,
                   const std::string& out_dir) {
  if (model.config().mean_pool)
    throw ConfigError("traces need the attention composition, not mean pooling");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  for (std::size_t idx : sentence_indices) {
    if (idx >= corpus5.size())
      throw DomainError("sentence index " + std::to_string(idx) +
                        " outside corpus of " + std::to_string(corpus5.size()));
    PhraseTree run = coarsen_labels(corpus5[idx], model.config().granularity);
    Graph g;
    SentiModel::Forward f = model.forward_clean(g, run);
    auto pred = model.predict(run);
    std::vector<int> p3(pred.node_pred.size());
    for (std::size_t i = 0; i < p3.size(); ++i)
      p3[i] = pred3_of(pred.node_pred[i], model.config().granularity);
    std::string stem =
        out_dir + "/sentence_" + std::to_string(idx);
    std::ofstream js(stem + ".json");
    std::ofstream ds(stem + ".dot");
    if (!js || !ds) throw IoError("cannot write traces under " + out_dir);
    js << trace_json(run, f.states, pred.node_pred, idx);
    ds << trace_dot(run, f.states, p3, idx);
  }
}

}  // namespace senticomp
