#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "senticomp/model.hpp"
#include "senticomp/treebank.hpp"

namespace senticomp {

/// Per-tree, per-node predicted class; -1 where no prediction exists.
using CorpusPredictions = std::vector<std::vector<int>>;

/// Clean forward over the corpus; parallel over sentences, deterministic.
CorpusPredictions predict_corpus(const SentiModel& model,
                                 const std::vector<PhraseTree>& corpus);

struct BinStat {
  std::int64_t count = 0;
  std::int64_t correct = 0;
  double accuracy() const {
    return count == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(count);
  }
};

/// Fraction of non-leaf, non-excluded nodes predicted correctly.
/// CoverageError when a required node has no prediction.
double phrase_accuracy(const CorpusPredictions& preds,
                       const std::vector<PhraseTree>& corpus);

struct Breakdown {
  std::map<int, BinStat> local;            // by local difficulty 0/1/2
  std::map<std::string, BinStat> global;   // by global-difficulty bin
};

/// Grouping always follows the 3-class analysis labels; correctness follows
/// the run-granularity labels in `corpus` (identical when the run is 3-class).
Breakdown difficulty_breakdown(const CorpusPredictions& preds,
                               const std::vector<PhraseTree>& corpus,
                               const std::vector<PhraseTree>& analysis3,
                               bool include_leaf_edges = true);

std::map<std::string, BinStat> negation_breakdown(
    const CorpusPredictions& preds, const std::vector<PhraseTree>& corpus,
    const std::vector<PhraseTree>& analysis3);

/// All-or-nothing accuracy over (X but Y, X, Y) triple-lets extracted at the
/// 3-class granularity; nullopt when the corpus has none.
std::optional<BinStat> contrastive_accuracy(
    const CorpusPredictions& preds, const std::vector<PhraseTree>& corpus,
    const std::vector<PhraseTree>& analysis3);

struct EvalReport {
  std::string granularity;
  double phrase_acc = 0.0;
  std::int64_t phrase_total = 0, phrase_correct = 0;
  double root_acc = 0.0;
  std::int64_t root_total = 0, root_correct = 0;
  std::map<int, BinStat> by_local_difficulty;
  std::map<std::string, BinStat> by_global_difficulty;
  std::map<std::string, BinStat> by_negation;
  std::optional<BinStat> contrastive;

  struct NodeDump {
    std::int64_t tree = 0;
    int node = 0;
    int gold = 0;
    int pred = -1;
    bool excluded = false;
  };
  std::vector<NodeDump> dump;

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
};

struct EvalOptions {
  bool include_leaf_edges = true;
};

/// Full evaluation of a model over a 5-class treebank at the model's
/// granularity, with the difficulty, negation and contrastive breakdowns.
EvalReport evaluate(const SentiModel& model,
                    const std::vector<PhraseTree>& corpus5,
                    const EvalOptions& options = {});

/// Per-sentence attention-trace artifacts.
std::string trace_json(const PhraseTree& run_tree, const TreeStates& states,
                       const std::vector<int>& node_pred,
                       std::size_t sentence_index);
std::string trace_dot(const PhraseTree& run_tree, const TreeStates& states,
                      const std::vector<int>& pred3,
                      std::size_t sentence_index);

/// Writes <stem>.json and <stem>.dot for the chosen sentences into out_dir.
/// Requires an attention model (traces need recorded weights).
void export_traces(const SentiModel& model,
                   const std::vector<PhraseTree>& corpus5,
                   const std::vector<std::size_t>& sentence_indices,
                   const std::string& out_dir);

}  // namespace senticomp
