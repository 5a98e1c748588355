#include "senticomp/objective.hpp"

#include <cmath>
#include <exception>

#include <json.hpp>

#include "senticomp/evalsuite.hpp"
#include "senticomp/threading.hpp"

namespace senticomp {

void TrainConfig::validate() const {
  if (mlm_weight < 0.0 || phrase_weight < 0.0)
    throw ConfigError("loss weights must be nonnegative");
  if (label_fraction < 0.0 || label_fraction > 1.0)
    throw ConfigError("label_fraction must lie in [0,1]");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
}

std::string TrainResult::to_jsonl() const {
  std::string out;
  for (const auto& r : log) {
    nlohmann::json j;
    j["epoch"] = r.epoch;
    j["mlm_loss"] = r.mlm_loss;
    j["phrase_loss"] = r.phrase_loss;
    j["phrase_acc"] = r.phrase_acc;
    j["root_acc"] = r.root_acc;
    out += j.dump();
    out += "\n";
  }
  return out;
}

Adam::Adam(const ParamStore& params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& [name, t] : params.entries()) {
    m_.emplace_back(t.size(), 0.0);
    v_.emplace_back(t.size(), 0.0);
  }
}

void Adam::step(ParamStore& params,
                const std::vector<std::vector<double>>& grads, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.entries().size(); ++i) {
    Tensor p = params.entries()[i].second;
    const auto& g = grads[i];
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < g.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      p.data()[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

namespace {

std::vector<std::vector<bool>> build_supervision(
    const std::vector<PhraseTree>& corpus, const TrainConfig& config) {
  std::vector<std::vector<bool>> masks;
  switch (config.supervision) {
    case SupervisionMode::PhraseFraction:
      masks = subsample_phrase_labels(corpus, config.label_fraction,
                                      config.seed);
      break;
    case SupervisionMode::RootOnly:
      for (const auto& t : corpus) {
        std::vector<bool> m(t.nodes.size(), false);
        if (!t.node(t.root_id).leaf)
          m[static_cast<std::size_t>(t.root_id)] = true;
        masks.push_back(std::move(m));
      }
      break;
    case SupervisionMode::RootPlusFraction:
      masks = subsample_phrase_labels(corpus, config.label_fraction,
                                      config.seed);
      for (std::size_t i = 0; i < corpus.size(); ++i)
        if (!corpus[i].node(corpus[i].root_id).leaf)
          masks[i][static_cast<std::size_t>(corpus[i].root_id)] = true;
      break;
  }
  return masks;
}

struct SentenceOut {
  double mlm = 0.0;
  double phrase = 0.0;
  std::vector<std::vector<double>> grads;  // aligned with param entries
};

struct Accuracy {
  double phrase = 0.0;
  double root = 0.0;
};

Accuracy clean_accuracy(const SentiModel& model,
                        const std::vector<PhraseTree>& corpus) {
  CorpusPredictions preds = predict_corpus(model, corpus);
  std::int64_t pt = 0, pc = 0, rt = 0, rc = 0;
  for (std::size_t t = 0; t < corpus.size(); ++t) {
    for (const auto& n : corpus[t].nodes) {
      if (n.leaf || n.loss_excluded) continue;
      ++pt;
      pc += preds[t][static_cast<std::size_t>(n.id)] == n.label ? 1 : 0;
    }
    const auto& root = corpus[t].node(corpus[t].root_id);
    if (!root.loss_excluded && preds[t][static_cast<std::size_t>(root.id)] >= 0) {
      ++rt;
      rc += preds[t][static_cast<std::size_t>(root.id)] == root.label ? 1 : 0;
    }
  }
  Accuracy acc;
  acc.phrase = pt ? static_cast<double>(pc) / static_cast<double>(pt) : 0.0;
  acc.root = rt ? static_cast<double>(rc) / static_cast<double>(rt) : 0.0;
  return acc;
}

}  // namespace

TrainResult train(SentiModel& model, const std::vector<PhraseTree>& corpus5,
                  const MaskingPolicy& policy, const TrainConfig& config) {
  config.validate();
  policy.validate();
  if (config.token_node_objective && !model.config().token_head)
    throw ConfigError("token_node_objective requires a model with token_head");

  std::vector<PhraseTree> corpus;
  corpus.reserve(corpus5.size());
  for (const auto& t : corpus5)
    corpus.push_back(coarsen_labels(t, model.config().granularity));
  if (config.token_node_objective) {
    bool any_leaf_label = false;
    for (const auto& t : corpus)
      for (const auto& n : t.nodes)
        if (n.leaf && !n.loss_excluded) any_leaf_label = true;
    if (!any_leaf_label)
      throw ConfigError("token_node_objective enabled but no usable leaf labels");
  }

  const std::vector<std::vector<bool>> supervision =
      build_supervision(corpus, config);

  ParamStore& params = model.params();
  const std::size_t n_params = params.entries().size();
  Adam adam(params, config.adam_beta1, config.adam_beta2, config.adam_eps);

  const std::size_t n = corpus.size();
  const std::size_t batches_per_epoch =
      n == 0 ? 0 : (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = batches_per_epoch * config.epochs;
  const std::size_t warmup_steps = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::llround(config.warmup_fraction *
                          static_cast<double>(total_steps))));

  TrainResult result;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(config.seed, epoch, 0xa11ce);
    shuffle_rng.shuffle(order);

    double epoch_mlm = 0.0, epoch_phrase = 0.0;
    for (std::size_t b = 0; b < n; b += config.batch_size) {
      const std::size_t bend = std::min(n, b + config.batch_size);
      const std::size_t bsize = bend - b;
      std::vector<SentenceOut> outs(bsize);
      std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic) num_threads(max_threads())
      for (long bi = 0; bi < static_cast<long>(bsize); ++bi) {
        try {
          const std::size_t ci = order[b + static_cast<std::size_t>(bi)];
          const PhraseTree& tree = corpus[ci];
          Rng rng(config.seed, epoch, ci);
          Graph g;
          SentiModel::Forward f =
              config.mlm_enabled
                  ? model.forward_train(g, tree, policy, rng)
                  : model.forward_clean(g, tree);
          Tensor mlm = config.mlm_enabled ? model.mlm_loss(g, f)
                                          : Tensor::scalar(0.0);
          Tensor phrase = model.phrase_loss(g, f, tree, supervision[ci]);
          Tensor total = g.add(g.scale(mlm, config.mlm_weight),
                               g.scale(phrase, config.phrase_weight));
          if (config.token_node_objective)
            total = g.add(total, model.token_node_loss(g, f, tree));
          // mean over the batch happens inside the graph
          Tensor scaled = g.scale(total, 1.0 / static_cast<double>(bsize));
          g.backward(scaled);

          auto& out = outs[static_cast<std::size_t>(bi)];
          out.mlm = mlm.item();
          out.phrase = phrase.item();
          out.grads.reserve(n_params);
          for (const auto& [name, t] : model.params().entries())
            out.grads.push_back(g.grad_or_zeros(t));
        } catch (...) {
#pragma omp critical
          if (!failure) failure = std::current_exception();
        }
      }
      if (failure) std::rethrow_exception(failure);

      // Reduce in sentence order so results never depend on thread timing.
      std::vector<std::vector<double>> acc(n_params);
      for (std::size_t i = 0; i < n_params; ++i)
        acc[i].assign(params.entries()[i].second.size(), 0.0);
      for (const auto& out : outs) {
        for (std::size_t i = 0; i < n_params; ++i)
          for (std::size_t j = 0; j < acc[i].size(); ++j)
            acc[i][j] += out.grads[i][j];
        epoch_mlm += out.mlm;
        epoch_phrase += out.phrase;
      }

      ++step;
      for (std::size_t i = 0; i < n_params; ++i)
        for (double gval : acc[i])
          if (!std::isfinite(gval))
            throw NumericError("non-finite gradient for parameter '" +
                               params.entries()[i].first + "' at step " +
                               std::to_string(step));

      if (config.grad_clip > 0.0) {
        double norm_sq = 0.0;
        for (const auto& gv : acc)
          for (double x : gv) norm_sq += x * x;
        double norm = std::sqrt(norm_sq);
        if (norm > config.grad_clip) {
          double f = config.grad_clip / norm;
          for (auto& gv : acc)
            for (double& x : gv) x *= f;
        }
      }

      double lr = config.learning_rate *
                  std::min(1.0, static_cast<double>(step) /
                                    static_cast<double>(warmup_steps));
      adam.step(params, acc, lr);
    }

    Accuracy acc = clean_accuracy(model, corpus);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.mlm_loss = n ? epoch_mlm / static_cast<double>(n) : 0.0;
    rec.phrase_loss = n ? epoch_phrase / static_cast<double>(n) : 0.0;
    rec.phrase_acc = acc.phrase;
    rec.root_acc = acc.root;
    result.log.push_back(rec);
    if (config.stop_at_phrase_acc > 0.0 &&
        acc.phrase >= config.stop_at_phrase_acc)
      break;
  }
  return result;
}

TrainResult finetune_sentence(SentiModel& model,
                              const std::vector<PhraseTree>& corpus5,
                              const TrainConfig& config,
                              bool keep_phrase_labels) {
  TrainConfig ft = config;
  ft.supervision = keep_phrase_labels ? SupervisionMode::RootPlusFraction
                                      : SupervisionMode::RootOnly;
  ft.mlm_enabled = false;
  MaskingPolicy unused;
  return train(model, corpus5, unused, ft);
}

}  // namespace senticomp
