#include "senticomp/config.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>

namespace senticomp {

Granularity granularity_from_string(const std::string& s) {
  if (s == "5" || s == "five" || s == "Five") return Granularity::Five;
  if (s == "3" || s == "three" || s == "Three") return Granularity::Three;
  if (s == "2" || s == "two" || s == "Two") return Granularity::Two;
  throw ConfigError("granularity must be one of {5,3,2}, got '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    return s.substr(1, s.size() - 2);
  return s;
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw ConfigError("field '" + key + "': expected a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw ConfigError("field '" + key + "': expected an integer, got '" + v +
                      "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("field '" + key + "': expected true/false, got '" + v +
                    "'");
}

}  // namespace

void RunConfig::apply(const std::string& key, const std::string& raw) {
  const std::string value = unquote(raw);
  if (key == "train") train_path = value;
  else if (key == "dev") dev_path = value;
  else if (key == "test") test_path = value;
  else if (key == "vocab") vocab_path = value;
  else if (key == "lexicon") lexicon_path = value;
  else if (key == "out_dir") out_dir = value;
  else if (key == "checkpoint") checkpoint_path = value;
  else if (key == "init_checkpoint") init_checkpoint = value;
  else if (key == "layers") model.encoder.layers = static_cast<std::size_t>(to_int(key, value));
  else if (key == "heads") model.encoder.heads = static_cast<std::size_t>(to_int(key, value));
  else if (key == "model_dim") model.encoder.model_dim = static_cast<std::size_t>(to_int(key, value));
  else if (key == "ffn_dim") model.encoder.ffn_dim = static_cast<std::size_t>(to_int(key, value));
  else if (key == "max_len") model.encoder.max_len = static_cast<std::size_t>(to_int(key, value));
  else if (key == "dropout") model.encoder.dropout = to_real(key, value);
  else if (key == "granularity") model.granularity = granularity_from_string(value);
  else if (key == "mean_pool") model.mean_pool = to_bool(key, value);
  else if (key == "learning_rate") train.learning_rate = to_real(key, value);
  else if (key == "batch_size") train.batch_size = static_cast<std::size_t>(to_int(key, value));
  else if (key == "epochs") train.epochs = static_cast<std::size_t>(to_int(key, value));
  else if (key == "seed") {
    train.seed = static_cast<std::uint64_t>(to_int(key, value));
    seed_set = true;
  } else if (key == "mlm_weight") train.mlm_weight = to_real(key, value);
  else if (key == "phrase_weight") train.phrase_weight = to_real(key, value);
  else if (key == "token_node_objective") {
    train.token_node_objective = to_bool(key, value);
    model.token_head = train.token_node_objective;
  } else if (key == "label_fraction") train.label_fraction = to_real(key, value);
  else if (key == "stop_at_phrase_acc") train.stop_at_phrase_acc = to_real(key, value);
  else if (key == "grad_clip") train.grad_clip = to_real(key, value);
  else if (key == "warmup_fraction") train.warmup_fraction = to_real(key, value);
  else if (key == "opinion_word_prob") masking_opinion_prob = to_real(key, value);
  else if (key == "other_word_prob") masking_other_prob = to_real(key, value);
  else if (key == "finetune") finetune = to_bool(key, value);
  else if (key == "finetune_keep_phrase_labels") finetune_keep_phrase_labels = to_bool(key, value);
  else if (key == "include_leaf_edges") include_leaf_edges = to_bool(key, value);
  else
    throw ConfigError("unknown config key '" + key + "'");
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = line;
    if (auto hash = s.find('#'); hash != std::string::npos) {
      // keep # inside quoted strings
      bool in_quotes = false;
      std::size_t cut = std::string::npos;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_quotes = !in_quotes;
        if (s[i] == '#' && !in_quotes) {
          cut = i;
          break;
        }
      }
      if (cut != std::string::npos) s = s.substr(0, cut);
    }
    s = trim(s);
    if (s.empty()) continue;
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key or value");
    try {
      cfg.apply(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (line " +
                        std::to_string(line_no) + ")");
    }
  }
  return cfg;
}

namespace {
void require_exists(const std::string& field, const std::string& path) {
  if (path.empty())
    throw ConfigError("field '" + field + "' is required");
  if (!std::filesystem::exists(path))
    throw ConfigError("field '" + field + "': path does not exist: " + path);
}
}  // namespace

void RunConfig::validate_for_train() const {
  require_exists("train", train_path);
  if (!vocab_path.empty()) require_exists("vocab", vocab_path);
  if (!lexicon_path.empty()) require_exists("lexicon", lexicon_path);
  if (!dev_path.empty()) require_exists("dev", dev_path);
  if (!init_checkpoint.empty()) require_exists("init_checkpoint", init_checkpoint);
  if (finetune && init_checkpoint.empty())
    throw ConfigError("field 'init_checkpoint' is required when finetune = true");
  if (!seed_set)
    throw ConfigError("field 'seed' is mandatory for train runs");
  train.validate();
  if (model.encoder.heads == 0 ||
      model.encoder.model_dim % model.encoder.heads != 0)
    throw ConfigError("field 'model_dim' must be divisible by 'heads'");
  for (auto [field, p] :
       {std::pair<const char*, double>{"opinion_word_prob", masking_opinion_prob},
        {"other_word_prob", masking_other_prob}})
    if (p < 0.0 || p > 1.0)
      throw ConfigError("field '" + std::string(field) + "' outside [0,1]");
}

void RunConfig::validate_for_eval() const {
  require_exists("test", test_path);
  require_exists("vocab", resolved_vocab());
  if (!lexicon_path.empty()) require_exists("lexicon", lexicon_path);
}

}  // namespace senticomp
