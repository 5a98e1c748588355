#include "senticomp/vocab.hpp"

#include <fstream>
#include <set>

namespace senticomp {

namespace {
const char* kSpecialNames[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
}

int Vocabulary::add(const std::string& token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  ids_[token] = id;
  return id;
}

Vocabulary Vocabulary::build(const std::vector<PhraseTree>& corpus) {
  Vocabulary v;
  for (const char* s : kSpecialNames) v.add(s);
  std::set<std::string> chars;  // ordered for determinism
  for (const auto& tree : corpus) {
    for (const auto& word : tree.tokens) {
      v.add(word);
      for (const auto& cp : codepoints(word)) chars.insert(cp);
    }
  }
  for (const auto& cp : chars) v.add(cp);
  return v;
}

Vocabulary Vocabulary::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary: " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) v.add(line);
  if (v.size() < kSpecialCount)
    throw ConfigError("vocabulary too small for special tokens: " + path);
  for (int i = 0; i < kSpecialCount; ++i)
    if (v.text_of(i) != kSpecialNames[i])
      throw ConfigError("vocabulary line " + std::to_string(i) +
                        " must be " + kSpecialNames[i]);
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary: " + path);
  for (const auto& t : tokens_) out << t << "\n";
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? -1 : it->second;
}

std::vector<std::string> Vocabulary::codepoints(const std::string& word) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < word.size()) {
    unsigned char c = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if ((c & 0x80) == 0x00) len = 1;
    else if ((c & 0xe0) == 0xc0) len = 2;
    else if ((c & 0xf0) == 0xe0) len = 3;
    else if ((c & 0xf8) == 0xf0) len = 4;
    if (i + len > word.size()) len = 1;  // malformed byte: take it alone
    out.push_back(word.substr(i, len));
    i += len;
  }
  return out;
}

std::vector<int> Vocabulary::subtokens_of(const std::string& word) const {
  int direct = id_of(word);
  if (direct >= 0 && !is_special(direct)) return {direct};
  std::vector<int> out;
  for (const auto& cp : codepoints(word)) {
    int id = id_of(cp);
    out.push_back(id >= 0 && !is_special(id) ? id : kUnk);
  }
  if (out.empty()) out.push_back(kUnk);
  return out;
}

Tokenized tokenize(const Vocabulary& vocab,
                   const std::vector<std::string>& surface_tokens) {
  if (surface_tokens.empty())
    throw DomainError("tokenize: empty sentence");
  Tokenized t;
  t.ids.push_back(Vocabulary::kCls);
  for (const auto& word : surface_tokens) {
    std::vector<int> sub = vocab.subtokens_of(word);
    TokenRange range{t.ids.size(), t.ids.size() + sub.size() - 1};
    t.ids.insert(t.ids.end(), sub.begin(), sub.end());
    t.alignment.push_back(range);
  }
  t.ids.push_back(Vocabulary::kSep);
  return t;
}

}  // namespace senticomp
