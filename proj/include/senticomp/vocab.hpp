#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "senticomp/error.hpp"
#include "senticomp/treebank.hpp"

namespace senticomp {

/// Contiguous subtoken range of one surface token, inclusive positions into
/// the full id sequence (specials occupy positions outside every range).
struct TokenRange {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t width() const { return last - first + 1; }
};

/// Word-level vocabulary with a fixed simple subword scheme: an in-vocabulary
/// word is one subtoken; anything else decomposes into single-codepoint
/// subtokens with UNK as the final fallback. File format: one token per
/// line, id = line number.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kMask = 4;
  static constexpr int kSpecialCount = 5;

  /// Specials, then surface words by first appearance, then the single
  /// codepoints seen in corpus words.
  static Vocabulary build(const std::vector<PhraseTree>& corpus);
  static Vocabulary from_file(const std::string& path);
  void save(const std::string& path) const;

  int id_of(const std::string& token) const;
  const std::string& text_of(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  static bool is_special(int id) { return id < kSpecialCount; }

  /// One or more subtoken ids; never empty.
  std::vector<int> subtokens_of(const std::string& word) const;

  /// UTF-8 codepoint split (used for out-of-vocabulary decomposition).
  static std::vector<std::string> codepoints(const std::string& word);

 private:
  int add(const std::string& token);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct Tokenized {
  std::vector<int> ids;                  // [CLS] subtokens... [SEP]
  std::vector<TokenRange> alignment;     // one range per surface token
};

/// Deterministic subword tokenization of a pre-split sentence.
Tokenized tokenize(const Vocabulary& vocab,
                   const std::vector<std::string>& surface_tokens);

}  // namespace senticomp
