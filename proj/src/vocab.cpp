#include "abc/vocab.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "abc/errors.hpp"

namespace abc {

namespace {

// ASCII characters in the Unicode P* categories. The symbol characters that
// std::ispunct also accepts ($ + < = > ^ ` | ~) are kept.
bool is_punctuation(char c) {
  static const std::string punct = "!\"#%&'()*,-./:;?@[\\]_{}";
  return punct.find(c) != std::string::npos;
}

// Common multi-byte punctuation that shows up in copied text.
const char* const kWidePunct[] = {
    "‘", "’", "“", "”", "–", "—",
    "…", "¡", "¿", "«", "»",
};

std::string strip_and_lower(const std::string& text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    bool wide = false;
    for (const char* p : kWidePunct) {
      const std::size_t len = std::char_traits<char>::length(p);
      if (text.compare(i, len, p) == 0) {
        i += len;
        wide = true;
        break;
      }
    }
    if (wide) continue;
    const char c = text[i++];
    if (is_punctuation(c)) continue;
    cleaned.push_back(static_cast<char>(
        std::tolower(static_cast<unsigned char>(c))));
  }
  return cleaned;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& question) {
  std::istringstream stream(strip_and_lower(question));
  std::vector<std::string> tokens;
  tokens.push_back(kBeginToken);
  std::string word;
  while (stream >> word) tokens.push_back(word);
  if (tokens.size() == 1) throw ConfigError("empty question");
  tokens.push_back(kEndToken);
  return tokens;
}

std::uint64_t hash_words(const std::vector<std::string>& words) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](char c) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  };
  for (const std::string& w : words) {
    for (char c : w) mix(c);
    mix('\n');
  }
  return h;
}

Vocabulary::Vocabulary() {
  add(kBeginToken);
  add(kEndToken);
  add(kOovToken);
}

void Vocabulary::add(const std::string& word) {
  if (index_.count(word)) return;
  index_.emplace(word, words_.size());
  words_.push_back(word);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& questions) {
  if (questions.empty())
    throw ConfigError("cannot build a vocabulary from no questions");
  Vocabulary v;
  for (const std::string& q : questions)
    for (const std::string& tok : tokenize(q)) v.add(tok);
  return v;
}

std::size_t Vocabulary::lookup(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kOov : it->second;
}

bool Vocabulary::contains(const std::string& word) const {
  return index_.count(word) != 0;
}

const std::string& Vocabulary::word(std::size_t index) const {
  if (index >= words_.size()) throw ContractError("vocabulary index out of range");
  return words_[index];
}

std::vector<std::size_t> Vocabulary::encode(
    const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(lookup(t));
  return ids;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open vocabulary file for writing: " + path.string());
  for (const std::string& w : words_) out << w << '\n';
  if (!out) throw IoError("failed writing vocabulary file: " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary file: " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) words.push_back(line);
  return from_words(std::move(words));
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
  if (words.size() < 3 || words[0] != kBeginToken || words[1] != kEndToken ||
      words[2] != kOovToken)
    throw IoError("vocabulary file does not start with the reserved symbols");
  Vocabulary v;
  for (std::size_t i = 3; i < words.size(); ++i) v.add(words[i]);
  if (v.size() != words.size())
    throw IoError("vocabulary file contains duplicate words");
  return v;
}

AnswerVocabulary AnswerVocabulary::build(
    const std::vector<std::string>& answers) {
  AnswerVocabulary v;
  for (const std::string& a : answers) {
    if (!v.index_.count(a)) {
      v.index_.emplace(a, v.words_.size());
      v.words_.push_back(a);
    }
  }
  return v;
}

AnswerVocabulary AnswerVocabulary::from_words(std::vector<std::string> words) {
  AnswerVocabulary v = build(words);
  if (v.size() != words.size())
    throw IoError("answer vocabulary contains duplicate words");
  return v;
}

std::size_t AnswerVocabulary::lookup(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end())
    throw ContractError("answer word not in vocabulary: " + word);
  return it->second;
}

bool AnswerVocabulary::contains(const std::string& word) const {
  return index_.count(word) != 0;
}

const std::string& AnswerVocabulary::word(std::size_t index) const {
  if (index >= words_.size())
    throw ContractError("answer index out of range");
  return words_[index];
}

void AnswerVocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open vocabulary file for writing: " + path.string());
  for (const std::string& w : words_) out << w << '\n';
  if (!out) throw IoError("failed writing vocabulary file: " + path.string());
}

AnswerVocabulary AnswerVocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary file: " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) words.push_back(line);
  return from_words(std::move(words));
}

}  // namespace abc
