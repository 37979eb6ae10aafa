#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace abc {

// Lowercases, strips punctuation, splits on whitespace, and wraps the result
// in the #B# / #E# sentinels. Throws ConfigError on an empty or
// whitespace-only question.
std::vector<std::string> tokenize(const std::string& question);

inline constexpr const char* kBeginToken = "#B#";
inline constexpr const char* kEndToken = "#E#";
inline constexpr const char* kOovToken = "#OOV#";

// FNV-1a over each word followed by '\n'; identifies a vocabulary across
// checkpoint and dataset files.
std::uint64_t hash_words(const std::vector<std::string>& words);

// Question dictionary. Indices 0, 1, 2 are reserved for #B#, #E#, #OOV#;
// the remaining words get indices in first-occurrence order. Lookup of a
// word that was never added returns the #OOV# index.
class Vocabulary {
 public:
  static constexpr std::size_t kBegin = 0;
  static constexpr std::size_t kEnd = 1;
  static constexpr std::size_t kOov = 2;

  Vocabulary();
  static Vocabulary build(const std::vector<std::string>& questions);

  std::size_t lookup(const std::string& word) const;
  bool contains(const std::string& word) const;
  const std::string& word(std::size_t index) const;
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  std::uint64_t hash() const { return hash_words(words_); }

  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);
  static Vocabulary from_words(std::vector<std::string> words);

 private:
  void add(const std::string& word);

  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Answer dictionary: a plain bijective word <-> index map, deliberately
// separate from the question dictionary.
class AnswerVocabulary {
 public:
  AnswerVocabulary() = default;
  static AnswerVocabulary build(const std::vector<std::string>& answers);
  static AnswerVocabulary from_words(std::vector<std::string> words);

  std::size_t lookup(const std::string& word) const;  // throws if absent
  bool contains(const std::string& word) const;
  const std::string& word(std::size_t index) const;
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  std::uint64_t hash() const { return hash_words(words_); }

  void save(const std::filesystem::path& path) const;
  static AnswerVocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace abc
