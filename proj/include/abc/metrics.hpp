#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace abc {

// Rooted word taxonomy parsed from "child parent" lines; exactly one line
// names the parent "ROOT" and defines the root word. Depth of the root is 1.
class Taxonomy {
 public:
  static Taxonomy parse(std::istream& in);
  static Taxonomy load(const std::filesystem::path& path);
  static Taxonomy from_lines(const std::vector<std::string>& lines);
  void save(const std::filesystem::path& path) const;

  bool contains(const std::string& word) const;
  std::size_t depth(const std::string& word) const;
  const std::string& parent(const std::string& word) const;
  // Path from the word up to and including the root.
  std::vector<std::string> ancestors(const std::string& word) const;
  const std::string& root() const { return root_; }
  std::size_t size() const { return parent_.size() + 1; }

 private:
  std::string root_;
  std::map<std::string, std::string> parent_;  // child -> parent, root absent
  std::map<std::string, std::size_t> depth_;
};

// Wu-Palmer similarity 2*depth(lca) / (depth(a) + depth(b)). Words missing
// from the taxonomy fall back to exact string match: 1 if equal, else 0.
double wup_similarity(const std::string& a, const std::string& b,
                      const Taxonomy& t);

// Mean of per-pair down-weighted WUP values: scores below the threshold count
// as 0.1 * wup, scores at or above it count in full.
double wups_score(const std::vector<std::string>& predictions,
                  const std::vector<std::string>& ground_truth,
                  double threshold, const Taxonomy& t);

// Exact-string-match fraction.
double accuracy(const std::vector<std::string>& predictions,
                const std::vector<std::string>& ground_truth);

struct EvalReport {
  double acc = 0.0;
  double wups09 = 0.0;
  double wups00 = 0.0;
  std::map<std::string, double> per_category;        // category -> accuracy
  std::map<std::string, std::size_t> category_count;
  std::size_t total = 0;
};

}  // namespace abc
