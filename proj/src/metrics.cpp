#include "abc/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "abc/errors.hpp"

namespace abc {

Taxonomy Taxonomy::parse(std::istream& in) {
  Taxonomy t;
  std::string line;
  std::size_t root_lines = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string child, parent, extra;
    if (!(row >> child >> parent) || (row >> extra))
      throw ConfigError("taxonomy line must be 'child parent': " + line);
    if (parent == "ROOT") {
      ++root_lines;
      t.root_ = child;
    } else {
      if (t.parent_.count(child))
        throw ConfigError("taxonomy word has two parents: " + child);
      t.parent_.emplace(child, parent);
    }
  }
  if (root_lines != 1)
    throw ConfigError("taxonomy must contain exactly one ROOT line");

  // Walk every chain to the root once; this both fills the depth cache and
  // rejects cycles and orphaned parents.
  t.depth_[t.root_] = 1;
  for (const auto& [child, parent] : t.parent_) {
    std::vector<std::string> chain;
    std::string cur = child;
    while (!t.depth_.count(cur)) {
      chain.push_back(cur);
      auto it = t.parent_.find(cur);
      if (it == t.parent_.end())
        throw ConfigError("taxonomy word never reaches the root: " + child);
      cur = it->second;
      if (chain.size() > t.parent_.size())
        throw ConfigError("taxonomy contains a cycle at: " + child);
    }
    std::size_t d = t.depth_[cur];
    for (auto it = chain.rbegin(); it != chain.rend(); ++it)
      t.depth_[*it] = ++d;
  }
  return t;
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open taxonomy file: " + path.string());
  return parse(in);
}

Taxonomy Taxonomy::from_lines(const std::vector<std::string>& lines) {
  std::ostringstream joined;
  for (const std::string& l : lines) joined << l << '\n';
  std::istringstream in(joined.str());
  return parse(in);
}

void Taxonomy::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open taxonomy file for writing: " + path.string());
  out << root_ << " ROOT\n";
  for (const auto& [child, parent] : parent_) out << child << ' ' << parent << '\n';
  if (!out) throw IoError("failed writing taxonomy file: " + path.string());
}

bool Taxonomy::contains(const std::string& word) const {
  return depth_.count(word) != 0;
}

std::size_t Taxonomy::depth(const std::string& word) const {
  auto it = depth_.find(word);
  if (it == depth_.end())
    throw ContractError("word not in taxonomy: " + word);
  return it->second;
}

const std::string& Taxonomy::parent(const std::string& word) const {
  auto it = parent_.find(word);
  if (it == parent_.end())
    throw ContractError("word has no parent in taxonomy: " + word);
  return it->second;
}

std::vector<std::string> Taxonomy::ancestors(const std::string& word) const {
  if (!contains(word)) throw ContractError("word not in taxonomy: " + word);
  std::vector<std::string> chain;
  std::string cur = word;
  chain.push_back(cur);
  while (cur != root_) {
    cur = parent_.at(cur);
    chain.push_back(cur);
  }
  return chain;
}

double wup_similarity(const std::string& a, const std::string& b,
                      const Taxonomy& t) {
  if (!t.contains(a) || !t.contains(b)) return a == b ? 1.0 : 0.0;
  // Walk the deeper word up to the shallower depth, then climb in lockstep
  // until the paths meet.
  const std::size_t da = t.depth(a);
  const std::size_t db = t.depth(b);
  std::string wa = a;
  std::string wb = b;
  std::size_t lca_depth = std::min(da, db);
  for (std::size_t d = da; d > lca_depth; --d) wa = t.parent(wa);
  for (std::size_t d = db; d > lca_depth; --d) wb = t.parent(wb);
  while (wa != wb) {
    wa = t.parent(wa);
    wb = t.parent(wb);
    --lca_depth;
  }
  return 2.0 * static_cast<double>(lca_depth) / static_cast<double>(da + db);
}

namespace {

double downweight(double wup, double threshold) {
  return wup < threshold ? 0.1 * wup : wup;
}

}  // namespace

double wups_score(const std::vector<std::string>& predictions,
                  const std::vector<std::string>& ground_truth,
                  double threshold, const Taxonomy& t) {
  if (predictions.size() != ground_truth.size())
    throw ContractError("wups_score: list lengths differ");
  if (predictions.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    total += downweight(wup_similarity(predictions[i], ground_truth[i], t),
                        threshold);
  return total / static_cast<double>(predictions.size());
}

double accuracy(const std::vector<std::string>& predictions,
                const std::vector<std::string>& ground_truth) {
  if (predictions.size() != ground_truth.size())
    throw ContractError("accuracy: list lengths differ");
  if (predictions.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == ground_truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

}  // namespace abc
