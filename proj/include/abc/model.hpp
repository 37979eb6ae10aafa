#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "abc/answer.hpp"
#include "abc/attention.hpp"
#include "abc/lstm.hpp"
#include "abc/vocab.hpp"

namespace abc {

// Architecture and feature-extraction settings. hidden_dim is shared by the
// LSTM state, the question embedding, and the fused feature, since the
// question embedding is a mean of hidden states.
struct ModelConfig {
  std::size_t grid = 3;
  std::size_t channels = 183;  // 10*6*3 HSV bins + mean RGB
  std::size_t reduced_channels = 32;
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  bool attention = true;
  // Echoed for single-image prediction.
  std::size_t image_size = 48;
  std::size_t hist_hue = 10, hist_sat = 6, hist_val = 3;
  double rgb_scale = 1.0;

  std::size_t feature_size() const { return channels * grid * grid; }
  std::size_t reduced_size() const { return reduced_channels * grid * grid; }
  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Collects flattened copies of named intermediate activations; used by the
// initialization pass to measure pre-activation statistics.
struct ActivationProbe {
  std::map<std::string, std::vector<double>> samples;
  void collect(const std::string& name, const Tensor& t);
};

// The full question-guided attention model: embedding, question LSTM,
// attention extraction, channel reduction, and the answer classifier. In
// no-attention mode the map is a fixed uniform 1/N^2 and the kernel
// projection parameters do not exist; everything else is identical.
class Model {
 public:
  Model(ModelConfig config, Vocabulary question_vocab,
        AnswerVocabulary answer_vocab);

  const ModelConfig& config() const { return config_; }
  const Vocabulary& question_vocab() const { return qvocab_; }
  const AnswerVocabulary& answer_vocab() const { return avocab_; }

  struct Forward {
    Tensor s;          // dense question embedding
    Tensor attention;  // N x N map
    Tensor fused;      // projected feature h
    Tensor probs;      // answer probabilities
  };

  Forward forward(Graph& g, const Tensor& features,
                  const std::vector<std::size_t>& token_ids,
                  ActivationProbe* probe = nullptr) const;

  Forward forward(Graph& g, const Tensor& features,
                  const std::string& question) const;

  Tensor loss(Graph& g, const Forward& f, std::size_t target) const;

  // Named parameters in fixed construction order; this is also the
  // checkpoint order and the optimizer-state order.
  const std::vector<std::pair<std::string, Tensor>>& parameters() const {
    return params_;
  }
  Tensor parameter(const std::string& name) const;
  std::size_t parameter_count() const;  // total scalar count
  void zero_grad();

  Tensor embedding;
  LstmParams lstm;
  AttentionParams att;
  AnswerParams ans;

 private:
  ModelConfig config_;
  Vocabulary qvocab_;
  AnswerVocabulary avocab_;
  Tensor uniform_map_;
  std::vector<std::pair<std::string, Tensor>> params_;
};

// Checkpoint: magic, config echo (model config plus free-form run settings),
// vocabulary hashes, both vocabularies, then the named parameter tensors in
// the autodiff serialization.
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const nlohmann::json& run_config);
Model load_checkpoint(const std::filesystem::path& path,
                      nlohmann::json* run_config = nullptr);

}  // namespace abc
