#include "abc/model.hpp"

#include <cstring>
#include <fstream>

namespace abc {

void ModelConfig::validate() const {
  if (grid == 0 || channels == 0 || reduced_channels == 0 || embed_dim == 0 ||
      hidden_dim == 0)
    throw ConfigError("model dimensions must be positive");
  if (reduced_channels > channels)
    throw ConfigError("reduced channel count exceeds feature channels");
  if (kernel_h % 2 == 0 || kernel_w % 2 == 0)
    throw ConfigError("attention kernel extents must be odd");
  if (image_size == 0 || image_size % grid != 0)
    throw ConfigError("image size must be a positive multiple of the grid");
  if (hist_hue * hist_sat * hist_val + 3 != channels)
    throw ConfigError("channel count does not match histogram bins + mean RGB");
  if (rgb_scale <= 0.0) throw ConfigError("rgb scale must be positive");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"grid", grid},
          {"channels", channels},
          {"reduced_channels", reduced_channels},
          {"embed_dim", embed_dim},
          {"hidden_dim", hidden_dim},
          {"kernel_h", kernel_h},
          {"kernel_w", kernel_w},
          {"attention", attention},
          {"image_size", image_size},
          {"hist_hue", hist_hue},
          {"hist_sat", hist_sat},
          {"hist_val", hist_val},
          {"rgb_scale", rgb_scale}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.grid = j.at("grid").get<std::size_t>();
  c.channels = j.at("channels").get<std::size_t>();
  c.reduced_channels = j.at("reduced_channels").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.kernel_h = j.at("kernel_h").get<std::size_t>();
  c.kernel_w = j.at("kernel_w").get<std::size_t>();
  c.attention = j.at("attention").get<bool>();
  c.image_size = j.at("image_size").get<std::size_t>();
  c.hist_hue = j.at("hist_hue").get<std::size_t>();
  c.hist_sat = j.at("hist_sat").get<std::size_t>();
  c.hist_val = j.at("hist_val").get<std::size_t>();
  c.rgb_scale = j.value("rgb_scale", 1.0);
  return c;
}

void ActivationProbe::collect(const std::string& name, const Tensor& t) {
  auto& bucket = samples[name];
  bucket.insert(bucket.end(), t.data(), t.data() + t.size());
}

Model::Model(ModelConfig config, Vocabulary question_vocab,
             AnswerVocabulary answer_vocab)
    : config_(std::move(config)),
      qvocab_(std::move(question_vocab)),
      avocab_(std::move(answer_vocab)) {
  config_.validate();
  if (avocab_.size() < 2)
    throw ConfigError("answer dictionary needs at least two words");
  const std::size_t n = config_.grid;

  embedding = Tensor::zeros({qvocab_.size(), config_.embed_dim}, true);
  lstm = LstmParams::zeros(config_.embed_dim, config_.hidden_dim, true);
  att = AttentionParams::zeros(config_.channels, config_.reduced_channels,
                               config_.hidden_dim, config_.kernel_h,
                               config_.kernel_w, true, config_.attention);
  ans = AnswerParams::zeros(config_.hidden_dim, config_.feature_size(),
                            config_.reduced_size(), config_.hidden_dim,
                            avocab_.size(), true);
  uniform_map_ =
      Tensor::full({n, n}, 1.0 / static_cast<double>(n * n), false);

  params_ = {{"embedding", embedding},
             {"lstm.W_vi", lstm.W_vi}, {"lstm.W_hi", lstm.W_hi}, {"lstm.b_i", lstm.b_i},
             {"lstm.W_vf", lstm.W_vf}, {"lstm.W_hf", lstm.W_hf}, {"lstm.b_f", lstm.b_f},
             {"lstm.W_vo", lstm.W_vo}, {"lstm.W_ho", lstm.W_ho}, {"lstm.b_o", lstm.b_o},
             {"lstm.W_vg", lstm.W_vg}, {"lstm.W_hg", lstm.W_hg}, {"lstm.b_g", lstm.b_g}};
  if (config_.attention) {
    params_.emplace_back("att.W_sk", att.W_sk);
    params_.emplace_back("att.b_k", att.b_k);
  }
  params_.emplace_back("att.W_reduce", att.W_reduce);
  params_.emplace_back("ans.W_ih", ans.W_ih);
  params_.emplace_back("ans.W_rh", ans.W_rh);
  params_.emplace_back("ans.W_sh", ans.W_sh);
  params_.emplace_back("ans.b_h", ans.b_h);
  params_.emplace_back("ans.W_ha", ans.W_ha);
  params_.emplace_back("ans.b_a", ans.b_a);
}

Model::Forward Model::forward(Graph& g, const Tensor& features,
                              const std::vector<std::size_t>& token_ids,
                              ActivationProbe* probe) const {
  if (features.rank() != 3 || features.extent(0) != config_.channels ||
      features.extent(1) != config_.grid || features.extent(2) != config_.grid)
    throw DimensionError("feature map does not match the model configuration");

  LstmTraceFn on_step;
  if (probe) {
    on_step = [probe](const LstmStepTrace& t) {
      probe->collect("lstm_i", t.z_i);
      probe->collect("lstm_f", t.z_f);
      probe->collect("lstm_o", t.z_o);
      probe->collect("lstm_g", t.z_g);
    };
  }

  Forward out;
  out.s = encode_question(g, token_ids, embedding, lstm, on_step);

  if (config_.attention) {
    Tensor kernel_pre;
    Tensor cck = configure_kernel(g, out.s, att, probe ? &kernel_pre : nullptr);
    if (probe) probe->collect("cck", kernel_pre);
    out.attention = attention_map(g, cck, features);
  } else {
    out.attention = uniform_map_;
  }

  Tensor weighted = weight_features(g, features, out.attention);
  Tensor reduced = reduce_channels(g, weighted, att);
  if (probe) probe->collect("reduce", reduced);

  Tensor fusion_pre;
  out.fused = fuse(g, features, reduced, out.s, ans,
                   probe ? &fusion_pre : nullptr);
  if (probe) probe->collect("fusion", fusion_pre);

  Tensor logits = answer_logits(g, out.fused, ans);
  if (probe) probe->collect("logits", logits);
  out.probs = softmax(g, logits);
  return out;
}

Model::Forward Model::forward(Graph& g, const Tensor& features,
                              const std::string& question) const {
  return forward(g, features, qvocab_.encode(tokenize(question)));
}

Tensor Model::loss(Graph& g, const Forward& f, std::size_t target) const {
  return cross_entropy_loss(g, f.probs, target);
}

Tensor Model::parameter(const std::string& name) const {
  for (const auto& [n, t] : params_)
    if (n == name) return t;
  throw ContractError("no such parameter: " + name);
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

void Model::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

namespace {

constexpr char kMagic[8] = {'A', 'B', 'C', 'C', 'N', 'N', '0', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.write(buf, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.write(buf, 8);
}

std::uint32_t read_u32(std::istream& in) {
  char buf[4];
  in.read(buf, 4);
  if (!in) throw IoError("truncated checkpoint");
  std::uint32_t v;
  std::memcpy(&v, buf, 4);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  char buf[8];
  in.read(buf, 8);
  if (!in) throw IoError("truncated checkpoint");
  std::uint64_t v;
  std::memcpy(&v, buf, 8);
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const std::uint32_t len = read_u32(in);
  if (len > (1u << 24)) throw IoError("implausible string length in checkpoint");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw IoError("truncated checkpoint");
  return s;
}

void write_words(std::ostream& out, const std::vector<std::string>& words) {
  write_u32(out, static_cast<std::uint32_t>(words.size()));
  for (const std::string& w : words) write_string(out, w);
}

std::vector<std::string> read_words(std::istream& in) {
  const std::uint32_t n = read_u32(in);
  if (n > (1u << 22)) throw IoError("implausible vocabulary size in checkpoint");
  std::vector<std::string> words;
  words.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) words.push_back(read_string(in));
  return words;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const nlohmann::json& run_config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  nlohmann::json header;
  header["model"] = model.config().to_json();
  header["run"] = run_config;
  write_string(out, header.dump());
  write_u64(out, model.question_vocab().hash());
  write_u64(out, model.answer_vocab().hash());
  write_words(out, model.question_vocab().words());
  write_words(out, model.answer_vocab().words());
  write_u32(out, static_cast<std::uint32_t>(model.parameters().size()));
  for (const auto& [name, tensor] : model.parameters()) {
    write_string(out, name);
    write_tensor(out, tensor);
  }
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path,
                      nlohmann::json* run_config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("not a checkpoint file: " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(read_string(in));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad checkpoint header: ") + e.what());
  }
  ModelConfig config = ModelConfig::from_json(header.at("model"));
  if (run_config) *run_config = header.value("run", nlohmann::json::object());

  const std::uint64_t qhash = read_u64(in);
  const std::uint64_t ahash = read_u64(in);
  Vocabulary qvocab = Vocabulary::from_words(read_words(in));
  AnswerVocabulary avocab = AnswerVocabulary::from_words(read_words(in));
  if (qvocab.hash() != qhash || avocab.hash() != ahash)
    throw IoError("checkpoint vocabulary hashes do not match their contents");

  Model model(config, std::move(qvocab), std::move(avocab));
  const std::uint32_t count = read_u32(in);
  if (count != model.parameters().size())
    throw IoError("checkpoint parameter count does not match the configuration");
  for (const auto& [name, tensor] : model.parameters()) {
    const std::string stored = read_string(in);
    if (stored != name)
      throw IoError("checkpoint parameter order mismatch: expected " + name +
                    ", found " + stored);
    Tensor loaded = read_tensor(in);
    if (loaded.shape() != tensor.shape())
      throw IoError("checkpoint parameter shape mismatch for " + name);
    Tensor dst = tensor;
    dst.array() = loaded.array();
  }
  return model;
}

}  // namespace abc
