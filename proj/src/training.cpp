#include "abc/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace abc {

LoadedSplit load_split(const std::filesystem::path& dataset_dir,
                       const std::string& jsonl_name,
                       const ModelConfig& config) {
  LoadedSplit split;
  split.items = shapeworld::read_jsonl(dataset_dir / jsonl_name);
  split.features.reserve(split.items.size());
  const shapeworld::HistogramBins bins{config.hist_hue, config.hist_sat,
                                       config.hist_val};
  for (const shapeworld::QaItem& item : split.items) {
    shapeworld::Image img = shapeworld::read_ppm(dataset_dir / item.image_path);
    split.features.push_back(
        shapeworld::cell_features(img, config.grid, bins, config.rgb_scale));
  }
  return split;
}

std::vector<Example> prepare_examples(const Model& model,
                                      const LoadedSplit& split) {
  if (split.items.size() != split.features.size())
    throw ContractError("split items and features are out of step");
  std::vector<Example> out;
  out.reserve(split.items.size());
  for (std::size_t i = 0; i < split.items.size(); ++i) {
    const shapeworld::QaItem& item = split.items[i];
    Example ex;
    ex.features = split.features[i];
    ex.token_ids = model.question_vocab().encode(tokenize(item.question));
    ex.answer = item.answer;
    ex.target = model.answer_vocab().contains(item.answer)
                    ? model.answer_vocab().lookup(item.answer)
                    : kNoTarget;
    ex.category = item.category;
    ex.gt_cells = item.gt_cells;
    out.push_back(std::move(ex));
  }
  return out;
}

OptimizerState OptimizerState::for_params(
    const std::vector<std::pair<std::string, Tensor>>& params, double rho,
    double epsilon, double lr_scale) {
  OptimizerState state;
  state.rho = rho;
  state.epsilon = epsilon;
  state.lr_scale = lr_scale;
  for (const auto& [name, t] : params) {
    state.avg_sq_grad.emplace_back(
        Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(t.size())));
    state.avg_sq_update.emplace_back(
        Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(t.size())));
  }
  return state;
}

void adadelta_step(OptimizerState& state,
                   const std::vector<std::pair<std::string, Tensor>>& params) {
  if (state.avg_sq_grad.size() != params.size())
    throw DimensionError("optimizer state does not match the parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].second;
    Eigen::ArrayXd& eg2 = state.avg_sq_grad[i];
    Eigen::ArrayXd& ex2 = state.avg_sq_update[i];
    if (eg2.size() != static_cast<Eigen::Index>(t.size()))
      throw DimensionError("optimizer state shape mismatch for " +
                           params[i].first);
    const auto g = t.grad();
    eg2 = state.rho * eg2 + (1.0 - state.rho) * g.square();
    const Eigen::ArrayXd dx =
        -((ex2 + state.epsilon).sqrt() / (eg2 + state.epsilon).sqrt()) * g;
    ex2 = state.rho * ex2 + (1.0 - state.rho) * dx.square();
    t.array() += state.lr_scale * dx;
  }
}

namespace {

struct LayerGroup {
  std::string probe_key;
  std::vector<Tensor> weights;
  // Rescaling exponent. The recurrent gates feed their own statistics back
  // through h, which makes the std respond superlinearly to a weight scale;
  // a damped update keeps the fixed-point iteration from oscillating.
  double damping = 1.0;
};

std::vector<LayerGroup> layer_groups(Model& model) {
  const double gate_damping = 0.6;
  std::vector<LayerGroup> groups = {
      {"lstm_i", {model.lstm.W_vi, model.lstm.W_hi}, gate_damping},
      {"lstm_f", {model.lstm.W_vf, model.lstm.W_hf}, gate_damping},
      {"lstm_o", {model.lstm.W_vo, model.lstm.W_ho}, gate_damping},
      {"lstm_g", {model.lstm.W_vg, model.lstm.W_hg}, gate_damping},
  };
  if (model.config().attention)
    groups.push_back({"cck", {model.att.W_sk}});
  groups.push_back({"reduce", {model.att.W_reduce}});
  groups.push_back({"fusion", {model.ans.W_ih, model.ans.W_rh, model.ans.W_sh}});
  groups.push_back({"logits", {model.ans.W_ha}});
  return groups;
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2)
    throw NumericError("not enough activation samples to estimate a std");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return std::sqrt(var);
}

std::size_t fan_in(const Tensor& t) {
  std::size_t f = 1;
  for (std::size_t a = 1; a < t.rank(); ++a) f *= t.extent(a);
  return f;
}

}  // namespace

void init_params(Model& model, const std::vector<Example>& calibration,
                 Rng& rng, std::size_t max_passes) {
  if (calibration.empty())
    throw ConfigError("init_params: calibration batch is empty");

  for (auto& [name, t] : model.parameters()) {
    Tensor tensor = t;
    if (name == "embedding") {
      for (std::size_t i = 0; i < tensor.size(); ++i)
        tensor.data()[i] = rng.uniform(-0.08, 0.08);
    } else if (name.find(".b_") != std::string::npos) {
      tensor.array() = 0.0;
    } else {
      const double r = 1.0 / std::sqrt(static_cast<double>(fan_in(tensor)));
      for (std::size_t i = 0; i < tensor.size(); ++i)
        tensor.data()[i] = rng.uniform(-r, r);
    }
  }

  auto groups = layer_groups(model);
  const double lo = 0.9;
  const double hi = 1.1;
  bool normalized = false;
  for (std::size_t pass = 0; pass < max_passes && !normalized; ++pass) {
    ActivationProbe probe;
    for (const Example& ex : calibration) {
      Graph g;
      model.forward(g, ex.features, ex.token_ids, &probe);
    }
    normalized = true;
    for (LayerGroup& group : groups) {
      const auto it = probe.samples.find(group.probe_key);
      if (it == probe.samples.end())
        throw NumericError("no activation samples for layer " + group.probe_key);
      for (double v : it->second)
        if (!std::isfinite(v))
          throw NumericError("non-finite activations during initialization");
      const double sd = sample_std(it->second);
      if (sd >= lo && sd <= hi) continue;
      if (sd <= 0.0)
        throw NumericError("degenerate activations in layer " + group.probe_key);
      normalized = false;
      const double factor = std::pow(1.0 / sd, group.damping);
      for (Tensor& w : group.weights) w.array() *= factor;
    }
  }
  if (!normalized)
    throw NumericError("initialization failed to reach unit activation scale");
}

namespace {

double set_accuracy(const Model& model, const std::vector<Example>& examples) {
  if (examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const Example& ex : examples) {
    Graph g;
    Model::Forward f = model.forward(g, ex.features, ex.token_ids);
    const std::size_t idx = argmax_lowest(f.probs);
    if (model.answer_vocab().word(idx) == ex.answer) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

double mean_loss(const Model& model, const std::vector<Example>& examples) {
  double total = 0.0;
  for (const Example& ex : examples) {
    Graph g;
    Model::Forward f = model.forward(g, ex.features, ex.token_ids);
    total += model.loss(g, f, ex.target).value();
  }
  return total / static_cast<double>(examples.size());
}

}  // namespace

TrainResult train(Model& model, const TrainConfig& config,
                  const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set,
                  const EpochCallback& per_epoch) {
  if (train_set.empty()) throw ConfigError("train: empty dataset");
  if (config.batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  for (const Example& ex : train_set)
    if (ex.target == kNoTarget)
      throw ConfigError("train answer missing from the answer vocabulary: " +
                        ex.answer);

  OptimizerState state = OptimizerState::for_params(
      model.parameters(), config.rho, config.epsilon, config.learning_rate);
  Rng batch_rng(derive_seed(config.seed, 11));

  TrainResult result;
  result.initial_loss = mean_loss(model, train_set);

  const std::size_t n = train_set.size();
  const std::size_t steps_per_epoch = std::max<std::size_t>(1, n / config.batch_size);
  const double inv_batch = 1.0 / static_cast<double>(config.batch_size);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      model.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < config.batch_size; ++b) {
        const std::size_t idx = static_cast<std::size_t>(batch_rng.below(n));
        const Example& ex = train_set[idx];
        Graph g;
        Model::Forward f = model.forward(g, ex.features, ex.token_ids);
        Tensor item_loss = model.loss(g, f, ex.target);
        batch_loss += item_loss.value();
        g.backward(scale(g, item_loss, inv_batch));
      }
      batch_loss *= inv_batch;
      if (!std::isfinite(batch_loss))
        throw NumericError("training aborted: non-finite loss at epoch " +
                           std::to_string(epoch) + ", step " +
                           std::to_string(step));
      adadelta_step(state, model.parameters());
      epoch_loss += batch_loss;
    }
    EpochRow row;
    row.epoch = epoch;
    row.loss = epoch_loss / static_cast<double>(steps_per_epoch);
    row.train_acc = set_accuracy(model, train_set);
    row.val_acc = set_accuracy(model, val_set);
    result.history.push_back(row);
    if (per_epoch) per_epoch(model, row);
  }
  return result;
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<EpochRow>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open history file for writing: " + path.string());
  out << "epoch,loss,train_acc,val_acc\n";
  char buf[128];
  for (const EpochRow& row : history) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", row.epoch,
                  row.loss, row.train_acc, row.val_acc);
    out << buf;
  }
  if (!out) throw IoError("failed writing history file: " + path.string());
}

Evaluation evaluate(const Model& model, const std::vector<Example>& examples,
                    const Taxonomy& taxonomy, std::size_t jobs) {
  Evaluation ev;
  const std::size_t n = examples.size();
  ev.predictions.assign(n, std::string());
  ev.gt_attention_mass.assign(n, 0.0);

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Example& ex = examples[i];
      Graph g;
      Model::Forward f = model.forward(g, ex.features, ex.token_ids);
      ev.predictions[i] = model.answer_vocab().word(argmax_lowest(f.probs));
      double mass = 0.0;
      for (const auto& [r, c] : ex.gt_cells) mass += f.attention.at(r, c);
      ev.gt_attention_mass[i] = mass;
    }
  };

  if (jobs <= 1 || n < 2) {
    run_range(0, n);
  } else {
    const std::size_t workers = std::min<std::size_t>(jobs, n);
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_range, begin, end);
    }
    for (std::thread& t : pool) t.join();
  }

  std::vector<std::string> truth;
  truth.reserve(n);
  for (const Example& ex : examples) truth.push_back(ex.answer);

  ev.report.total = n;
  ev.report.acc = accuracy(ev.predictions, truth);
  ev.report.wups09 = wups_score(ev.predictions, truth, 0.9, taxonomy);
  ev.report.wups00 = wups_score(ev.predictions, truth, 0.0, taxonomy);
  std::map<std::string, std::size_t> hits;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string cat = shapeworld::category_name(examples[i].category);
    ev.report.category_count[cat] += 1;
    if (ev.predictions[i] == truth[i]) hits[cat] += 1;
  }
  for (const auto& [cat, count] : ev.report.category_count)
    ev.report.per_category[cat] =
        static_cast<double>(hits[cat]) / static_cast<double>(count);
  return ev;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json per_category = nlohmann::json::object();
  for (const auto& [cat, acc] : report.per_category) per_category[cat] = acc;
  return {{"acc", report.acc},
          {"wups09", report.wups09},
          {"wups00", report.wups00},
          {"per_category", per_category}};
}

}  // namespace abc
