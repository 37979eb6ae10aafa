// abccnn: generate synthetic shape-scene VQA data, train the question-guided
// attention model, evaluate it, and answer single questions with an exported
// attention map.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "abc/errors.hpp"
#include "abc/model.hpp"
#include "abc/shapeworld.hpp"
#include "abc/training.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "abccnn 1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIncompatible = 4;

std::array<double, 4> parse_proportions(const std::string& text) {
  std::array<double, 4> props{};
  std::array<bool, 4> seen{};
  std::stringstream stream(text);
  std::string part;
  while (std::getline(stream, part, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos)
      throw abc::ConfigError("proportions must be name=value pairs: " + part);
    const std::string name = part.substr(0, eq);
    double value = 0.0;
    try {
      value = std::stod(part.substr(eq + 1));
    } catch (const std::logic_error&) {
      throw abc::ConfigError("bad proportion value in: " + part);
    }
    const abc::shapeworld::Category cat =
        abc::shapeworld::category_from_name(name);
    const auto i = static_cast<std::size_t>(cat);
    if (seen[i]) throw abc::ConfigError("duplicate proportion for " + name);
    seen[i] = true;
    props[i] = value;
  }
  for (std::size_t i = 0; i < 4; ++i)
    if (!seen[i])
      throw abc::ConfigError(
          "proportions must name all of object, number, color, location");
  return props;
}

struct DimFlags {
  std::size_t reduced_channels = 32;
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t kernel_size = 1;
  double rgb_scale = 1.0;
};

abc::ModelConfig model_config_from(const nlohmann::json& manifest,
                                   const DimFlags& dims, bool attention) {
  abc::ModelConfig cfg;
  cfg.grid = manifest.value("grid", std::size_t{3});
  cfg.image_size = manifest.value("image_size", std::size_t{48});
  cfg.channels = cfg.hist_hue * cfg.hist_sat * cfg.hist_val + 3;
  cfg.reduced_channels = dims.reduced_channels;
  cfg.embed_dim = dims.embed_dim;
  cfg.hidden_dim = dims.hidden_dim;
  cfg.kernel_h = cfg.kernel_w = dims.kernel_size;
  cfg.rgb_scale = dims.rgb_scale;
  cfg.attention = attention;
  return cfg;
}

nlohmann::json read_manifest(const fs::path& data_dir) {
  const fs::path path = data_dir / "manifest.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw abc::IoError("missing dataset manifest: " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw abc::IoError("bad manifest: " + std::string(e.what()));
  }
}

// Vocabularies come from the dataset when present and are rebuilt from the
// train split otherwise (external datasets in the same JSON Lines format).
std::pair<abc::Vocabulary, abc::AnswerVocabulary> dataset_vocabs(
    const fs::path& data_dir, const abc::LoadedSplit& train) {
  const fs::path qpath = data_dir / "question_vocab.txt";
  const fs::path apath = data_dir / "answer_vocab.txt";
  if (fs::exists(qpath) && fs::exists(apath))
    return {abc::Vocabulary::load(qpath), abc::AnswerVocabulary::load(apath)};
  std::vector<std::string> questions;
  std::vector<std::string> answers;
  for (const auto& item : train.items) {
    questions.push_back(item.question);
    answers.push_back(item.answer);
  }
  return {abc::Vocabulary::build(questions),
          abc::AnswerVocabulary::build(answers)};
}

void print_report(const abc::EvalReport& report) {
  std::printf("acc %.4f  wups09 %.4f  wups00 %.4f\n", report.acc,
              report.wups09, report.wups00);
  for (const auto& [cat, acc] : report.per_category)
    std::printf("  %-9s %.4f  (%zu items)\n", cat.c_str(), acc,
                report.category_count.at(cat));
}

int cmd_generate(const fs::path& out_dir, abc::shapeworld::DatasetConfig cfg) {
  abc::shapeworld::generate_dataset(cfg, out_dir);
  std::printf("wrote %zu train and %zu test items under %s\n", cfg.train_count,
              cfg.test_count, out_dir.string().c_str());
  return kExitOk;
}

int cmd_train(const fs::path& data_dir, const fs::path& out_dir,
              abc::TrainConfig config) {
  fs::create_directories(out_dir);
  const nlohmann::json manifest = read_manifest(data_dir);
  config.model.grid = manifest.value("grid", config.model.grid);
  config.model.image_size = manifest.value("image_size", config.model.image_size);

  abc::LoadedSplit train_split = load_split(data_dir, "train.jsonl", config.model);
  abc::LoadedSplit test_split = load_split(data_dir, "test.jsonl", config.model);
  auto [qvocab, avocab] = dataset_vocabs(data_dir, train_split);

  abc::Model model(config.model, std::move(qvocab), std::move(avocab));
  std::vector<abc::Example> train_set = prepare_examples(model, train_split);
  std::vector<abc::Example> val_set = prepare_examples(model, test_split);

  const std::size_t calibration =
      std::min<std::size_t>(config.batch_size, train_set.size());
  abc::Rng init_rng(abc::derive_seed(config.seed, 7));
  abc::init_params(model,
                   {train_set.begin(),
                    train_set.begin() + static_cast<std::ptrdiff_t>(calibration)},
                   init_rng);

  nlohmann::json run_config = {{"seed", config.seed},
                               {"batch_size", config.batch_size},
                               {"learning_rate", config.learning_rate},
                               {"epochs", config.epochs},
                               {"data", data_dir.string()}};

  std::vector<abc::EpochRow> history;
  auto per_epoch = [&](const abc::Model& m, const abc::EpochRow& row) {
    history.push_back(row);
    abc::save_checkpoint(out_dir / "checkpoint.bin", m, run_config);
    abc::write_history_csv(out_dir / "history.csv", history);
    std::printf("epoch %3zu  loss %.4f  train_acc %.4f  val_acc %.4f\n",
                row.epoch, row.loss, row.train_acc, row.val_acc);
    std::fflush(stdout);
  };

  abc::TrainResult result = abc::train(model, config, train_set, val_set, per_epoch);

  abc::Taxonomy taxonomy = fs::exists(data_dir / "taxonomy.txt")
                               ? abc::Taxonomy::load(data_dir / "taxonomy.txt")
                               : abc::shapeworld::default_taxonomy();
  abc::Evaluation ev = abc::evaluate(model, val_set, taxonomy);
  std::printf("final test metrics:\n");
  print_report(ev.report);
  std::printf("initial loss %.4f, final loss %.4f\n", result.initial_loss,
              result.history.empty() ? result.initial_loss
                                     : result.history.back().loss);
  return kExitOk;
}

int cmd_eval(const fs::path& checkpoint, const fs::path& data_dir,
             const std::string& split, const fs::path& report_path,
             std::size_t jobs) {
  abc::Model model = abc::load_checkpoint(checkpoint);

  // A checkpoint only pairs with the dataset whose vocabularies it was
  // trained on.
  const fs::path qpath = data_dir / "question_vocab.txt";
  const fs::path apath = data_dir / "answer_vocab.txt";
  if (fs::exists(qpath) && fs::exists(apath)) {
    if (abc::Vocabulary::load(qpath).hash() != model.question_vocab().hash() ||
        abc::AnswerVocabulary::load(apath).hash() != model.answer_vocab().hash())
      throw abc::CompatibilityError(
          "checkpoint vocabularies do not match the dataset");
  }

  abc::LoadedSplit loaded = load_split(data_dir, split + ".jsonl", model.config());
  std::vector<abc::Example> examples = prepare_examples(model, loaded);
  abc::Taxonomy taxonomy = fs::exists(data_dir / "taxonomy.txt")
                               ? abc::Taxonomy::load(data_dir / "taxonomy.txt")
                               : abc::shapeworld::default_taxonomy();
  abc::Evaluation ev = abc::evaluate(model, examples, taxonomy, jobs);
  print_report(ev.report);
  std::ofstream out(report_path, std::ios::binary);
  if (!out) throw abc::IoError("cannot write report: " + report_path.string());
  out << report_to_json(ev.report).dump(2) << '\n';
  return kExitOk;
}

int cmd_predict(const fs::path& checkpoint, const fs::path& image_path,
                const std::string& question, const fs::path& out_dir) {
  abc::Model model = abc::load_checkpoint(checkpoint);
  const abc::ModelConfig& cfg = model.config();

  abc::shapeworld::Image img = abc::shapeworld::read_ppm(image_path);
  if (img.width % cfg.grid != 0 || img.height % cfg.grid != 0)
    throw abc::ConfigError("image dimensions are not divisible by the grid");
  abc::Tensor features = abc::shapeworld::cell_features(
      img, cfg.grid, {cfg.hist_hue, cfg.hist_sat, cfg.hist_val},
      cfg.rgb_scale);

  abc::Graph g;
  abc::Model::Forward f = model.forward(g, features, question);
  const std::size_t idx = abc::argmax_lowest(f.probs);
  std::printf("%s %.6f\n", model.answer_vocab().word(idx).c_str(),
              f.probs.at(idx));

  fs::create_directories(out_dir);
  abc::write_attention_csv(f.attention, out_dir / "attention.csv");
  abc::write_attention_pgm(f.attention, out_dir / "attention.pgm");
  return kExitOk;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"question-guided attention VQA on synthetic shape scenes"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "key=value config file; flags win");
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic dataset");
  fs::path gen_out;
  abc::shapeworld::DatasetConfig dcfg;
  std::string proportions;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", dcfg.seed, "master seed");
  gen->add_option("--train", dcfg.train_count, "train item count");
  gen->add_option("--test", dcfg.test_count, "test item count");
  gen->add_option("--grid", dcfg.grid, "feature/attention grid N");
  gen->add_option("--image-size", dcfg.image_size, "square image extent");
  gen->add_option("--min-objects", dcfg.min_objects, "minimum objects per scene");
  gen->add_option("--max-objects", dcfg.max_objects, "maximum objects per scene");
  gen->add_option("--proportions", proportions,
                  "category mix, e.g. object=0.6984,number=0.0747,"
                  "color=0.1659,location=0.0610");

  // train
  auto* tr = app.add_subcommand("train", "train a model on a dataset");
  fs::path train_data, train_out;
  abc::TrainConfig tcfg;
  DimFlags dims;
  bool no_att = false;
  tr->add_option("--data", train_data, "dataset directory")->required();
  tr->add_option("--out", train_out, "output directory")->required();
  tr->add_option("--epochs", tcfg.epochs, "training epochs");
  tr->add_option("--seed", tcfg.seed, "training seed");
  tr->add_option("--batch", tcfg.batch_size, "minibatch size");
  tr->add_option("--lr", tcfg.learning_rate, "update scale");
  tr->add_option("--embed-dim", dims.embed_dim, "word embedding width");
  tr->add_option("--hidden-dim", dims.hidden_dim, "LSTM/fusion width");
  tr->add_option("--reduced-channels", dims.reduced_channels,
                 "channels after the 1x1 reduction");
  tr->add_option("--kernel-size", dims.kernel_size,
                 "attention kernel spatial extent (odd)");
  tr->add_option("--rgb-scale", dims.rgb_scale,
                 "magnitude of the mean-RGB feature block");
  tr->add_flag("--no-att", no_att, "disable attention (uniform map ablation)");

  // eval
  auto* ev = app.add_subcommand("eval", "score a checkpoint on a dataset split");
  fs::path eval_ckpt, eval_data, eval_report = "report.json";
  std::string eval_split = "test";
  std::size_t eval_jobs = 1;
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  ev->add_option("--data", eval_data, "dataset directory")->required();
  ev->add_option("--split", eval_split, "train or test")
      ->check(CLI::IsMember({"train", "test"}));
  ev->add_option("--report", eval_report, "where to write the JSON report");
  ev->add_option("--jobs", eval_jobs, "evaluation threads");

  // predict
  auto* pr = app.add_subcommand("predict", "answer one question about one image");
  fs::path pred_ckpt, pred_image, pred_out = ".";
  std::string pred_question;
  pr->add_option("--checkpoint", pred_ckpt, "checkpoint file")->required();
  pr->add_option("--image", pred_image, "PPM image")->required();
  pr->add_option("--question", pred_question, "question text")->required();
  pr->add_option("--out", pred_out, "directory for attention.csv/.pgm");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  if (gen->parsed()) {
    if (!proportions.empty()) dcfg.proportions = parse_proportions(proportions);
    return cmd_generate(gen_out, dcfg);
  }
  if (tr->parsed()) {
    tcfg.model = model_config_from(read_manifest(train_data), dims, !no_att);
    return cmd_train(train_data, train_out, tcfg);
  }
  if (ev->parsed())
    return cmd_eval(eval_ckpt, eval_data, eval_split, eval_report, eval_jobs);
  if (pr->parsed())
    return cmd_predict(pred_ckpt, pred_image, pred_question, pred_out);
  return kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const abc::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const abc::CompatibilityError& e) {
    std::fprintf(stderr, "incompatible inputs: %s\n", e.what());
    return kExitIncompatible;
  } catch (const abc::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
}
