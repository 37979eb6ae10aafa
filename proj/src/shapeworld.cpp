#include "abc/shapeworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "abc/errors.hpp"
#include "abc/vocab.hpp"

namespace abc::shapeworld {

namespace {

const std::vector<std::string> kShapeNames = {"circle", "square", "triangle"};
const std::vector<std::string> kShapePlurals = {"circles", "squares",
                                                "triangles"};
const std::vector<std::string> kColorNames = {"red", "green", "blue",
                                              "yellow"};
const std::vector<std::string> kCategoryNames = {"object", "number", "color",
                                                 "location"};
const std::vector<std::string> kNumberWords = {
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"};

const std::string& number_word(std::size_t n) {
  if (n < 1 || n > kNumberWords.size())
    throw ConfigError("counts outside one..nine are not representable");
  return kNumberWords[n - 1];
}

}  // namespace

const std::string& shape_name(ShapeKind s) {
  return kShapeNames[static_cast<std::size_t>(s)];
}

const std::string& color_name(ColorKind c) {
  return kColorNames[static_cast<std::size_t>(c)];
}

const std::string& category_name(Category c) {
  return kCategoryNames[static_cast<std::size_t>(c)];
}

Category category_from_name(const std::string& name) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i)
    if (kCategoryNames[i] == name) return static_cast<Category>(i);
  throw ConfigError("unknown question category: " + name);
}

Rgb color_rgb(ColorKind c) {
  switch (c) {
    case ColorKind::Red:
      return {255, 0, 0};
    case ColorKind::Green:
      return {0, 255, 0};
    case ColorKind::Blue:
      return {0, 0, 255};
    case ColorKind::Yellow:
      return {255, 255, 0};
  }
  throw ConfigError("unknown color");
}

Hsv rgb_to_hsv(Rgb p) {
  const double r = p.r / 255.0;
  const double g = p.g / 255.0;
  const double b = p.b / 255.0;
  const double hi = std::max({r, g, b});
  const double lo = std::min({r, g, b});
  const double delta = hi - lo;
  Hsv out;
  out.v = hi;
  out.s = hi > 0.0 ? delta / hi : 0.0;
  if (delta > 0.0) {
    double h;
    if (hi == r)
      h = std::fmod((g - b) / delta, 6.0);
    else if (hi == g)
      h = (b - r) / delta + 2.0;
    else
      h = (r - g) / delta + 4.0;
    h *= 60.0;
    if (h < 0.0) h += 360.0;
    out.h = h;
  }
  return out;
}

Scene generate_scene(Rng& rng, std::size_t grid, std::size_t min_count,
                     std::size_t max_count) {
  if (grid == 0) throw ConfigError("grid must be positive");
  if (min_count < 1 || min_count > max_count || max_count > grid * grid)
    throw ConfigError("impossible object count range");
  Scene scene;
  scene.grid = grid;
  scene.background = {0, 0, 0};
  const std::size_t count =
      min_count + static_cast<std::size_t>(rng.below(max_count - min_count + 1));
  const auto cells = rng.sample_without_replacement(grid * grid, count);
  for (std::size_t cell : cells) {
    SceneObject obj;
    obj.row = cell / grid;
    obj.col = cell % grid;
    obj.shape = kShapes[rng.below(kShapes.size())];
    obj.color = kColors[rng.below(kColors.size())];
    scene.objects.push_back(obj);
  }
  return scene;
}

namespace {

// Shapes are drawn in distinct brightness bands so the joint HSV histogram
// carries shape identity (via the V bins) the same way it carries color
// identity (via the H bins). The levels sit safely inside the three V bins
// of the default 10x6x3 binning.
double shape_brightness(ShapeKind s) {
  switch (s) {
    case ShapeKind::Circle:
      return 1.0;
    case ShapeKind::Square:
      return 0.55;
    case ShapeKind::Triangle:
      return 0.25;
  }
  return 1.0;
}

Rgb shaded(Rgb base, double brightness) {
  auto scale = [brightness](std::uint8_t v) {
    return static_cast<std::uint8_t>(
        std::lround(brightness * static_cast<double>(v)));
  };
  return {scale(base.r), scale(base.g), scale(base.b)};
}

bool inside_shape(ShapeKind shape, double dx, double dy, double e) {
  switch (shape) {
    case ShapeKind::Circle:
      return dx * dx + dy * dy <= e * e;
    case ShapeKind::Square:
      return std::abs(dx) <= e && std::abs(dy) <= e;
    case ShapeKind::Triangle:
      // Apex up: full base width at dy = +e, zero width at dy = -e.
      return dy >= -e && dy <= e && std::abs(dx) <= (dy + e) * 0.5;
  }
  return false;
}

}  // namespace

Image render(const Scene& scene, std::size_t image_size) {
  if (scene.objects.empty()) throw ConfigError("scene has no objects");
  if (image_size == 0 || image_size % scene.grid != 0)
    throw DimensionError("image size must be a positive multiple of the grid");
  Image img;
  img.width = img.height = image_size;
  img.pixels.assign(3 * image_size * image_size, 0);
  for (std::size_t i = 0; i < image_size * image_size; ++i) {
    img.pixels[3 * i] = scene.background.r;
    img.pixels[3 * i + 1] = scene.background.g;
    img.pixels[3 * i + 2] = scene.background.b;
  }
  const double cell = static_cast<double>(image_size) /
                      static_cast<double>(scene.grid);
  const double e = 0.3 * cell;
  const std::size_t cell_px = image_size / scene.grid;
  for (const SceneObject& obj : scene.objects) {
    const double cx = (static_cast<double>(obj.col) + 0.5) * cell;
    const double cy = (static_cast<double>(obj.row) + 0.5) * cell;
    const Rgb rgb = shaded(color_rgb(obj.color), shape_brightness(obj.shape));
    const std::size_t x0 = obj.col * cell_px;
    const std::size_t y0 = obj.row * cell_px;
    for (std::size_t y = y0; y < y0 + cell_px; ++y) {
      for (std::size_t x = x0; x < x0 + cell_px; ++x) {
        const double dx = static_cast<double>(x) + 0.5 - cx;
        const double dy = static_cast<double>(y) + 0.5 - cy;
        if (!inside_shape(obj.shape, dx, dy, e)) continue;
        const std::size_t i = 3 * (y * image_size + x);
        img.pixels[i] = rgb.r;
        img.pixels[i + 1] = rgb.g;
        img.pixels[i + 2] = rgb.b;
      }
    }
  }
  return img;
}

std::string position_word(std::size_t row, std::size_t col, std::size_t grid) {
  if (grid == 0) throw ConfigError("grid must be positive");
  if (row >= grid || col >= grid) throw ContractError("cell outside grid");
  const double mid = (static_cast<double>(grid) - 1.0) / 2.0;
  const double dr = static_cast<double>(row) - mid;
  const double dc = static_cast<double>(col) - mid;
  if (dr == 0.0 && dc == 0.0) return "center";
  if (std::abs(dr) >= std::abs(dc)) return dr < 0.0 ? "top" : "bottom";
  return dc < 0.0 ? "left" : "right";
}

std::optional<QaItem> generate_qa(const Scene& scene, Category category,
                                  Rng& rng) {
  QaItem item;
  item.category = category;
  switch (category) {
    case Category::Object: {
      // Needs a color that identifies exactly one object.
      std::map<ColorKind, std::vector<const SceneObject*>> by_color;
      for (const SceneObject& o : scene.objects) by_color[o.color].push_back(&o);
      std::vector<const SceneObject*> unique;
      for (ColorKind c : kColors) {
        auto it = by_color.find(c);
        if (it != by_color.end() && it->second.size() == 1)
          unique.push_back(it->second.front());
      }
      if (unique.empty()) return std::nullopt;
      const SceneObject* o = unique[rng.below(unique.size())];
      item.question = "what shape is the " + color_name(o->color) + " object";
      item.answer = shape_name(o->shape);
      item.gt_cells = {{o->row, o->col}};
      return item;
    }
    case Category::Number: {
      // Count either every object or every object of one present shape.
      std::vector<int> modes;  // -1 = all objects, else shape index
      if (scene.objects.size() <= kNumberWords.size()) modes.push_back(-1);
      for (std::size_t s = 0; s < kShapes.size(); ++s) {
        const std::size_t n = static_cast<std::size_t>(
            std::count_if(scene.objects.begin(), scene.objects.end(),
                          [&](const SceneObject& o) {
                            return o.shape == kShapes[s];
                          }));
        if (n >= 1 && n <= kNumberWords.size())
          modes.push_back(static_cast<int>(s));
      }
      if (modes.empty()) return std::nullopt;
      const int mode = modes[rng.below(modes.size())];
      std::size_t count = 0;
      for (const SceneObject& o : scene.objects) {
        if (mode >= 0 && o.shape != kShapes[static_cast<std::size_t>(mode)])
          continue;
        ++count;
        item.gt_cells.emplace_back(o.row, o.col);
      }
      item.question = mode < 0 ? "how many objects are there"
                               : "how many " +
                                     kShapePlurals[static_cast<std::size_t>(
                                         mode)] +
                                     " are there";
      item.answer = number_word(count);
      return item;
    }
    case Category::Color: {
      // Needs a shape that appears exactly once.
      std::vector<const SceneObject*> unique;
      for (std::size_t s = 0; s < kShapes.size(); ++s) {
        const SceneObject* only = nullptr;
        std::size_t n = 0;
        for (const SceneObject& o : scene.objects)
          if (o.shape == kShapes[s]) {
            only = &o;
            ++n;
          }
        if (n == 1) unique.push_back(only);
      }
      if (unique.empty()) return std::nullopt;
      const SceneObject* o = unique[rng.below(unique.size())];
      item.question = "what is the color of the " + shape_name(o->shape);
      item.answer = color_name(o->color);
      item.gt_cells = {{o->row, o->col}};
      return item;
    }
    case Category::Location: {
      // Needs a (color, shape) pair that identifies exactly one object.
      std::vector<const SceneObject*> unique;
      for (const SceneObject& a : scene.objects) {
        const std::size_t n = static_cast<std::size_t>(std::count_if(
            scene.objects.begin(), scene.objects.end(),
            [&](const SceneObject& b) {
              return a.shape == b.shape && a.color == b.color;
            }));
        if (n == 1) unique.push_back(&a);
      }
      if (unique.empty()) return std::nullopt;
      const SceneObject* o = unique[rng.below(unique.size())];
      item.question =
          "where is the " + color_name(o->color) + " " + shape_name(o->shape);
      item.answer = position_word(o->row, o->col, scene.grid);
      item.gt_cells = {{o->row, o->col}};
      return item;
    }
  }
  throw ConfigError("unknown question category");
}

Tensor cell_features(const Image& image, std::size_t grid,
                     const HistogramBins& bins, double rgb_scale) {
  if (rgb_scale <= 0.0) throw ConfigError("rgb scale must be positive");
  if (grid == 0) throw ConfigError("grid must be positive");
  if (image.width % grid != 0 || image.height % grid != 0)
    throw DimensionError("image dimensions are not divisible by the grid");
  if (bins.hue == 0 || bins.sat == 0 || bins.val == 0)
    throw ConfigError("histogram bin counts must be positive");
  const std::size_t cw = image.width / grid;
  const std::size_t ch = image.height / grid;
  const std::size_t nbins = bins.total();
  const std::size_t depth = nbins + 3;
  Tensor features = Tensor::zeros({depth, grid, grid});
  const double inv_count = 1.0 / static_cast<double>(cw * ch);
  for (std::size_t row = 0; row < grid; ++row) {
    for (std::size_t col = 0; col < grid; ++col) {
      double mean_r = 0.0, mean_g = 0.0, mean_b = 0.0;
      for (std::size_t y = row * ch; y < (row + 1) * ch; ++y) {
        for (std::size_t x = col * cw; x < (col + 1) * cw; ++x) {
          const Rgb px = image.pixel(x, y);
          const Hsv hsv = rgb_to_hsv(px);
          const std::size_t hb = std::min(
              bins.hue - 1, static_cast<std::size_t>(hsv.h / 360.0 *
                                                     static_cast<double>(bins.hue)));
          const std::size_t sb = std::min(
              bins.sat - 1,
              static_cast<std::size_t>(hsv.s * static_cast<double>(bins.sat)));
          const std::size_t vb = std::min(
              bins.val - 1,
              static_cast<std::size_t>(hsv.v * static_cast<double>(bins.val)));
          const std::size_t bin = (hb * bins.sat + sb) * bins.val + vb;
          features.at(bin, row, col) += inv_count;
          mean_r += px.r;
          mean_g += px.g;
          mean_b += px.b;
        }
      }
      features.at(nbins, row, col) = rgb_scale * mean_r * inv_count / 255.0;
      features.at(nbins + 1, row, col) = rgb_scale * mean_g * inv_count / 255.0;
      features.at(nbins + 2, row, col) = rgb_scale * mean_b * inv_count / 255.0;
    }
  }
  return features;
}

void write_ppm(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open image for writing: " + path.string());
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("failed writing image: " + path.string());
}

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string ppm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path.string());
  if (ppm_token(in) != "P6") throw IoError("not a P6 PPM: " + path.string());
  Image img;
  try {
    img.width = std::stoul(ppm_token(in));
    img.height = std::stoul(ppm_token(in));
    const unsigned long maxval = std::stoul(ppm_token(in));
    if (maxval != 255) throw IoError("unsupported PPM maxval in " + path.string());
  } catch (const std::logic_error&) {
    throw IoError("malformed PPM header: " + path.string());
  }
  if (img.width == 0 || img.height == 0)
    throw IoError("degenerate PPM dimensions: " + path.string());
  img.pixels.resize(3 * img.width * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw IoError("truncated PPM payload: " + path.string());
  return img;
}

Taxonomy default_taxonomy() {
  std::vector<std::string> lines = {"entity ROOT", "color entity",
                                    "shape entity", "number entity",
                                    "position entity"};
  for (const std::string& w : kColorNames) lines.push_back(w + " color");
  for (const std::string& w : kShapeNames) lines.push_back(w + " shape");
  for (const std::string& w : kNumberWords) lines.push_back(w + " number");
  for (const char* w : {"top", "bottom", "left", "right", "center"})
    lines.push_back(std::string(w) + " position");
  return Taxonomy::from_lines(lines);
}

void write_jsonl(const std::vector<QaItem>& items,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open dataset file for writing: " + path.string());
  for (const QaItem& item : items) {
    nlohmann::json j;
    j["image_path"] = item.image_path;
    j["question"] = item.question;
    j["answer"] = item.answer;
    j["category"] = category_name(item.category);
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& [r, c] : item.gt_cells)
      cells.push_back(nlohmann::json::array({r, c}));
    j["gt_cells"] = cells;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing dataset file: " + path.string());
}

std::vector<QaItem> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file: " + path.string());
  std::vector<QaItem> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      QaItem item;
      item.image_path = j.at("image_path").get<std::string>();
      item.question = j.at("question").get<std::string>();
      item.answer = j.at("answer").get<std::string>();
      item.category = category_from_name(j.at("category").get<std::string>());
      for (const auto& cell : j.at("gt_cells"))
        item.gt_cells.emplace_back(cell.at(0).get<std::size_t>(),
                                   cell.at(1).get<std::size_t>());
      items.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      std::ostringstream msg;
      msg << path.string() << ":" << lineno << ": bad record: " << e.what();
      throw IoError(msg.str());
    }
  }
  return items;
}

std::vector<Category> category_quota(std::size_t total,
                                     const std::array<double, 4>& proportions) {
  double sum = 0.0;
  for (double p : proportions) {
    if (p < 0.0) throw ConfigError("category proportions must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw ConfigError("category proportions must sum to 1");
  std::array<std::size_t, 4> counts{};
  std::array<double, 4> remainders{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double exact = proportions[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(exact);
    remainders[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  while (assigned < total) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 4; ++i)
      if (remainders[i] > remainders[best]) best = i;
    ++counts[best];
    remainders[best] = -1.0;
    ++assigned;
  }
  std::vector<Category> quota;
  quota.reserve(total);
  for (std::size_t i = 0; i < 4; ++i)
    quota.insert(quota.end(), counts[i], static_cast<Category>(i));
  return quota;
}

namespace {

struct SplitResult {
  std::vector<QaItem> items;
};

SplitResult generate_split(const DatasetConfig& config, std::uint64_t split_tag,
                           const std::string& split_name, std::size_t count,
                           const std::filesystem::path& out_dir) {
  std::vector<Category> quota = category_quota(count, config.proportions);
  Rng order_rng(derive_seed(config.seed, split_tag, 0));
  order_rng.shuffle(quota);

  SplitResult result;
  for (std::size_t i = 0; i < count; ++i) {
    std::optional<QaItem> qa;
    Scene scene;
    for (std::uint64_t attempt = 0; attempt < 200 && !qa; ++attempt) {
      Rng rng(derive_seed(config.seed, (split_tag << 20) | (attempt + 1), i));
      scene = generate_scene(rng, config.grid, config.min_objects,
                             config.max_objects);
      qa = generate_qa(scene, quota[i], rng);
    }
    if (!qa)
      throw ConfigError("could not generate an answerable " +
                        category_name(quota[i]) + " scene");
    char name[64];
    std::snprintf(name, sizeof(name), "images/%s_%05zu.ppm",
                  split_name.c_str(), i);
    qa->image_path = name;
    write_ppm(render(scene, config.image_size), out_dir / name);
    result.items.push_back(std::move(*qa));
  }
  return result;
}

}  // namespace

void generate_dataset(const DatasetConfig& config,
                      const std::filesystem::path& out_dir) {
  if (config.train_count == 0) throw ConfigError("train split must be non-empty");
  if (config.image_size == 0 || config.image_size % config.grid != 0)
    throw ConfigError("image size must be a positive multiple of the grid");
  if (config.min_objects < 1 || config.min_objects > config.max_objects ||
      config.max_objects > config.grid * config.grid)
    throw ConfigError("impossible object count range");
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir.string());

  SplitResult train = generate_split(config, 1, "train", config.train_count, out_dir);
  SplitResult test = generate_split(config, 2, "test", config.test_count, out_dir);

  write_jsonl(train.items, out_dir / "train.jsonl");
  write_jsonl(test.items, out_dir / "test.jsonl");

  std::vector<std::string> questions;
  std::vector<std::string> answers;
  for (const QaItem& item : train.items) {
    questions.push_back(item.question);
    answers.push_back(item.answer);
  }
  Vocabulary::build(questions).save(out_dir / "question_vocab.txt");
  AnswerVocabulary::build(answers).save(out_dir / "answer_vocab.txt");
  default_taxonomy().save(out_dir / "taxonomy.txt");

  nlohmann::json manifest;
  manifest["seed"] = config.seed;
  manifest["train_count"] = config.train_count;
  manifest["test_count"] = config.test_count;
  manifest["grid"] = config.grid;
  manifest["image_size"] = config.image_size;
  manifest["min_objects"] = config.min_objects;
  manifest["max_objects"] = config.max_objects;
  manifest["proportions"] = {{"object", config.proportions[0]},
                             {"number", config.proportions[1]},
                             {"color", config.proportions[2]},
                             {"location", config.proportions[3]}};
  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  if (!out) throw IoError("cannot write manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest.json");
}

}  // namespace abc::shapeworld
