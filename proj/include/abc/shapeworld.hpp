#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "abc/metrics.hpp"
#include "abc/rng.hpp"
#include "abc/tensor.hpp"

namespace abc::shapeworld {

enum class ShapeKind { Circle, Square, Triangle };
enum class ColorKind { Red, Green, Blue, Yellow };
enum class Category { Object, Number, Color, Location };

inline constexpr std::array<ShapeKind, 3> kShapes = {
    ShapeKind::Circle, ShapeKind::Square, ShapeKind::Triangle};
inline constexpr std::array<ColorKind, 4> kColors = {
    ColorKind::Red, ColorKind::Green, ColorKind::Blue, ColorKind::Yellow};
inline constexpr std::array<Category, 4> kCategories = {
    Category::Object, Category::Number, Category::Color, Category::Location};

const std::string& shape_name(ShapeKind s);
const std::string& color_name(ColorKind c);
const std::string& category_name(Category c);
Category category_from_name(const std::string& name);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

Rgb color_rgb(ColorKind c);

struct Hsv {
  double h = 0.0;  // degrees in [0, 360)
  double s = 0.0;
  double v = 0.0;
};

// Standard hexcone conversion; hue is 0 by convention for achromatic pixels.
Hsv rgb_to_hsv(Rgb p);

struct SceneObject {
  ShapeKind shape;
  ColorKind color;
  std::size_t row = 0, col = 0;
};

struct Scene {
  std::size_t grid = 3;
  std::vector<SceneObject> objects;  // at most one per cell, at least one
  Rgb background;
};

struct Image {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> pixels;  // RGB8, row-major

  Rgb pixel(std::size_t x, std::size_t y) const {
    const std::size_t i = 3 * (y * width + x);
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
};

struct QaItem {
  std::string image_path;
  std::string question;
  std::string answer;
  Category category = Category::Object;
  std::vector<std::pair<std::size_t, std::size_t>> gt_cells;
};

// Uniformly places `count` objects (count drawn from [min_count, max_count])
// on distinct cells with independently drawn shapes and colors.
Scene generate_scene(Rng& rng, std::size_t grid, std::size_t min_count,
                     std::size_t max_count);

// Rasterizes the scene. Each object is centered in its cell and spans 60% of
// the cell extent. image_size must be divisible by the grid.
Image render(const Scene& scene, std::size_t image_size);

// Produces a question of the requested category, or nothing when the scene
// cannot support one (e.g. a color question with no uniquely-shaped object).
// image_path is left empty.
std::optional<QaItem> generate_qa(const Scene& scene, Category category,
                                  Rng& rng);

// Maps a cell to one of {top, bottom, left, right, center}: the center cell
// of an odd grid is "center", otherwise the dominant offset axis wins and
// ties go vertical.
std::string position_word(std::size_t row, std::size_t col, std::size_t grid);

struct HistogramBins {
  std::size_t hue = 10, sat = 6, val = 3;
  std::size_t total() const { return hue * sat * val; }
};

// Per-cell descriptor: a joint HSV histogram normalized to sum 1, extended
// with the cell's mean RGB in [0,1] times rgb_scale. The scaled block stands
// in for the high-magnitude CNN features of a full-size system and sets the
// dynamic range the attention kernel can work with. Output is [D x N x N]
// with D = bins.total() + 3.
Tensor cell_features(const Image& image, std::size_t grid,
                     const HistogramBins& bins = {}, double rgb_scale = 1.0);

void write_ppm(const Image& image, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

// Answer-word taxonomy shipped with the generator: colors, shapes, numbers
// and positions under thematic parents below a single root.
Taxonomy default_taxonomy();

// JSON Lines records {image_path, question, answer, category, gt_cells}.
void write_jsonl(const std::vector<QaItem>& items,
                 const std::filesystem::path& path);
std::vector<QaItem> read_jsonl(const std::filesystem::path& path);

struct DatasetConfig {
  std::uint64_t seed = 0;
  std::size_t train_count = 2000;
  std::size_t test_count = 400;
  std::size_t grid = 3;
  std::size_t image_size = 48;
  std::size_t min_objects = 2;
  std::size_t max_objects = 5;
  // Toronto COCO-QA training proportions.
  std::array<double, 4> proportions = {0.6984, 0.0747, 0.1659, 0.0610};
};

// Writes images/, train.jsonl, test.jsonl, question_vocab.txt,
// answer_vocab.txt, taxonomy.txt and manifest.json under out_dir.
void generate_dataset(const DatasetConfig& config,
                      const std::filesystem::path& out_dir);

// Category quota per Table-1-style proportions, by largest remainder.
std::vector<Category> category_quota(std::size_t total,
                                     const std::array<double, 4>& proportions);

}  // namespace abc::shapeworld
