#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "abc/shapeworld.hpp"
#include "abc/vocab.hpp"

using namespace abc;
using namespace abc::shapeworld;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("scene generation is deterministic for a fixed seed") {
  Rng a(123), b(123);
  Scene s1 = generate_scene(a, 3, 2, 5);
  Scene s2 = generate_scene(b, 3, 2, 5);
  REQUIRE(s1.objects.size() == s2.objects.size());
  for (std::size_t i = 0; i < s1.objects.size(); ++i) {
    CHECK(s1.objects[i].shape == s2.objects[i].shape);
    CHECK(s1.objects[i].color == s2.objects[i].color);
    CHECK(s1.objects[i].row == s2.objects[i].row);
    CHECK(s1.objects[i].col == s2.objects[i].col);
  }
}

TEST_CASE("a full count fills every cell exactly once") {
  Rng rng(5);
  Scene s = generate_scene(rng, 3, 9, 9);
  CHECK(s.objects.size() == 9);
  std::set<std::pair<std::size_t, std::size_t>> cells;
  for (const auto& o : s.objects) cells.insert({o.row, o.col});
  CHECK(cells.size() == 9);
}

TEST_CASE("impossible count ranges are rejected") {
  Rng rng(6);
  CHECK_THROWS_AS(generate_scene(rng, 3, 5, 10), ConfigError);
  CHECK_THROWS_AS(generate_scene(rng, 3, 0, 3), ConfigError);
  CHECK_THROWS_AS(generate_scene(rng, 3, 4, 2), ConfigError);
}

TEST_CASE("occupied cells are uniform within three sigma over many scenes") {
  Rng rng(777);
  std::array<std::size_t, 9> hits{};
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    Scene s = generate_scene(rng, 3, 3, 3);
    for (const auto& o : s.objects) hits[o.row * 3 + o.col] += 1;
  }
  const double expect = trials * 3.0 / 9.0;
  const double sigma = std::sqrt(trials * (1.0 / 3.0) * (2.0 / 3.0));
  for (std::size_t cell = 0; cell < 9; ++cell)
    CHECK(std::abs(static_cast<double>(hits[cell]) - expect) < 3.0 * sigma);
}

TEST_CASE("render puts object pixels only in the object cell") {
  Scene s;
  s.grid = 3;
  s.objects = {{ShapeKind::Circle, ColorKind::Red, 0, 0}};
  Image img = render(s, 48);
  bool red_in_cell = false;
  for (std::size_t y = 0; y < 48; ++y) {
    for (std::size_t x = 0; x < 48; ++x) {
      Rgb px = img.pixel(x, y);
      const bool colored = px.r || px.g || px.b;
      if (x < 16 && y < 16) {
        if (colored) {
          red_in_cell = true;
          CHECK(px.g == 0);
          CHECK(px.b == 0);
        }
      } else {
        CHECK_FALSE(colored);  // empty cells are pure background
      }
    }
  }
  CHECK(red_in_cell);
}

TEST_CASE("rendering twice is bitwise identical") {
  Rng rng(8);
  Scene s = generate_scene(rng, 3, 2, 5);
  Image a = render(s, 48);
  Image b = render(s, 48);
  CHECK(a.pixels == b.pixels);
}

TEST_CASE("shapes cover distinct fractions of their cell") {
  auto coverage = [](ShapeKind kind) {
    Scene s;
    s.grid = 1;
    s.objects = {{kind, ColorKind::Red, 0, 0}};
    Image img = render(s, 30);
    std::size_t colored = 0;
    for (std::size_t i = 0; i < 30 * 30; ++i)
      if (img.pixels[3 * i]) ++colored;
    return static_cast<double>(colored) / 900.0;
  };
  const double circle = coverage(ShapeKind::Circle);
  const double square = coverage(ShapeKind::Square);
  const double triangle = coverage(ShapeKind::Triangle);
  CHECK(square == doctest::Approx(0.36).epsilon(0.05));
  CHECK(circle == doctest::Approx(0.283).epsilon(0.05));
  CHECK(triangle == doctest::Approx(0.18).epsilon(0.08));
}

TEST_CASE("color questions name the color of a uniquely shaped object") {
  Scene s;
  s.grid = 3;
  s.objects = {{ShapeKind::Circle, ColorKind::Red, 1, 2}};
  Rng rng(9);
  auto qa = generate_qa(s, Category::Color, rng);
  REQUIRE(qa.has_value());
  CHECK(qa->question == "what is the color of the circle");
  CHECK(qa->answer == "red");
  CHECK(qa->gt_cells == std::vector<std::pair<std::size_t, std::size_t>>{{1, 2}});
}

TEST_CASE("number questions count in English words") {
  Scene s;
  s.grid = 3;
  s.objects = {{ShapeKind::Square, ColorKind::Red, 0, 0},
               {ShapeKind::Square, ColorKind::Blue, 1, 1},
               {ShapeKind::Square, ColorKind::Green, 2, 2}};
  Rng rng(10);
  bool saw_three = false;
  for (int i = 0; i < 20; ++i) {
    auto qa = generate_qa(s, Category::Number, rng);
    REQUIRE(qa.has_value());
    CHECK(qa->answer == "three");  // all objects or all squares, both three
    CHECK(qa->gt_cells.size() == 3);
    if (qa->question == "how many squares are there") saw_three = true;
  }
  CHECK(saw_three);
}

TEST_CASE("location answers match a frozen position table") {
  // Independent oracle for the 3x3 grid.
  const std::map<std::pair<std::size_t, std::size_t>, std::string> expected = {
      {{0, 0}, "top"},    {{0, 1}, "top"},    {{0, 2}, "top"},
      {{1, 0}, "left"},   {{1, 1}, "center"}, {{1, 2}, "right"},
      {{2, 0}, "bottom"}, {{2, 1}, "bottom"}, {{2, 2}, "bottom"}};
  for (const auto& [cell, word] : expected) {
    CHECK(position_word(cell.first, cell.second, 3) == word);
    Scene s;
    s.grid = 3;
    s.objects = {{ShapeKind::Triangle, ColorKind::Yellow, cell.first, cell.second}};
    Rng rng(11);
    auto qa = generate_qa(s, Category::Location, rng);
    REQUIRE(qa.has_value());
    CHECK(qa->question == "where is the yellow triangle");
    CHECK(qa->answer == word);
  }
}

TEST_CASE("object questions need a unique color") {
  Scene s;
  s.grid = 3;
  s.objects = {{ShapeKind::Circle, ColorKind::Red, 0, 0},
               {ShapeKind::Square, ColorKind::Red, 1, 1}};
  Rng rng(12);
  CHECK_FALSE(generate_qa(s, Category::Object, rng).has_value());

  s.objects.push_back({ShapeKind::Triangle, ColorKind::Blue, 2, 2});
  auto qa = generate_qa(s, Category::Object, rng);
  REQUIRE(qa.has_value());
  CHECK(qa->question == "what shape is the blue object");
  CHECK(qa->answer == "triangle");
}

TEST_CASE("rgb_to_hsv matches the hexcone references") {
  Hsv red = rgb_to_hsv({255, 0, 0});
  CHECK(red.h == 0.0);
  CHECK(red.s == 1.0);
  CHECK(red.v == 1.0);

  Hsv black = rgb_to_hsv({0, 0, 0});
  CHECK(black.h == 0.0);
  CHECK(black.s == 0.0);
  CHECK(black.v == 0.0);

  Hsv mixed = rgb_to_hsv({128, 64, 32});
  CHECK(mixed.h == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(mixed.s == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(mixed.v == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
  CHECK(mixed.v == doctest::Approx(0.50196).epsilon(1e-4));
}

TEST_CASE("uniform cells give one-hot histograms") {
  Image img;
  img.width = img.height = 6;
  img.pixels.assign(3 * 36, 0);
  for (std::size_t i = 0; i < 36; ++i) img.pixels[3 * i] = 255;  // pure red
  Tensor f = cell_features(img, 3);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      double total = 0.0;
      std::size_t nonzero = 0;
      for (std::size_t d = 0; d < 180; ++d) {
        total += f.at(d, r, c);
        if (f.at(d, r, c) != 0.0) ++nonzero;
      }
      CHECK(nonzero == 1);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("every cell histogram sums to one") {
  Rng rng(13);
  Scene s = generate_scene(rng, 3, 4, 7);
  Image img = render(s, 48);
  Tensor f = cell_features(img, 3);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      double total = 0.0;
      for (std::size_t d = 0; d < 180; ++d) total += f.at(d, r, c);
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("a half red half blue cell splits its histogram evenly") {
  Image img;
  img.width = img.height = 8;
  img.pixels.assign(3 * 64, 0);
  std::size_t red_pixels = 0;
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t x = 0; x < 8; ++x) {
      const std::size_t i = 3 * (y * 8 + x);
      if (x < 4) {
        img.pixels[i] = 255;
        ++red_pixels;
      } else {
        img.pixels[i + 2] = 255;
      }
    }
  }
  REQUIRE(red_pixels == 32);  // pixel-count oracle for the expected mass
  Tensor f = cell_features(img, 1);
  double half_bins[2] = {0.0, 0.0};
  std::size_t nonzero = 0;
  for (std::size_t d = 0; d < 180; ++d) {
    if (f.at(d, 0, 0) == 0.0) continue;
    REQUIRE(nonzero < 2);
    half_bins[nonzero++] = f.at(d, 0, 0);
  }
  CHECK(nonzero == 2);
  CHECK(half_bins[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(half_bins[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("mean RGB block scales with the configured magnitude") {
  Image img;
  img.width = img.height = 4;
  img.pixels.assign(3 * 16, 0);
  for (std::size_t i = 0; i < 16; ++i) img.pixels[3 * i + 1] = 255;  // green
  Tensor f1 = cell_features(img, 1, {}, 1.0);
  Tensor f8 = cell_features(img, 1, {}, 8.0);
  CHECK(f1.at(181, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f8.at(181, 0, 0) == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(f8.at(180, 0, 0) == 0.0);
}

TEST_CASE("feature extraction validates divisibility") {
  Image img;
  img.width = img.height = 7;
  img.pixels.assign(3 * 49, 0);
  CHECK_THROWS_AS(cell_features(img, 3), DimensionError);
}

TEST_CASE("ppm files round-trip and reject junk") {
  TempDir tmp("abc_ppm_test");
  Rng rng(14);
  Scene s = generate_scene(rng, 3, 2, 4);
  Image img = render(s, 24);
  write_ppm(img, tmp.path / "a.ppm");
  Image back = read_ppm(tmp.path / "a.ppm");
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.pixels == img.pixels);

  std::ofstream bad(tmp.path / "bad.ppm", std::ios::binary);
  bad << "P3\n2 2\n255\nnot binary";
  bad.close();
  CHECK_THROWS_AS(read_ppm(tmp.path / "bad.ppm"), IoError);
  std::ofstream trunc(tmp.path / "trunc.ppm", std::ios::binary);
  trunc << "P6\n4 4\n255\nxx";
  trunc.close();
  CHECK_THROWS_AS(read_ppm(tmp.path / "trunc.ppm"), IoError);
}

TEST_CASE("jsonl round-trips QA items") {
  TempDir tmp("abc_jsonl_test");
  std::vector<QaItem> items(2);
  items[0].image_path = "images/a.ppm";
  items[0].question = "what shape is the red object";
  items[0].answer = "circle";
  items[0].category = Category::Object;
  items[0].gt_cells = {{0, 1}};
  items[1].image_path = "images/b.ppm";
  items[1].question = "how many squares are there";
  items[1].answer = "two";
  items[1].category = Category::Number;
  items[1].gt_cells = {{1, 1}, {2, 0}};
  write_jsonl(items, tmp.path / "x.jsonl");
  auto back = read_jsonl(tmp.path / "x.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].question == items[0].question);
  CHECK(back[1].gt_cells == items[1].gt_cells);
  CHECK(back[1].category == Category::Number);

  std::ofstream bad(tmp.path / "bad.jsonl", std::ios::binary);
  bad << "{\"question\": \"missing fields\"}\n";
  bad.close();
  CHECK_THROWS_AS(read_jsonl(tmp.path / "bad.jsonl"), IoError);
}

TEST_CASE("category quotas follow the requested proportions") {
  auto quota = category_quota(2000, {0.6984, 0.0747, 0.1659, 0.0610});
  REQUIRE(quota.size() == 2000);
  std::map<Category, std::size_t> counts;
  for (Category c : quota) counts[c] += 1;
  CHECK(std::abs(counts[Category::Object] / 2000.0 - 0.6984) < 0.01);
  CHECK(std::abs(counts[Category::Number] / 2000.0 - 0.0747) < 0.01);
  CHECK(std::abs(counts[Category::Color] / 2000.0 - 0.1659) < 0.01);
  CHECK(std::abs(counts[Category::Location] / 2000.0 - 0.0610) < 0.01);

  CHECK_THROWS_AS(category_quota(100, {0.5, 0.1, 0.1, 0.1}), ConfigError);
  CHECK_THROWS_AS(category_quota(100, {1.5, -0.5, 0.0, 0.0}), ConfigError);
}

TEST_CASE("generated datasets are reproducible and internally consistent") {
  TempDir tmp_a("abc_genA");
  TempDir tmp_b("abc_genB");
  DatasetConfig cfg;
  cfg.seed = 99;
  cfg.train_count = 60;
  cfg.test_count = 12;
  generate_dataset(cfg, tmp_a.path);
  generate_dataset(cfg, tmp_b.path);

  for (const char* name : {"train.jsonl", "test.jsonl", "question_vocab.txt",
                           "answer_vocab.txt", "taxonomy.txt", "manifest.json"})
    CHECK(slurp(tmp_a.path / name) == slurp(tmp_b.path / name));
  CHECK(slurp(tmp_a.path / "images/train_00000.ppm") ==
        slurp(tmp_b.path / "images/train_00000.ppm"));

  // Every answer is in the generated vocabulary, every gt cell in the grid,
  // and the taxonomy covers every answer word.
  AnswerVocabulary answers = AnswerVocabulary::load(tmp_a.path / "answer_vocab.txt");
  Taxonomy taxonomy = Taxonomy::load(tmp_a.path / "taxonomy.txt");
  auto items = read_jsonl(tmp_a.path / "train.jsonl");
  REQUIRE(items.size() == 60);
  for (const auto& item : items) {
    CHECK(answers.contains(item.answer));
    CHECK(taxonomy.contains(item.answer));
    CHECK(!item.gt_cells.empty());
    for (const auto& [r, c] : item.gt_cells) {
      CHECK(r < cfg.grid);
      CHECK(c < cfg.grid);
    }
    CHECK(fs::exists(tmp_a.path / item.image_path));
  }
}

TEST_CASE("the default taxonomy covers the full answer space") {
  Taxonomy t = default_taxonomy();
  for (const char* w : {"red", "green", "blue", "yellow", "circle", "square",
                        "triangle", "one", "nine", "top", "bottom", "left",
                        "right", "center"})
    CHECK(t.contains(w));
  CHECK(t.depth("red") == 3);
  CHECK(wup_similarity("red", "blue", t) == doctest::Approx(2.0 / 3.0));
  CHECK(wup_similarity("red", "circle", t) == doctest::Approx(1.0 / 3.0));
}
