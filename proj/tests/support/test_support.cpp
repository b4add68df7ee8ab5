#include "test_support.hpp"

#include "adgen/asset_store.hpp"
#include "adgen/backend/mock.hpp"
#include "adgen/hashing.hpp"
#include "adgen/image_io.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace testing {

namespace fs = std::filesystem;

fs::path fixture(const std::string &relative) { return fs::path(ADGEN_FIXTURE_DIR) / relative; }

TempDir::TempDir(const std::string &tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

adgen::Raster random_rgb(int w, int h, std::uint64_t seed, int noise) {
  adgen::SplitMix64 rng(seed);
  struct Blob {
    double x, y, r, c[3];
  };
  Blob blobs[6];
  for (auto &b : blobs)
    b = {rng.uniform() * w, rng.uniform() * h, 0.1 * w + rng.uniform() * 0.3 * w,
         {rng.uniform() * 255, rng.uniform() * 255, rng.uniform() * 255}};
  adgen::Raster out(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = 90.0 + 60.0 * y / h;
        for (const auto &b : blobs) {
          const double d2 = ((x - b.x) * (x - b.x) + (y - b.y) * (y - b.y)) / (b.r * b.r);
          v += (b.c[c] - v) * std::exp(-d2);
        }
        v += (rng.uniform() - 0.5) * 2 * noise;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
  return out;
}

adgen::Raster ellipse_product(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  adgen::Raster out(w, h, 4);
  const double cx = w / 2.0, cy = h / 2.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = (x + 0.5 - cx) / (w / 2.0), dy = (y + 0.5 - cy) / (h / 2.0);
      if (dx * dx + dy * dy <= 1.0) {
        auto *p = out.pixel(x, y);
        p[0] = static_cast<std::uint8_t>(std::min(255, r + (x * 40) / w));
        p[1] = static_cast<std::uint8_t>(std::min(255, g + (y * 40) / h));
        p[2] = b;
        p[3] = 255;
      }
    }
  return out;
}

adgen::Raster add_gaussian_noise(const adgen::Raster &src, double sigma, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  adgen::Raster out = src;
  for (auto &v : out.bytes())
    v = static_cast<std::uint8_t>(std::clamp(std::lround(v + dist(gen)), 0L, 255L));
  return out;
}

std::vector<adgen::QualityReport> random_reports(std::uint64_t seed, int n, double clip_weight) {
  adgen::SplitMix64 rng(seed);
  std::vector<adgen::QualityReport> out;
  for (int i = 0; i < n; ++i) {
    adgen::QualityReport r;
    char id[16];
    std::snprintf(id, sizeof id, "c%02d", i);
    r.candidate_id = id;
    std::array<int, 4> bits{};
    for (auto &b : bits)
      b = rng.uniform() < 0.7 ? 1 : 0;
    r.rubric = adgen::RubricScore::from_bits(bits);
    r.gate = adgen::gate(r.rubric);
    r.aesthetic = static_cast<double>(rng.next() % 21) * 0.5;
    r.clip_score = static_cast<double>(rng.next() % 11) * clip_weight / 10.0;
    out.push_back(r);
  }
  return out;
}

std::vector<double> random_vector(std::uint64_t seed, int dimension) {
  adgen::SplitMix64 rng(seed);
  std::vector<double> v(static_cast<std::size_t>(dimension));
  for (auto &x : v)
    x = 2.0 * rng.uniform() - 1.0;
  return v;
}

adgen::PipelineConfig seeded_config(const std::filesystem::path &dir, int canvas) {
  adgen::PipelineConfig config;
  config.run_seed = 7;
  config.store_path = dir / "assets.cpst";
  config.runs_dir = dir / "runs";
  config.plan.canvas_width = canvas;
  config.plan.canvas_height = canvas;

  const auto products = dir / "catalog" / "products";
  const auto backgrounds = dir / "catalog" / "backgrounds";
  fs::create_directories(products);
  fs::create_directories(backgrounds);
  struct Item {
    const char *name;
    int w, h;
    std::uint8_t r, g, b;
  };
  for (const Item &p : {Item{"shoe", 160, 90, 160, 40, 30}, Item{"mug", 80, 100, 30, 90, 200},
                        Item{"lamp", 70, 150, 230, 210, 60}}) {
    auto img = ellipse_product(p.w, p.h, p.r, p.g, p.b);
    // Texture inside the silhouette gives the aesthetic scorer something to see.
    const auto tex = random_rgb(p.w, p.h, static_cast<std::uint64_t>(p.w * 31 + p.h), 40);
    for (int y = 0; y < p.h; ++y)
      for (int x = 0; x < p.w; ++x)
        if (img.at(x, y, 3))
          for (int c = 0; c < 3; ++c)
            img.at(x, y, c) = static_cast<std::uint8_t>((img.at(x, y, c) + tex.at(x, y, c)) / 2);
    adgen::image_io::save_png(products / (std::string(p.name) + ".png"), img);
    std::ofstream(products / (std::string(p.name) + ".json"))
        << R"({"label": ")" << p.name << R"(", "category": ")" << p.name << R"("})";
  }
  int seed = 1;
  for (const char *label : {"urban street at night", "concrete floor", "sandy beach", "forest trail"}) {
    std::string file = label;
    for (auto &ch : file)
      if (ch == ' ')
        ch = '_';
    adgen::image_io::save_png(backgrounds / (file + ".png"), random_rgb(96, 96, static_cast<std::uint64_t>(seed++), 25));
  }

  auto embed = std::make_shared<adgen::backend::MockEmbeddingBackend>(config.backend.mock.embed_dimension,
                                                                      config.backend.mock.embed_seed);
  adgen::AssetStore store(config.store_path, embed);
  store.ingest(products, adgen::AssetKind::Product);
  store.ingest(backgrounds, adgen::AssetKind::Background);
  return config;
}

} // namespace testing
