#include "adgen/asset_store.hpp"

#include "adgen/errors.hpp"
#include "adgen/hashing.hpp"
#include "adgen/image_io.hpp"
#include "adgen/prompts.hpp"
#include "adgen/text_util.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <deque>
#include <fstream>
#include <mutex>

namespace adgen {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[] = {'C', 'P', 'S', 'T', '1'};

void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_bytes(std::vector<std::uint8_t> &out, std::span<const std::uint8_t> bytes) {
  put_u32(out, static_cast<std::uint32_t>(bytes.size()));
  out.insert(out.end(), bytes.begin(), bytes.end());
}

void put_str(std::vector<std::uint8_t> &out, std::string_view s) {
  put_bytes(out, std::span(reinterpret_cast<const std::uint8_t *>(s.data()), s.size()));
}

class Reader {
public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  bool done() const { return pos_ >= data_.size(); }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::span<const std::uint8_t> bytes() {
    const auto n = u32();
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() {
    auto b = bytes();
    return {reinterpret_cast<const char *>(b.data()), b.size()};
  }

private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size())
      throw InputError("asset store record is truncated");
  }
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::string label_from_stem(const fs::path &p) {
  std::string s = p.stem().string();
  std::replace(s.begin(), s.end(), '_', ' ');
  std::replace(s.begin(), s.end(), '-', ' ');
  return text::trim(s);
}

bool is_image_file(const fs::path &p) {
  const auto ext = text::to_lower(p.extension().string());
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

backend::EmbeddingVector round_to_float(backend::EmbeddingVector v) {
  for (double &x : v.values)
    x = static_cast<double>(static_cast<float>(x));
  return v;
}

} // namespace

std::string_view to_string(AssetKind kind) {
  return kind == AssetKind::Product ? "product" : "background";
}

AssetKind parse_asset_kind(std::string_view s) {
  if (s == "product")
    return AssetKind::Product;
  if (s == "background")
    return AssetKind::Background;
  throw InputError("asset kind must be 'product' or 'background', got '" + std::string(s) + "'");
}

bool retrieval_order(const RetrievalResult &a, const RetrievalResult &b) {
  if (a.similarity != b.similarity)
    return a.similarity > b.similarity;
  return a.asset->asset_id < b.asset->asset_id;
}

Raster key_out_white_background(const Raster &src, int threshold) {
  Raster out = to_rgba(src);
  const int w = out.width(), h = out.height();
  auto is_white = [&](int x, int y) {
    const auto *p = out.pixel(x, y);
    return p[0] >= threshold && p[1] >= threshold && p[2] >= threshold;
  };
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
  std::deque<std::pair<int, int>> queue;
  auto push = [&](int x, int y) {
    auto &s = seen[static_cast<std::size_t>(y) * w + x];
    if (!s && is_white(x, y)) {
      s = 1;
      queue.emplace_back(x, y);
    }
  };
  for (int x = 0; x < w; ++x) {
    push(x, 0);
    push(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    push(0, y);
    push(w - 1, y);
  }
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    out.at(x, y, 3) = 0;
    if (x > 0)
      push(x - 1, y);
    if (x + 1 < w)
      push(x + 1, y);
    if (y > 0)
      push(x, y - 1);
    if (y + 1 < h)
      push(x, y + 1);
  }
  return out;
}

AssetStore::AssetStore(fs::path path, std::shared_ptr<backend::EmbeddingBackend> embedder,
                       StoreOptions options)
    : path_(std::move(path)), embedder_(std::move(embedder)), options_(options) {
  if (!embedder_)
    throw InputError("asset store needs an embedding backend");
  if (!fs::exists(path_)) {
    if (path_.has_parent_path())
      fs::create_directories(path_.parent_path());
    image_io::write_file(path_, std::span(reinterpret_cast<const std::uint8_t *>(kMagic), sizeof kMagic));
  }
  load();
}

void AssetStore::load() {
  const auto data = image_io::read_file(path_);
  if (data.size() < sizeof kMagic || std::memcmp(data.data(), kMagic, sizeof kMagic) != 0)
    throw InputError(path_.string() + " is not an asset store (bad magic)");
  Reader file{std::span<const std::uint8_t>(data).subspan(sizeof kMagic)};
  const auto tag = embedder_->model_tag();
  while (!file.done()) {
    Reader rec(file.bytes());
    auto asset = std::make_shared<Asset>();
    asset->asset_id = rec.str();
    const auto kind = rec.u8();
    if (kind > 1)
      throw InputError("asset store record has unknown kind");
    asset->kind = static_cast<AssetKind>(kind);
    asset->label = rec.str();
    asset->category = rec.str();
    asset->raster = image_io::decode(rec.bytes());
    asset->embedding.model_tag = rec.str();
    const auto dim = rec.u32();
    asset->embedding.values.resize(dim);
    for (auto &v : asset->embedding.values)
      v = static_cast<double>(std::bit_cast<float>(rec.u32()));
    if (asset->embedding.model_tag != tag)
      throw InputError("asset store " + path_.string() + " was built with embedding model '" +
                       asset->embedding.model_tag + "' but the configured model is '" + tag + "'");
    if (by_id_.contains(asset->asset_id))
      continue;
    by_id_[asset->asset_id] = assets_.size();
    assets_.push_back(std::move(asset));
  }
}

void AssetStore::append_record(const Asset &asset, const std::vector<std::uint8_t> &png) {
  std::vector<std::uint8_t> payload;
  put_str(payload, asset.asset_id);
  payload.push_back(static_cast<std::uint8_t>(asset.kind));
  put_str(payload, asset.label);
  put_str(payload, asset.category);
  put_bytes(payload, png);
  put_str(payload, asset.embedding.model_tag);
  put_u32(payload, static_cast<std::uint32_t>(asset.embedding.values.size()));
  for (double v : asset.embedding.values)
    put_u32(payload, std::bit_cast<std::uint32_t>(static_cast<float>(v)));

  std::vector<std::uint8_t> record;
  put_bytes(record, payload);

  const int fd = ::open(path_.c_str(), O_WRONLY | O_APPEND);
  if (fd < 0)
    throw std::runtime_error("cannot open asset store for append: " + path_.string());
  ::flock(fd, LOCK_EX);
  std::size_t written = 0;
  while (written < record.size()) {
    const auto n = ::write(fd, record.data() + written, record.size() - written);
    if (n <= 0) {
      ::flock(fd, LOCK_UN);
      ::close(fd);
      throw std::runtime_error("short write to asset store " + path_.string());
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::flock(fd, LOCK_UN);
  ::close(fd);
}

bool AssetStore::add(Asset asset) {
  if (asset.asset_id.empty())
    throw InputError("asset id must not be empty");
  if (asset.raster.empty())
    throw InputError("asset raster must not be empty");
  backend::check_embedding(asset.embedding);
  if (asset.embedding.model_tag != embedder_->model_tag())
    throw InputError("asset embedding model '" + asset.embedding.model_tag +
                     "' does not match the store's '" + embedder_->model_tag() + "'");
  if (asset.kind == AssetKind::Product && !asset.raster.has_alpha())
    throw InputError("product assets need an alpha channel");
  asset.embedding = round_to_float(std::move(asset.embedding));
  const auto png = image_io::encode_png(asset.raster);

  std::unique_lock lock(mutex_);
  if (by_id_.contains(asset.asset_id))
    return false;
  append_record(asset, png);
  by_id_[asset.asset_id] = assets_.size();
  assets_.push_back(std::make_shared<const Asset>(std::move(asset)));
  return true;
}

IngestReport AssetStore::ingest(const fs::path &directory, AssetKind kind) {
  if (!fs::is_directory(directory))
    throw InputError("not a directory: " + directory.string());
  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(directory))
    if (entry.is_regular_file() && is_image_file(entry.path()))
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  IngestReport report;
  for (const auto &file : files) {
    const auto bytes = image_io::read_file(file);
    const auto id = sha256_hex(bytes).substr(0, 16);
    if (find(id)) {
      ++report.duplicates;
      continue;
    }
    Asset asset;
    asset.asset_id = id;
    asset.kind = kind;
    try {
      asset.raster = image_io::decode(bytes);
    } catch (const InputError &e) {
      report.warnings.push_back(file.filename().string() + ": skipped, " + e.what());
      continue;
    }
    if (kind == AssetKind::Product && !asset.raster.has_alpha())
      asset.raster = key_out_white_background(asset.raster);

    asset.label = label_from_stem(file);
    auto sidecar = file;
    sidecar.replace_extension(".json");
    if (fs::exists(sidecar)) {
      std::ifstream in(sidecar);
      auto meta = nlohmann::json::parse(in, nullptr, false);
      if (meta.is_discarded() || !meta.is_object()) {
        report.warnings.push_back(sidecar.filename().string() + ": ignored, not a JSON object");
      } else {
        asset.label = meta.value("label", asset.label);
        asset.category = meta.value("category", std::string());
      }
    }

    auto embedding = embedder_->embed_image(asset.raster);
    if (options_.embed_label && !asset.label.empty()) {
      const auto label_vec = embedder_->embed_text(asset.label);
      for (std::size_t i = 0; i < embedding.values.size(); ++i)
        embedding.values[i] += label_vec.values[i];
      embedding = backend::normalized(std::move(embedding));
    }
    asset.embedding = std::move(embedding);
    if (add(std::move(asset)))
      ++report.ingested;
    else
      ++report.duplicates;
  }
  return report;
}

std::vector<RetrievalResult> AssetStore::rank(const backend::EmbeddingVector &query, AssetKind kind,
                                              std::optional<double> threshold, int limit) const {
  if (limit < 1)
    throw InputError("retrieval limit must be positive");
  std::vector<RetrievalResult> hits;
  {
    std::shared_lock lock(mutex_);
    for (const auto &a : assets_) {
      if (a->kind != kind)
        continue;
      const double sim = backend::cosine(query, a->embedding);
      if (threshold && sim < *threshold)
        continue;
      hits.push_back({a, sim, std::nullopt, {}});
    }
  }
  std::sort(hits.begin(), hits.end(), retrieval_order);
  if (hits.size() > static_cast<std::size_t>(limit))
    hits.resize(static_cast<std::size_t>(limit));
  return hits;
}

std::vector<RetrievalResult> AssetStore::retrieve_products(const MarketingBrief &brief, int limit) const {
  if (brief.primary_product.empty())
    throw InputError("brief has no primary product");
  return rank(embedder_->embed_text(brief.primary_product), AssetKind::Product,
              options_.product_threshold, limit);
}

std::vector<RetrievalResult>
AssetStore::retrieve_backgrounds(const MarketingBrief &brief, int k,
                                 const backend::StructuredCompleter &validator,
                                 std::vector<RetrievalResult> *rejected) const {
  const std::string query = text::trim(brief.background_elements + " " + brief.theme);
  if (query.empty())
    return {};
  auto candidates = rank(embedder_->embed_text(query), AssetKind::Background, std::nullopt, k);

  std::vector<RetrievalResult> accepted;
  for (auto &c : candidates) {
    backend::TextCompletionRequest req;
    req.system_instructions = prompts::get(prompts::kBackgroundValidator);
    req.user_content = "prompt: " + brief.source_prompt +
                       "\nbackground_elements: " + brief.background_elements +
                       "\ntheme: " + brief.theme + "\ncandidate_label: " + c.asset->label +
                       "\ncandidate_category: " + c.asset->category;
    req.attached_images.push_back(c.asset->raster);
    req.expected_schema_id = backend::schema_id::kBackgroundVerdict;
    try {
      c.validator_verdict = validator.complete(req).at("verdict").get<int>();
    } catch (const BackendError &e) {
      c.validator_verdict = 0;
      c.note = e.what();
    }
    if (*c.validator_verdict == 1)
      accepted.push_back(std::move(c));
    else if (rejected)
      rejected->push_back(std::move(c));
  }
  return accepted;
}

std::shared_ptr<const Asset> AssetStore::find(const std::string &asset_id) const {
  std::shared_lock lock(mutex_);
  auto it = by_id_.find(asset_id);
  return it == by_id_.end() ? nullptr : assets_[it->second];
}

std::vector<std::shared_ptr<const Asset>> AssetStore::assets() const {
  std::shared_lock lock(mutex_);
  return assets_;
}

std::size_t AssetStore::size() const {
  std::shared_lock lock(mutex_);
  return assets_.size();
}

} // namespace adgen
