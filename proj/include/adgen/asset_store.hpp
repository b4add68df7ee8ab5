#pragma once

#include "adgen/backend/interfaces.hpp"
#include "adgen/decomposition.hpp"
#include "adgen/raster.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace adgen {

enum class AssetKind : std::uint8_t { Product = 0, Background = 1 };

std::string_view to_string(AssetKind kind);
/// Accepts "product" / "background"; throws InputError otherwise.
AssetKind parse_asset_kind(std::string_view s);

struct Asset {
  std::string asset_id;
  AssetKind kind = AssetKind::Product;
  Raster raster; // products are RGBA
  backend::EmbeddingVector embedding;
  std::string label;
  std::string category;
};

struct RetrievalResult {
  std::shared_ptr<const Asset> asset;
  double similarity = 0.0;
  std::optional<int> validator_verdict; // set for backgrounds only
  std::string note;                     // validator failure detail, if any
};

struct StoreOptions {
  double product_threshold = 0.39; // inclusive
  /// Index each asset by the normalized sum of its image and label embeddings,
  /// which keeps text queries meaningful for embedders without a joint space.
  bool embed_label = true;
};

struct IngestReport {
  int ingested = 0;
  int duplicates = 0;
  std::vector<std::string> warnings;
};

/// Sort key shared by every retrieval path: similarity descending, then asset_id ascending.
bool retrieval_order(const RetrievalResult &a, const RetrievalResult &b);

/// Asset catalog persisted as an append-only record file with an in-memory
/// index rebuilt on open. Retrieval is an exact cosine scan.
///
/// File layout (all integers little-endian):
///   "CPST1"
///   repeated: u32 payload_len, payload
///   payload:  str asset_id, u8 kind, str label, str category,
///             bytes png, str model_tag, u32 dim, f32[dim] embedding
///   str/bytes: u32 length followed by raw bytes
///
/// Reads may run concurrently; writes take an exclusive lock (in-process and
/// an advisory file lock across processes).
class AssetStore {
public:
  AssetStore(std::filesystem::path path, std::shared_ptr<backend::EmbeddingBackend> embedder,
             StoreOptions options = {});
  AssetStore(const AssetStore &) = delete;
  AssetStore &operator=(const AssetStore &) = delete;

  /// Embeds and persists every decodable image in `directory` (sorted by
  /// name). An optional `<stem>.json` sidecar supplies {"label", "category"}.
  /// Files whose content hash is already stored are skipped.
  IngestReport ingest(const std::filesystem::path &directory, AssetKind kind);

  /// Persists a ready-made asset. Returns false when the id already exists.
  /// Embedding values are rounded to 32-bit floats, as stored on disk.
  bool add(Asset asset);

  /// Products with cosine(query, asset) >= threshold, best first, at most `limit`.
  std::vector<RetrievalResult> retrieve_products(const MarketingBrief &brief, int limit) const;

  /// Top-k backgrounds by similarity, each checked by the LLM validator; only
  /// accepted candidates are returned, in similarity order. An empty brief
  /// background and theme skips retrieval. `rejected` receives the refused or
  /// failed candidates when non-null.
  std::vector<RetrievalResult> retrieve_backgrounds(const MarketingBrief &brief, int k,
                                                    const backend::StructuredCompleter &validator,
                                                    std::vector<RetrievalResult> *rejected = nullptr) const;

  /// Exact scan against a precomputed query vector.
  std::vector<RetrievalResult> rank(const backend::EmbeddingVector &query, AssetKind kind,
                                    std::optional<double> threshold, int limit) const;

  std::shared_ptr<const Asset> find(const std::string &asset_id) const;
  std::vector<std::shared_ptr<const Asset>> assets() const;
  std::size_t size() const;
  const std::filesystem::path &path() const { return path_; }
  const StoreOptions &options() const { return options_; }
  backend::EmbeddingBackend &embedder() const { return *embedder_; }

private:
  void load();
  void append_record(const Asset &asset, const std::vector<std::uint8_t> &png);

  std::filesystem::path path_;
  std::shared_ptr<backend::EmbeddingBackend> embedder_;
  StoreOptions options_;
  mutable std::shared_mutex mutex_;
  std::vector<std::shared_ptr<const Asset>> assets_;
  std::map<std::string, std::size_t> by_id_;
};

/// Derives an alpha channel for an opaque product shot on a white backdrop by
/// clearing near-white pixels connected to the image border.
Raster key_out_white_background(const Raster &rgb, int threshold = 245);

} // namespace adgen
