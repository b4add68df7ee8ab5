#pragma once

#include "adgen/composition.hpp"
#include "adgen/generation.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace adgen {

/// Fields that legitimately differ between two replays of the same run.
inline const std::vector<std::string> &volatile_manifest_fields() {
  static const std::vector<std::string> f{"run_id", "created_at", "stage_timings"};
  return f;
}

/// The manifest with volatile fields removed, serialized with sorted keys.
std::string canonical_manifest(const nlohmann::json &manifest);

/// Referential integrity problems (empty when the manifest is consistent).
/// When `run_dir` is given, referenced image files must exist there too.
std::vector<std::string> verify_manifest(const nlohmann::json &manifest,
                                         const std::optional<std::filesystem::path> &run_dir = std::nullopt);

/// Variants and candidates rebuilt from a persisted run.
struct LoadedRun {
  nlohmann::json manifest;
  std::vector<CompositionVariant> variants;
  std::vector<CandidateImage> candidates;
  std::filesystem::path dir;
};

/// Accepts a run directory or the manifest.json inside it.
LoadedRun load_run(const std::filesystem::path &path);

/// One directory per run under `root`: manifest.json plus images/<hash>.png.
/// New runs are assembled in a hidden temporary directory and renamed into
/// place, so readers never see a partial run.
class RunRepository {
public:
  explicit RunRepository(std::filesystem::path root);

  /// Writes the run and returns its final id: `preferred_id`, or
  /// `preferred_id-N` when that directory already exists. The manifest's
  /// run_id field is set accordingly.
  std::string commit(const std::string &preferred_id, nlohmann::json manifest,
                     const std::map<std::string, std::vector<std::uint8_t>> &images);

  std::vector<std::string> run_ids() const;
  /// Short summaries, newest first.
  nlohmann::json list_summaries() const;
  /// Throws InputError for unknown or malformed ids.
  nlohmann::json load(const std::string &run_id) const;
  std::filesystem::path run_dir(const std::string &run_id) const;
  std::optional<std::filesystem::path> find_image(const std::string &hash) const;

  /// Stores the reviewer's pick. Every id must be in the run's selected list;
  /// repeating an identical selection leaves the manifest untouched.
  nlohmann::json record_human_selection(const std::string &run_id, const std::vector<std::string> &candidate_ids);

  const std::filesystem::path &root() const { return root_; }

private:
  std::filesystem::path root_;
  mutable std::mutex mutex_;
};

/// Run ids are restricted to [A-Za-z0-9._-] and may not start with a dot.
bool valid_run_id(std::string_view id);

/// Image names are 16 lowercase hex digits.
bool valid_image_hash(std::string_view hash);

/// "<sha256 of the PNG bytes, 16 hex digits>" for an encoded image.
std::string image_hash(std::span<const std::uint8_t> png);

} // namespace adgen
