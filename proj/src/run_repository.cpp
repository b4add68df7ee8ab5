#include "adgen/run_repository.hpp"

#include "adgen/errors.hpp"
#include "adgen/hashing.hpp"
#include "adgen/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unistd.h>

namespace adgen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json_atomically(const fs::path &path, const json &j) {
  const auto tmp = path.string() + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot write " + tmp);
    out << j.dump(2) << '\n';
    out.flush();
    if (!out)
      throw std::runtime_error("short write to " + tmp);
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot read " + path.string());
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw InputError(path.string() + " is not valid JSON");
  return j;
}

std::vector<std::string> id_list(const json &arr) {
  std::vector<std::string> out;
  if (arr.is_array())
    for (const auto &v : arr)
      if (v.is_string())
        out.push_back(v.get<std::string>());
  return out;
}

Rect rect_from(const json &j) {
  return {j.at("x").get<int>(), j.at("y").get<int>(), j.at("width").get<int>(), j.at("height").get<int>()};
}

} // namespace

bool valid_run_id(std::string_view id) {
  if (id.empty() || id.size() > 128 || id.front() == '.')
    return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

bool valid_image_hash(std::string_view hash) {
  return hash.size() == 16 &&
         std::all_of(hash.begin(), hash.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

std::string image_hash(std::span<const std::uint8_t> png) { return sha256_hex(png).substr(0, 16); }

std::string canonical_manifest(const json &manifest) {
  json copy = manifest;
  for (const auto &f : volatile_manifest_fields())
    copy.erase(f);
  return copy.dump();
}

std::vector<std::string> verify_manifest(const json &m, const std::optional<fs::path> &run_dir) {
  std::vector<std::string> problems;
  auto need_image = [&](const json &hash, const std::string &what) {
    if (!hash.is_string() || !valid_image_hash(hash.get<std::string>())) {
      problems.push_back(what + " has no valid image hash");
      return;
    }
    if (run_dir && !fs::exists(*run_dir / "images" / (hash.get<std::string>() + ".png")))
      problems.push_back(what + " image " + hash.get<std::string>() + " is missing");
  };
  for (const char *key : {"run_id", "status", "variants", "candidates", "quality_reports", "selected", "failure_log"})
    if (!m.contains(key))
      problems.push_back(std::string("missing field ") + key);
  if (!problems.empty())
    return problems;

  std::set<std::string> variants, candidates, reported;
  for (const auto &v : m["variants"]) {
    const auto id = v.value("variant_id", "");
    if (!variants.insert(id).second)
      problems.push_back("duplicate variant " + id);
    need_image(v.value("composed", json()), "variant " + id + " composed");
    need_image(v.value("mask", json()), "variant " + id + " mask");
  }
  for (const auto &c : m["candidates"]) {
    const auto id = c.value("candidate_id", "");
    if (!candidates.insert(id).second)
      problems.push_back("duplicate candidate " + id);
    if (!variants.contains(c.value("variant_id", "")))
      problems.push_back("candidate " + id + " refers to unknown variant " + c.value("variant_id", ""));
    need_image(c.value("image", json()), "candidate " + id);
  }
  for (const auto &r : m["quality_reports"]) {
    const auto id = r.value("candidate_id", "");
    if (!candidates.contains(id))
      problems.push_back("quality report for unknown candidate " + id);
    if (!reported.insert(id).second)
      problems.push_back("duplicate quality report for " + id);
  }
  const auto selected = id_list(m["selected"]);
  const std::set<std::string> selected_set(selected.begin(), selected.end());
  for (const auto &id : selected)
    if (!reported.contains(id))
      problems.push_back("selected candidate " + id + " has no quality report");
  if (m.contains("human_selection") && !m["human_selection"].is_null())
    for (const auto &id : id_list(m["human_selection"]))
      if (!selected_set.contains(id))
        problems.push_back("human selection " + id + " is not in the selected set");
  if (m.contains("canvas") && m["canvas"].is_object())
    need_image(m["canvas"].value("image", json()), "canvas");
  return problems;
}

LoadedRun load_run(const fs::path &path) {
  LoadedRun run;
  run.dir = fs::is_directory(path) ? path : path.parent_path();
  run.manifest = read_json(run.dir / "manifest.json");
  auto image = [&](const json &hash) {
    const auto h = hash.get<std::string>();
    if (!valid_image_hash(h))
      throw InputError("manifest references malformed image name " + h);
    return image_io::load(run.dir / "images" / (h + ".png"));
  };
  for (const auto &v : run.manifest.at("variants")) {
    CompositionVariant cv;
    cv.variant_id = v.at("variant_id").get<std::string>();
    cv.slot = parse_slot(v.at("slot").get<std::string>());
    cv.rotation_deg = v.at("rotation_deg").get<int>();
    cv.scale = {v.at("scale").at("s_w").get<double>(), v.at("scale").at("s_h").get<double>()};
    cv.reduction_steps = v.at("reduction_steps").get<int>();
    cv.shifted = v.value("shifted", false);
    cv.placed_bbox = rect_from(v.at("placed_bbox"));
    cv.composed = image(v.at("composed"));
    cv.mask = image(v.at("mask"));
    run.variants.push_back(std::move(cv));
  }
  for (const auto &c : run.manifest.at("candidates")) {
    CandidateImage ci;
    ci.candidate_id = c.at("candidate_id").get<std::string>();
    ci.variant_id = c.at("variant_id").get<std::string>();
    ci.seed = c.at("seed").get<std::uint64_t>();
    ci.seed_index = c.at("seed_index").get<int>();
    ci.attempt = c.at("attempt").get<int>();
    ci.annotations = c.at("annotations").get<std::vector<std::string>>();
    ci.raster = image(c.at("image"));
    run.candidates.push_back(std::move(ci));
  }
  return run;
}

RunRepository::RunRepository(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

std::string RunRepository::commit(const std::string &preferred_id, json manifest,
                                  const std::map<std::string, std::vector<std::uint8_t>> &images) {
  if (!valid_run_id(preferred_id))
    throw InputError("invalid run id '" + preferred_id + "'");
  std::lock_guard lock(mutex_);
  std::random_device rd;
  const fs::path staging = root_ / (".tmp-" + preferred_id + "-" + std::to_string(::getpid()) + "-" + std::to_string(rd()));
  fs::create_directories(staging / "images");
  try {
    for (const auto &[hash, bytes] : images)
      image_io::write_file(staging / "images" / (hash + ".png"), bytes);
    for (int n = 1;; ++n) {
      const std::string id = n == 1 ? preferred_id : preferred_id + "-" + std::to_string(n);
      const fs::path target = root_ / id;
      if (fs::exists(target))
        continue;
      manifest["run_id"] = id;
      write_json_atomically(staging / "manifest.json", manifest);
      std::error_code ec;
      fs::rename(staging, target, ec);
      if (!ec)
        return id;
      if (!fs::exists(target))
        throw fs::filesystem_error("cannot move run into place", staging, target, ec);
    }
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
}

std::vector<std::string> RunRepository::run_ids() const {
  std::vector<std::string> ids;
  if (!fs::exists(root_))
    return ids;
  for (const auto &entry : fs::directory_iterator(root_)) {
    const auto name = entry.path().filename().string();
    if (entry.is_directory() && valid_run_id(name) && fs::exists(entry.path() / "manifest.json"))
      ids.push_back(name);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

json RunRepository::list_summaries() const {
  json out = json::array();
  for (const auto &id : run_ids()) {
    json m;
    try {
      m = load(id);
    } catch (const InputError &) {
      continue;
    }
    out.push_back({{"run_id", id},
                   {"prompt", m.value("prompt", "")},
                   {"status", m.value("status", "")},
                   {"created_at", m.value("created_at", "")},
                   {"candidate_count", m.value("candidates", json::array()).size()},
                   {"selected_count", m.value("selected", json::array()).size()},
                   {"matched_pattern", m.value("matched_pattern", json())},
                   {"human_selection", m.value("human_selection", json())}});
  }
  std::stable_sort(out.begin(), out.end(), [](const json &a, const json &b) {
    return a["created_at"].get<std::string>() > b["created_at"].get<std::string>();
  });
  return out;
}

fs::path RunRepository::run_dir(const std::string &run_id) const {
  if (!valid_run_id(run_id))
    throw InputError("invalid run id '" + run_id + "'");
  return root_ / run_id;
}

json RunRepository::load(const std::string &run_id) const {
  const auto dir = run_dir(run_id);
  if (!fs::exists(dir / "manifest.json"))
    throw InputError("unknown run '" + run_id + "'");
  return read_json(dir / "manifest.json");
}

std::optional<fs::path> RunRepository::find_image(const std::string &hash) const {
  if (!valid_image_hash(hash))
    return std::nullopt;
  for (const auto &id : run_ids()) {
    auto p = root_ / id / "images" / (hash + ".png");
    if (fs::exists(p))
      return p;
  }
  return std::nullopt;
}

json RunRepository::record_human_selection(const std::string &run_id, const std::vector<std::string> &candidate_ids) {
  std::lock_guard lock(mutex_);
  json m = load(run_id);
  if (candidate_ids.empty())
    throw InputError("select at least one candidate");
  const auto selected = id_list(m.at("selected"));
  std::set<std::string> known;
  for (const auto &c : m.at("candidates"))
    known.insert(c.at("candidate_id").get<std::string>());
  const std::set<std::string> wanted(candidate_ids.begin(), candidate_ids.end());
  for (const auto &id : wanted) {
    if (!known.contains(id))
      throw InputError("unknown candidate '" + id + "'");
    if (std::find(selected.begin(), selected.end(), id) == selected.end())
      throw InputError("candidate '" + id + "' did not pass quality control and cannot be selected");
  }
  // Stored in pipeline rank order so repeated requests compare equal.
  std::vector<std::string> ordered;
  for (const auto &id : selected)
    if (wanted.contains(id))
      ordered.push_back(id);
  if (m.value("human_selection", json()) == json(ordered))
    return m;
  m["human_selection"] = ordered;
  m["selection_events"].push_back({{"candidate_ids", ordered}, {"sequence", m["selection_events"].size() + 1}});
  write_json_atomically(run_dir(run_id) / "manifest.json", m);
  return m;
}

} // namespace adgen
