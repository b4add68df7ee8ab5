#pragma once

#include "adgen/asset_store.hpp"
#include "adgen/evaluation.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace adgen::eval {

/// One scored image of one run. `condition` is "baseline" (the center, 0
/// degree, first-seed image of the first pass, before quality control) or
/// "pipeline" (the top-ranked selection; scored 0 when nothing was selected).
struct RunFidelityRow {
  std::string run_id;
  std::string condition;
  std::string candidate_id; // empty when the pipeline selected nothing
  FidelityRecord record;
};

struct RunEvaluation {
  std::vector<RunFidelityRow> rows;
  nlohmann::json summary;
};

/// Scores product fidelity for each run against its product asset in
/// `references`. The summary holds mean/std per metric and condition and,
/// with two or more runs, paired t-tests of pipeline against baseline.
RunEvaluation evaluate_runs(const std::vector<std::filesystem::path> &runs, const AssetStore &references,
                            const MsSsimOptions &options = {});

/// "pair_id,ms_ssim,embed_cosine" rows; pair_id is run_id/condition/candidate.
std::string fidelity_csv(const std::vector<RunFidelityRow> &rows);

} // namespace adgen::eval
