#include "adgen/run_evaluation.hpp"

#include "adgen/errors.hpp"
#include "adgen/run_repository.hpp"

#include <iomanip>
#include <sstream>

namespace adgen::eval {

using nlohmann::json;

namespace {

const CandidateImage *baseline_candidate(const LoadedRun &run) {
  const CandidateImage *fallback = nullptr;
  for (const auto &c : run.candidates) {
    if (c.attempt != 1 || c.seed_index != 0)
      continue;
    if (c.variant_id == "center-r0")
      return &c;
    if (!fallback)
      fallback = &c;
  }
  return fallback;
}

json summary_json(const Summary &s) { return {{"n", s.n}, {"mean", s.mean}, {"std", s.std}}; }

json test_json(const PairedTestResult &t) {
  return {{"n", t.n},
          {"mean_diff", t.mean_diff},
          {"t_statistic", t.t_statistic},
          {"p_value", t.p_value},
          {"degenerate", t.degenerate}};
}

} // namespace

RunEvaluation evaluate_runs(const std::vector<std::filesystem::path> &runs, const AssetStore &references,
                            const MsSsimOptions &options) {
  if (runs.empty())
    throw InputError("no runs to evaluate");
  RunEvaluation out;
  std::vector<double> base_ssim, base_cos, pipe_ssim, pipe_cos;
  int qc_empty = 0;
  for (const auto &path : runs) {
    const auto run = load_run(path);
    const auto run_id = run.manifest.value("run_id", path.filename().string());
    const auto &product_id = run.manifest.at("product_asset_id");
    if (!product_id.is_string())
      throw InputError("run " + run_id + " has no product asset to compare against");
    const auto reference = references.find(product_id.get<std::string>());
    if (!reference)
      throw InputError("product asset " + product_id.get<std::string>() + " of run " + run_id +
                       " is not in the reference store");
    auto variant_of = [&](const CandidateImage &c) -> const CompositionVariant & {
      for (const auto &v : run.variants)
        if (v.variant_id == c.variant_id)
          return v;
      throw InputError("candidate " + c.candidate_id + " refers to an unknown variant");
    };
    auto score = [&](const CandidateImage &c) {
      return product_fidelity(c, variant_of(c), *reference, references.embedder(), options);
    };

    const auto *base = baseline_candidate(run);
    if (!base)
      throw InputError("run " + run_id + " has no first-pass candidates");
    RunFidelityRow b{run_id, "baseline", base->candidate_id, score(*base)};
    base_ssim.push_back(b.record.ms_ssim);
    base_cos.push_back(b.record.embed_cosine);

    RunFidelityRow p{run_id, "pipeline", "", {}};
    const auto selected = run.manifest.value("selected", json::array());
    if (selected.empty()) {
      ++qc_empty;
      p.record.pair_id = run_id + "/pipeline";
    } else {
      const auto id = selected.front().get<std::string>();
      for (const auto &c : run.candidates)
        if (c.candidate_id == id)
          p = {run_id, "pipeline", id, score(c)};
      if (p.candidate_id.empty())
        throw InputError("selected candidate " + id + " is missing from run " + run_id);
    }
    pipe_ssim.push_back(p.record.ms_ssim);
    pipe_cos.push_back(p.record.embed_cosine);
    out.rows.push_back(std::move(b));
    out.rows.push_back(std::move(p));
  }

  json s = {{"runs", runs.size()},
            {"qc_empty", qc_empty},
            {"conditions",
             {{"baseline", {{"ms_ssim", summary_json(summarize(base_ssim))}, {"embed_cosine", summary_json(summarize(base_cos))}}},
              {"pipeline", {{"ms_ssim", summary_json(summarize(pipe_ssim))}, {"embed_cosine", summary_json(summarize(pipe_cos))}}}}},
            {"paired_t_tests", nullptr}};
  if (runs.size() >= 2)
    s["paired_t_tests"] = {{"ms_ssim", test_json(paired_t_test(base_ssim, pipe_ssim))},
                           {"embed_cosine", test_json(paired_t_test(base_cos, pipe_cos))}};
  out.summary = std::move(s);
  return out;
}

std::string fidelity_csv(const std::vector<RunFidelityRow> &rows) {
  std::ostringstream out;
  out << "pair_id,ms_ssim,embed_cosine\n" << std::setprecision(10);
  for (const auto &r : rows)
    out << r.run_id << '/' << r.condition << '/' << (r.candidate_id.empty() ? "none" : r.candidate_id) << ','
        << r.record.ms_ssim << ',' << r.record.embed_cosine << '\n';
  return out.str();
}

} // namespace adgen::eval
