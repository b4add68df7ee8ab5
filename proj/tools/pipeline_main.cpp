// pipeline: command-line front end for ingest, decompose, run, evaluate, serve.

#include "adgen/config.hpp"
#include "adgen/decomposition.hpp"
#include "adgen/errors.hpp"
#include "adgen/pipeline.hpp"
#include "adgen/run_evaluation.hpp"
#include "adgen/server.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

adgen::ApiServer *g_server = nullptr;

void on_signal(int) {
  if (g_server)
    g_server->stop();
}

adgen::PipelineConfig load(const std::string &path) {
  return path.empty() ? adgen::PipelineConfig{} : adgen::load_config(path);
}

int cmd_ingest(const adgen::PipelineConfig &cfg, const std::string &dir, const std::string &kind) {
  const auto backends = adgen::make_backends(cfg);
  auto store = adgen::open_store(cfg, backends.embed);
  const auto report = store->ingest(dir, adgen::parse_asset_kind(kind));
  for (const auto &w : report.warnings)
    std::cerr << "warning: " << w << "\n";
  std::cout << json{{"ingested", report.ingested},
                    {"duplicates", report.duplicates},
                    {"warnings", report.warnings.size()},
                    {"store_size", store->size()}}
                   .dump(2)
            << "\n";
  return 0;
}

int cmd_decompose(const adgen::PipelineConfig &cfg, const std::string &prompt) {
  const auto backends = adgen::make_backends(cfg);
  const auto d = adgen::PromptDecomposer(backends.decompose).decompose(prompt);
  for (const auto &w : d.warnings)
    std::cerr << "warning: " << w << "\n";
  std::cout << json(d.brief).dump(2) << "\n";
  return 0;
}

int cmd_run(adgen::PipelineConfig cfg, const std::string &prompt) {
  const auto backends = adgen::make_backends(cfg);
  auto store = adgen::open_store(cfg, backends.embed);
  adgen::Pipeline pipeline(cfg, backends, store);
  const auto out = pipeline.run(prompt);
  const auto &m = out.manifest;
  for (const auto &f : m["failure_log"])
    std::cerr << "note: [" << f.value("stage", "") << "] " << f.value("detail", "") << "\n";
  std::cout << json{{"run_id", out.run_id},
                    {"run_dir", out.run_dir.string()},
                    {"status", m["status"]},
                    {"candidates", m["candidates"].size()},
                    {"selected", m["selected"]},
                    {"matched_pattern", m["matched_pattern"]}}
                   .dump(2)
            << "\n";
  const auto status = m["status"].get<std::string>();
  return status == adgen::run_status::kCompleted || status == adgen::run_status::kEmptySelection ? 0 : 3;
}

int cmd_evaluate(const adgen::PipelineConfig &cfg, const std::vector<std::string> &runs,
                 const std::string &references, const std::string &out_dir) {
  const auto backends = adgen::make_backends(cfg);
  adgen::AssetStore store(references.empty() ? cfg.store_path : fs::path(references), backends.embed,
                          {cfg.retrieval.product_threshold, cfg.retrieval.embed_label});
  std::vector<fs::path> paths(runs.begin(), runs.end());
  adgen::eval::MsSsimOptions options;
  options.scales = cfg.evaluation.ms_ssim_scales;
  const auto result = adgen::eval::evaluate_runs(paths, store, options);
  fs::create_directories(out_dir);
  std::ofstream(fs::path(out_dir) / "fidelity.csv") << adgen::eval::fidelity_csv(result.rows);
  std::ofstream(fs::path(out_dir) / "summary.json") << result.summary.dump(2) << "\n";
  std::cout << result.summary.dump(2) << "\n";
  return 0;
}

int cmd_serve(const adgen::PipelineConfig &cfg) {
  auto runs = std::make_shared<adgen::RunRepository>(cfg.runs_dir);
  if (runs->run_ids().empty())
    std::cerr << "warning: no runs under " << cfg.runs_dir << " yet\n";
  adgen::ApiServer server(runs, cfg.server.static_dir);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "serving " << cfg.runs_dir << " on http://" << cfg.server.host << ":" << cfg.server.port << "\n";
  server.listen(cfg.server.host, cfg.server.port);
  g_server = nullptr;
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Marketing image pipeline"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "YAML configuration file")->check(CLI::ExistingFile);

  std::string dir, kind, prompt, runs_out, eval_out, references, host, static_dir;
  std::vector<std::string> runs;
  std::uint64_t seed = 0;
  int port = 0;

  auto *ingest = app.add_subcommand("ingest", "Embed and store a directory of assets");
  ingest->add_option("--dir", dir, "Directory of PNG/JPEG files")->required()->check(CLI::ExistingDirectory);
  ingest->add_option("--kind", kind, "product or background")->required()->check(CLI::IsMember({"product", "background"}));

  auto *decompose = app.add_subcommand("decompose", "Print the brief for a prompt");
  decompose->add_option("--prompt", prompt)->required();

  auto *run = app.add_subcommand("run", "Run the full pipeline for a prompt");
  run->add_option("--prompt", prompt)->required();
  auto *seed_opt = run->add_option("--seed", seed, "Run seed (overrides run_seed)");
  run->add_option("--out", runs_out, "Runs directory (overrides runs_dir)");

  auto *evaluate = app.add_subcommand("evaluate", "Score product fidelity of persisted runs");
  evaluate->add_option("--run", runs, "Run directory or manifest.json (repeatable)")->required();
  evaluate->add_option("--references", references, "Asset store holding the reference products");
  evaluate->add_option("--out", eval_out, "Directory for fidelity.csv and summary.json")->default_val(".");

  auto *serve = app.add_subcommand("serve", "Serve the review API and UI");
  auto *host_opt = serve->add_option("--host", host);
  auto *port_opt = serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  auto *static_opt = serve->add_option("--static", static_dir, "Review UI build directory");

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = load(config_path);
    if (*ingest)
      return cmd_ingest(cfg, dir, kind);
    if (*decompose)
      return cmd_decompose(cfg, prompt);
    if (*run) {
      if (*seed_opt)
        cfg.run_seed = seed;
      if (!runs_out.empty())
        cfg.runs_dir = runs_out;
      return cmd_run(cfg, prompt);
    }
    if (*evaluate)
      return cmd_evaluate(cfg, runs, references, eval_out);
    if (*serve) {
      if (*host_opt)
        cfg.server.host = host;
      if (*port_opt)
        cfg.server.port = port;
      if (*static_opt)
        cfg.server.static_dir = static_dir;
      return cmd_serve(cfg);
    }
  } catch (const adgen::InputError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
