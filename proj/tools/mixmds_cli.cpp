// Command-line pipeline: simulate -> fit -> postprocess -> diagnose -> summarize,
// plus ingest for turning repeated-trial signal recordings into distances.
//
// Exit codes: 0 success, 2 validation error, 3 numerical/runtime failure,
// 4 diagnostics warning.

#include <chrono>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixmds/io.hpp"

namespace {

using namespace mixmds;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitDiagnostics = 4;

struct CliOptions {
  std::string config_path;
  std::string data_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int chains = 0;
};

io::RunConfig load_config(const CliOptions& opt) {
  io::RunConfig cfg = opt.config_path.empty()
                          ? io::RunConfig::from_json_text("{}")
                          : io::RunConfig::from_json_file(opt.config_path);
  if (opt.seed_set) {
    cfg.hp.seed = opt.seed;
    cfg.synthetic.seed = derive_seed(cfg.hp.seed, 0x53494D);
  }
  if (opt.chains > 0) cfg.chains = opt.chains;
  if (!opt.data_path.empty()) cfg.data_path = opt.data_path;
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
  std::filesystem::create_directories(cfg.out_dir);
  return cfg;
}

std::filesystem::path chain_path(const io::RunConfig& cfg, int k) {
  return cfg.out_dir / ("chain_" + std::to_string(k + 1) + ".json");
}

std::filesystem::path aligned_path(const io::RunConfig& cfg, int k) {
  return cfg.out_dir / ("aligned_" + std::to_string(k + 1) + ".json");
}

DistanceDataset load_data(const io::RunConfig& cfg) {
  if (cfg.data_path.empty()) {
    throw ValidationError("no dataset given; set paths.data or --data");
  }
  return ingest::read_distance_csv(cfg.data_path);
}

int cmd_simulate(const CliOptions& opt) {
  io::RunConfig cfg = load_config(opt);
  const std::string hash = io::config_hash(cfg);
  auto [data, truth] = ingest::generate_synthetic(cfg.synthetic);
  const auto csv = cfg.out_dir / "distances.csv";
  ingest::write_distance_csv(csv, data, "config_hash=" + hash);
  io::save_truth(cfg.out_dir / "truth.json", truth, cfg.synthetic, hash);
  std::cout << "simulate: wrote " << csv.string() << " (" << data.n_total() << " subjects, "
            << data.S << " stimuli, " << data.n_total() * data.n_pairs()
            << " distance rows) and truth.json\n";
  return kExitOk;
}

int cmd_ingest(const CliOptions& opt, const std::string& signals_path) {
  io::RunConfig cfg = load_config(opt);
  const std::string hash = io::config_hash(cfg);
  const ingest::TrialSignals sig = ingest::read_signals(signals_path);
  const auto rescaled = ingest::preprocess_trials(sig);
  int n_groups = 0;
  for (int g : sig.group) n_groups = std::max(n_groups, g);
  const DistanceDataset data =
      ingest::distances_from_signals(rescaled, sig.group, n_groups);
  const auto csv = cfg.out_dir / "distances.csv";
  ingest::write_distance_csv(csv, data, "config_hash=" + hash);
  std::cout << "ingest: wrote " << csv.string() << "\n";
  return kExitOk;
}

int cmd_fit(const CliOptions& opt) {
  io::RunConfig cfg = load_config(opt);
  DistanceDataset data = load_data(cfg);
  cfg.hp.finalize(data);
  const std::string hash = io::config_hash(cfg);

  std::optional<ModelState> init;
  if (cfg.init == io::RunConfig::InitKind::File) {
    init = io::load_init_state(cfg.init_path, data, cfg.hp);
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto chains =
      sampler::run_chains(data, cfg.hp, cfg.schedule, cfg.chains, cfg.hp.seed, init);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  for (int k = 0; k < cfg.chains; ++k) {
    io::save_chain(chain_path(cfg, k), chains[k], hash);
  }
  nlohmann::json manifest;
  manifest["config_hash"] = hash;
  manifest["seed"] = cfg.hp.seed;
  manifest["chains"] = cfg.chains;
  manifest["data"] = cfg.data_path.string();
  manifest["wall_time_sec"] = wall;
  manifest["draws_per_chain"] = chains.front().draws.size();
  manifest["frozen_H"] = chains.front().meta.frozen_H;
  io::atomic_write(cfg.out_dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "fit: " << cfg.chains << " chain(s), "
            << chains.front().draws.size() << " stored draws each, frozen H = "
            << chains.front().meta.frozen_H << ", " << wall << " s\n";
  return kExitOk;
}

std::vector<sampler::ChainOutput> load_chains(const io::RunConfig& cfg) {
  std::vector<sampler::ChainOutput> chains;
  for (int k = 0; k < cfg.chains; ++k) {
    const auto path = chain_path(cfg, k);
    if (!std::filesystem::exists(path)) {
      throw ValidationError("missing artifact: " + path.string() +
                            " (run `fit` first)");
    }
    chains.push_back(io::load_chain(path));
  }
  return chains;
}

int cmd_postprocess(const CliOptions& opt) {
  io::RunConfig cfg = load_config(opt);
  const std::string hash = io::config_hash(cfg);
  const auto chains = load_chains(cfg);
  std::vector<postprocess::AlignedSamples> aligned;
  for (int k = 0; k < cfg.chains; ++k) {
    aligned.push_back(postprocess::align_chain(
        chains[k], derive_seed(cfg.hp.seed, 0x504F5354 + k)));
  }
  postprocess::align_across_chains(aligned);
  int dropped = 0;
  for (int k = 0; k < cfg.chains; ++k) {
    io::save_aligned(aligned_path(cfg, k), aligned[k], hash);
    dropped += aligned[k].dropped;
  }
  std::cout << "postprocess: aligned " << cfg.chains << " chain(s)";
  if (dropped > 0) std::cout << ", dropped " << dropped << " degenerate draw(s)";
  std::cout << "\n";
  return kExitOk;
}

int cmd_diagnose(const CliOptions& opt) {
  io::RunConfig cfg = load_config(opt);
  const std::string hash = io::config_hash(cfg);
  const auto chains = load_chains(cfg);
  const auto report = diagnostics::diagnose(chains);
  io::write_diagnostics(cfg.out_dir, report, chains, hash);
  std::cout << "diagnose: mpsrf(delta) = " << report.mpsrf_delta << ", "
            << report.flags.size() << " flagged quantit"
            << (report.flags.size() == 1 ? "y" : "ies") << "\n";
  return report.clean() ? kExitOk : kExitDiagnostics;
}

int cmd_summarize(const CliOptions& opt) {
  io::RunConfig cfg = load_config(opt);
  DistanceDataset data = load_data(cfg);
  const std::string hash = io::config_hash(cfg);
  const auto chains = load_chains(cfg);
  std::vector<postprocess::AlignedSamples> aligned;
  for (int k = 0; k < cfg.chains; ++k) {
    const auto path = aligned_path(cfg, k);
    if (!std::filesystem::exists(path)) {
      throw ValidationError("missing artifact: " + path.string() +
                            " (run `postprocess` first)");
    }
    aligned.push_back(io::load_aligned(path));
  }
  const auto summary = postprocess::summarize(aligned, chains, cfg.credible_level);
  io::write_summary_tables(cfg.out_dir, summary, data, chains, hash);
  std::cout << "summarize: wrote tables to " << cfg.out_dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian mixed multidimensional scaling for multi-subject distance data"};
  app.require_subcommand(1);

  CliOptions opt;
  std::string signals_path;
  app.add_option("--config", opt.config_path, "JSON config file");
  app.add_option("--data", opt.data_path, "distance CSV (overrides config)");
  app.add_option("--out", opt.out_dir, "output directory (overrides config)");
  auto* seed_opt = app.add_option("--seed", opt.seed, "root seed (overrides config)");
  app.add_option("--chains", opt.chains, "chain count (overrides config)");

  auto* sim = app.add_subcommand("simulate", "write a synthetic dataset and its truth");
  auto* ing = app.add_subcommand("ingest", "signals -> distance CSV");
  ing->add_option("--signals", signals_path, "signal metadata JSON")->required();
  auto* fit = app.add_subcommand("fit", "run MCMC chains");
  auto* post = app.add_subcommand("postprocess", "identifiability alignment");
  auto* diag = app.add_subcommand("diagnose", "convergence diagnostics");
  auto* summ = app.add_subcommand("summarize", "posterior summary tables");

  CLI11_PARSE(app, argc, argv);
  opt.seed_set = seed_opt->count() > 0;

  try {
    if (sim->parsed()) return cmd_simulate(opt);
    if (ing->parsed()) return cmd_ingest(opt, signals_path);
    if (fit->parsed()) return cmd_fit(opt);
    if (post->parsed()) return cmd_postprocess(opt);
    if (diag->parsed()) return cmd_diagnose(opt);
    if (summ->parsed()) return cmd_summarize(opt);
  } catch (const mixmds::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
