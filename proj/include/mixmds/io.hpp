#pragma once

#include <filesystem>
#include <optional>

#include "mixmds/diagnostics.hpp"
#include "mixmds/ingest.hpp"
#include "mixmds/postprocess.hpp"

namespace mixmds::io {

// Full run configuration; JSON file with flag overrides. See docs/formats.md.
struct RunConfig {
  std::filesystem::path data_path;
  std::filesystem::path truth_path;  // optional, written by simulate
  std::filesystem::path out_dir = ".";

  Hyperparameters hp;
  sampler::Schedule schedule;
  int chains = 1;

  enum class InitKind { Prior, File };
  InitKind init = InitKind::Prior;
  std::filesystem::path init_path;

  double credible_level = 0.9;
  ingest::SyntheticSpec synthetic;

  static RunConfig from_json_file(const std::filesystem::path& path);
  static RunConfig from_json_text(const std::string& text);
};

// FNV-1a over the canonical JSON encoding of everything that determines
// outputs (paths and wall time excluded); hex string.
std::string config_hash(const RunConfig& cfg);

// atomic write: temp file in the target directory, then rename
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string format_double(double v);  // round-trip "%.17g"

// chain persistence (JSON)
void save_chain(const std::filesystem::path& path, const sampler::ChainOutput& chain,
                const std::string& config_hash);
sampler::ChainOutput load_chain(const std::filesystem::path& path);

// aligned-sample persistence (JSON)
void save_aligned(const std::filesystem::path& path,
                  const postprocess::AlignedSamples& aligned,
                  const std::string& config_hash);
postprocess::AlignedSamples load_aligned(const std::filesystem::path& path);

// init file: {"eta": S x H, "w_group": [J], "w_ind": [[n_j x H]]} with the
// weight blocks optional (defaulting to 1)
ModelState load_init_state(const std::filesystem::path& path,
                           const DistanceDataset& data, const Hyperparameters& hp);

void save_truth(const std::filesystem::path& path, const ingest::GroundTruth& truth,
                const ingest::SyntheticSpec& spec, const std::string& config_hash);
ingest::GroundTruth load_truth(const std::filesystem::path& path);

// plot-ready tables; every file starts with "# config_hash=..."
void write_summary_tables(const std::filesystem::path& out_dir,
                          const postprocess::PosteriorSummary& summary,
                          const DistanceDataset& data,
                          const std::vector<sampler::ChainOutput>& chains,
                          const std::string& config_hash);

void write_diagnostics(const std::filesystem::path& out_dir,
                       const diagnostics::DiagnosticsReport& report,
                       const std::vector<sampler::ChainOutput>& chains,
                       const std::string& config_hash);

}  // namespace mixmds::io
