// Timing comparison between the serial reference paths and the OpenMP kernels:
// chain alignment, the diagnostic battery, and multi-chain fitting.

#include <chrono>
#include <iostream>

#include "mixmds/diagnostics.hpp"
#include "mixmds/io.hpp"
#include "mixmds/postprocess.hpp"

using namespace mixmds;

namespace {

double seconds(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename F>
double timed(const char* label, F&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const double dt = seconds(t0);
  std::cout.width(34);
  std::cout << std::left << label << dt << " s\n";
  return dt;
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::string(argv[1]) == "--quick";

  // larger-than-desk instance so the kernels have something to chew on
  ingest::SyntheticSpec spec;
  spec.S = quick ? 4 : 8;
  spec.H_true = 3;
  spec.n = {quick ? 6 : 20, quick ? 6 : 20};
  spec.feature_scales = {1.0, 0.7, 0.4};
  spec.noise_var = {0.02, 0.05};
  spec.seed = 7;
  auto [data, truth] = ingest::generate_synthetic(spec);

  Hyperparameters hp;
  hp.seed = 7;
  hp.H_init = 3;
  hp.dimension_error_threshold = 1e-3;  // keep H at its cap during the bench
  hp.finalize(data);

  sampler::Schedule sched;
  sched.n_iter = quick ? 2000 : 20000;
  sched.burn_in = quick ? 500 : 2000;
  sched.thin = 1;

  std::cout << "instance: S=" << spec.S << ", n=" << data.n_total()
            << ", draws per chain=" << (sched.n_iter - sched.burn_in) << "\n\n";

  const int n_chains = 2;
  std::vector<sampler::ChainOutput> chains;
  const double t_serial_fit = timed("fit x2 chains (serial)", [&] {
    chains = sampler::run_chains(data, hp, sched, n_chains, hp.seed, std::nullopt,
                                 /*parallel=*/false);
  });
  std::vector<sampler::ChainOutput> chains_par;
  const double t_parallel_fit = timed("fit x2 chains (OpenMP)", [&] {
    chains_par = sampler::run_chains(data, hp, sched, n_chains, hp.seed, std::nullopt,
                                     /*parallel=*/true);
  });
  std::cout << "  speedup " << t_serial_fit / t_parallel_fit << "x\n\n";

  postprocess::AlignedSamples aligned_serial;
  const double t_serial_align = timed("align_chain (serial)", [&] {
    aligned_serial = postprocess::align_chain(chains[0], 99, /*parallel=*/false);
  });
  postprocess::AlignedSamples aligned_parallel;
  const double t_parallel_align = timed("align_chain (OpenMP)", [&] {
    aligned_parallel = postprocess::align_chain(chains[0], 99, /*parallel=*/true);
  });
  std::cout << "  speedup " << t_serial_align / t_parallel_align << "x\n";

  bool identical = aligned_serial.draws.size() == aligned_parallel.draws.size();
  for (size_t t = 0; identical && t < aligned_serial.draws.size(); ++t) {
    identical = aligned_serial.draws[t].eta_shared ==
                aligned_parallel.draws[t].eta_shared;
  }
  std::cout << "  serial/parallel results identical: " << (identical ? "yes" : "NO")
            << "\n\n";

  diagnostics::DiagnosticsReport rep_serial;
  const double t_serial_diag = timed("diagnose (serial)", [&] {
    rep_serial = diagnostics::diagnose(chains, 1.1, /*parallel=*/false);
  });
  diagnostics::DiagnosticsReport rep_parallel;
  const double t_parallel_diag = timed("diagnose (OpenMP)", [&] {
    rep_parallel = diagnostics::diagnose(chains, 1.1, /*parallel=*/true);
  });
  std::cout << "  speedup " << t_serial_diag / t_parallel_diag << "x\n";
  std::cout << "  mpsrf identical: "
            << (rep_serial.mpsrf_delta == rep_parallel.mpsrf_delta ? "yes" : "NO")
            << "\n";
  return identical ? 0 : 1;
}
