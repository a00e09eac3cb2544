#include "mixmds/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mixmds::io {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.size();
  if (rows == 0) return {};
  const auto cols = j.at(0).size();
  Eigen::MatrixXd m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

json state_to_json(const ModelState& st) {
  json out;
  out["H"] = st.H;
  out["eta"] = matrix_to_json(st.eta);
  out["phi"] = matrix_to_json(st.phi);
  out["mgp_delta"] = vector_to_json(st.mgp_delta);
  out["w_group"] = vector_to_json(st.w_group);
  json wi = json::array();
  for (const auto& w : st.w_ind) wi.push_back(matrix_to_json(w));
  out["w_ind"] = std::move(wi);
  out["sigma2_eps"] = vector_to_json(st.sigma2_eps);
  return out;
}

ModelState state_from_json(const json& j) {
  ModelState st;
  st.H = j.at("H").get<int>();
  st.eta = matrix_from_json(j.at("eta"));
  st.phi = matrix_from_json(j.at("phi"));
  st.mgp_delta = vector_from_json(j.at("mgp_delta"));
  st.w_group = vector_from_json(j.at("w_group"));
  for (const auto& w : j.at("w_ind")) st.w_ind.push_back(matrix_from_json(w));
  st.sigma2_eps = vector_from_json(j.at("sigma2_eps"));
  return st;
}

void read_hp(const json& j, Hyperparameters& hp) {
  if (j.contains("a1")) hp.a1 = j["a1"].get<double>();
  if (j.contains("a2")) hp.a2 = j["a2"].get<double>();
  if (j.contains("nu")) hp.nu = j["nu"].get<double>();
  if (j.contains("weight_mean")) hp.weight_mean = j["weight_mean"].get<double>();
  if (j.contains("weight_var")) hp.weight_var = j["weight_var"].get<double>();
  if (j.contains("weight_prior")) {
    const std::string form = j["weight_prior"].get<std::string>();
    if (form == "gamma_on_inverse_square") {
      hp.weight_prior = WeightPriorForm::GammaOnInverseSquare;
    } else if (form == "inverse_gamma_on_w") {
      hp.weight_prior = WeightPriorForm::InvGammaOnW;
    } else {
      throw ValidationError("config: unknown weight_prior '" + form + "'");
    }
  }
  if (j.contains("sigma2_prior_mean")) {
    hp.sigma2_prior_mean = j["sigma2_prior_mean"].get<std::vector<double>>();
  }
  if (j.contains("sigma2_prior_var")) {
    hp.sigma2_prior_var = j["sigma2_prior_var"].get<std::vector<double>>();
  }
  if (j.contains("dimension_error_threshold")) {
    hp.dimension_error_threshold = j["dimension_error_threshold"].get<double>();
  }
  if (j.contains("adapt_alpha0")) hp.adapt_alpha0 = j["adapt_alpha0"].get<double>();
  if (j.contains("adapt_alpha1")) hp.adapt_alpha1 = j["adapt_alpha1"].get<double>();
  if (j.contains("H_init")) hp.H_init = j["H_init"].get<int>();
  if (j.contains("H_max")) hp.H_max = j["H_max"].get<int>();
  if (j.contains("error_norm")) {
    const std::string norm = j["error_norm"].get<std::string>();
    if (norm == "per_subject") {
      hp.error_norm = ErrorNorm::PerSubjectRatio;
    } else if (norm == "global") {
      hp.error_norm = ErrorNorm::GlobalRatio;
    } else {
      throw ValidationError("config: unknown error_norm '" + norm + "'");
    }
  }
  if (j.contains("proposal_scale_init")) {
    hp.proposal_scale_init = j["proposal_scale_init"].get<double>();
  }
  if (j.contains("target_accept")) hp.target_accept = j["target_accept"].get<double>();
  if (j.contains("adapt_batch")) hp.adapt_batch = j["adapt_batch"].get<int>();
}

json hp_to_json(const Hyperparameters& hp) {
  json j;
  j["a1"] = hp.a1;
  j["a2"] = hp.a2;
  j["nu"] = hp.nu;
  j["weight_mean"] = hp.weight_mean;
  j["weight_var"] = hp.weight_var;
  j["weight_prior"] = hp.weight_prior == WeightPriorForm::GammaOnInverseSquare
                          ? "gamma_on_inverse_square"
                          : "inverse_gamma_on_w";
  j["sigma2_prior_mean"] = hp.sigma2_prior_mean;
  j["sigma2_prior_var"] = hp.sigma2_prior_var;
  j["dimension_error_threshold"] = hp.dimension_error_threshold;
  j["adapt_alpha0"] = hp.adapt_alpha0;
  j["adapt_alpha1"] = hp.adapt_alpha1;
  j["H_init"] = hp.H_init;
  j["H_max"] = hp.H_max;
  j["error_norm"] =
      hp.error_norm == ErrorNorm::PerSubjectRatio ? "per_subject" : "global";
  j["proposal_scale_init"] = hp.proposal_scale_init;
  j["target_accept"] = hp.target_accept;
  j["adapt_batch"] = hp.adapt_batch;
  j["seed"] = hp.seed;
  return j;
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  RunConfig cfg;
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    if (p.contains("data")) cfg.data_path = p["data"].get<std::string>();
    if (p.contains("truth")) cfg.truth_path = p["truth"].get<std::string>();
    if (p.contains("out")) cfg.out_dir = p["out"].get<std::string>();
  }
  if (j.contains("seed")) cfg.hp.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("hyperparameters")) read_hp(j["hyperparameters"], cfg.hp);
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    if (s.contains("n_iter")) cfg.schedule.n_iter = s["n_iter"].get<long>();
    if (s.contains("burn_in")) cfg.schedule.burn_in = s["burn_in"].get<long>();
    if (s.contains("thin")) cfg.schedule.thin = s["thin"].get<long>();
    if (s.contains("freeze_H_after")) {
      cfg.schedule.freeze_H_after = s["freeze_H_after"].get<long>();
    }
    if (s.contains("prior_only")) cfg.schedule.prior_only = s["prior_only"].get<bool>();
    if (s.contains("chains")) cfg.chains = s["chains"].get<int>();
  }
  if (j.contains("init")) {
    const auto& ini = j["init"];
    const std::string scheme =
        ini.contains("scheme") ? ini["scheme"].get<std::string>() : "prior";
    if (scheme == "prior") {
      cfg.init = InitKind::Prior;
    } else if (scheme == "file") {
      cfg.init = InitKind::File;
      cfg.init_path = ini.at("path").get<std::string>();
    } else {
      throw ValidationError("config: unknown init scheme '" + scheme + "'");
    }
  }
  if (j.contains("credible_level")) {
    cfg.credible_level = j["credible_level"].get<double>();
  }
  if (j.contains("synthetic")) {
    const auto& s = j["synthetic"];
    auto& spec = cfg.synthetic;
    if (s.contains("S")) spec.S = s["S"].get<int>();
    if (s.contains("J")) spec.J = s["J"].get<int>();
    if (s.contains("n")) spec.n = s["n"].get<std::vector<int>>();
    if (s.contains("H_true")) spec.H_true = s["H_true"].get<int>();
    if (s.contains("feature_scales")) {
      spec.feature_scales = s["feature_scales"].get<std::vector<double>>();
    }
    if (s.contains("weight_mean")) spec.weight_mean = s["weight_mean"].get<double>();
    if (s.contains("weight_var")) spec.weight_var = s["weight_var"].get<double>();
    if (s.contains("noise_var")) {
      spec.noise_var = s["noise_var"].get<std::vector<double>>();
    }
  }
  cfg.synthetic.seed = derive_seed(cfg.hp.seed, 0x53494D);  // simulate stream
  return cfg;
}

RunConfig RunConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string config_hash(const RunConfig& cfg) {
  json j;
  j["hyperparameters"] = hp_to_json(cfg.hp);
  j["schedule"] = {{"n_iter", cfg.schedule.n_iter},
                   {"burn_in", cfg.schedule.burn_in},
                   {"thin", cfg.schedule.thin},
                   {"freeze_H_after", cfg.schedule.freeze_H_after},
                   {"prior_only", cfg.schedule.prior_only},
                   {"chains", cfg.chains}};
  j["init"] = cfg.init == RunConfig::InitKind::Prior ? "prior" : cfg.init_path.string();
  j["credible_level"] = cfg.credible_level;
  j["synthetic"] = {{"S", cfg.synthetic.S},
                    {"J", cfg.synthetic.J},
                    {"n", cfg.synthetic.n},
                    {"H_true", cfg.synthetic.H_true},
                    {"feature_scales", cfg.synthetic.feature_scales},
                    {"weight_mean", cfg.synthetic.weight_mean},
                    {"weight_var", cfg.synthetic.weight_var},
                    {"noise_var", cfg.synthetic.noise_var}};
  const std::string canon = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
  }
  std::filesystem::rename(tmp, path);
}

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_chain(const std::filesystem::path& path, const sampler::ChainOutput& chain,
                const std::string& hash) {
  json j;
  j["config_hash"] = hash;
  j["meta"] = {{"seed", chain.meta.seed},
               {"n_iter", chain.meta.n_iter},
               {"burn_in", chain.meta.burn_in},
               {"thin", chain.meta.thin},
               {"freeze_H_after", chain.meta.freeze_H_after},
               {"frozen_H", chain.meta.frozen_H},
               {"prior_only", chain.meta.prior_only}};
  j["H_trace"] = chain.H_trace;
  j["D_trace"] = chain.D_trace;

  auto rates = [&](auto&& blocks) {
    json arr = json::array();
    for (const auto& b : blocks) {
      arr.push_back({{"rate", b.rate()}, {"attempts", b.attempts}});
    }
    return arr;
  };
  json acc;
  json eta_acc = json::array();
  for (const auto& row : chain.adapt.eta) eta_acc.push_back(rates(row));
  acc["eta"] = std::move(eta_acc);
  acc["sigma2"] = rates(chain.adapt.sigma2);
  acc["w_group"] = rates(chain.adapt.w_group);
  json wi_acc = json::array();
  for (const auto& g : chain.adapt.w_ind) {
    json ga = json::array();
    for (const auto& row : g) ga.push_back(rates(row));
    wi_acc.push_back(std::move(ga));
  }
  acc["w_ind"] = std::move(wi_acc);
  j["accept"] = std::move(acc);

  json draws = json::array();
  for (const auto& d : chain.draws) draws.push_back(state_to_json(d));
  j["draws"] = std::move(draws);
  atomic_write(path, j.dump() + "\n");
}

sampler::ChainOutput load_chain(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open chain file: " + path.string());
  const json j = json::parse(in);
  sampler::ChainOutput chain;
  const auto& m = j.at("meta");
  chain.meta.seed = m.at("seed").get<std::uint64_t>();
  chain.meta.n_iter = m.at("n_iter").get<long>();
  chain.meta.burn_in = m.at("burn_in").get<long>();
  chain.meta.thin = m.at("thin").get<long>();
  chain.meta.freeze_H_after = m.at("freeze_H_after").get<long>();
  chain.meta.frozen_H = m.at("frozen_H").get<int>();
  chain.meta.prior_only = m.at("prior_only").get<bool>();
  chain.H_trace = j.at("H_trace").get<std::vector<int>>();
  chain.D_trace = j.at("D_trace").get<std::vector<double>>();
  for (const auto& d : j.at("draws")) chain.draws.push_back(state_from_json(d));

  // acceptance bookkeeping round-trips only the reported rates
  const auto& acc = j.at("accept");
  auto parse_rates = [](const json& arr) {
    std::vector<sampler::BlockAdapt> out(arr.size());
    for (size_t k = 0; k < arr.size(); ++k) {
      out[k].attempts = arr.at(k).at("attempts").get<long long>();
      const double rate = arr.at(k).at("rate").get<double>();
      out[k].accepts =
          rate < 0 ? 0 : static_cast<long long>(std::llround(rate * out[k].attempts));
    }
    return out;
  };
  for (const auto& row : acc.at("eta")) chain.adapt.eta.push_back(parse_rates(row));
  chain.adapt.sigma2 = parse_rates(acc.at("sigma2"));
  chain.adapt.w_group = parse_rates(acc.at("w_group"));
  for (const auto& g : acc.at("w_ind")) {
    std::vector<std::vector<sampler::BlockAdapt>> rows;
    for (const auto& row : g) rows.push_back(parse_rates(row));
    chain.adapt.w_ind.push_back(std::move(rows));
  }
  return chain;
}

void save_aligned(const std::filesystem::path& path,
                  const postprocess::AlignedSamples& aligned, const std::string& hash) {
  json j;
  j["config_hash"] = hash;
  j["dropped"] = aligned.dropped;
  j["passes"] = aligned.passes;
  j["reference"] = matrix_to_json(aligned.reference);
  json perms = json::array();
  for (const auto& p : aligned.perms) {
    perms.push_back({{"src", p.src}, {"sign", p.sign}});
  }
  j["perms"] = std::move(perms);
  json draws = json::array();
  for (const auto& d : aligned.draws) {
    json dj;
    dj["eta_shared"] = matrix_to_json(d.eta_shared);
    json eg = json::array();
    for (const auto& g : d.eta_group) eg.push_back(matrix_to_json(g));
    dj["eta_group"] = std::move(eg);
    dj["w_group"] = vector_to_json(d.w_group);
    json wi = json::array();
    for (const auto& w : d.w_ind) wi.push_back(matrix_to_json(w));
    dj["w_ind"] = std::move(wi);
    draws.push_back(std::move(dj));
  }
  j["draws"] = std::move(draws);
  atomic_write(path, j.dump() + "\n");
}

postprocess::AlignedSamples load_aligned(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open aligned file: " + path.string());
  const json j = json::parse(in);
  postprocess::AlignedSamples out;
  out.dropped = j.at("dropped").get<int>();
  out.passes = j.at("passes").get<int>();
  out.reference = matrix_from_json(j.at("reference"));
  for (const auto& p : j.at("perms")) {
    postprocess::SignedPerm sp;
    sp.src = p.at("src").get<std::vector<int>>();
    sp.sign = p.at("sign").get<std::vector<int>>();
    out.perms.push_back(std::move(sp));
  }
  for (const auto& dj : j.at("draws")) {
    postprocess::NormalizedDraw d;
    d.eta_shared = matrix_from_json(dj.at("eta_shared"));
    for (const auto& g : dj.at("eta_group")) d.eta_group.push_back(matrix_from_json(g));
    d.w_group = vector_from_json(dj.at("w_group"));
    for (const auto& w : dj.at("w_ind")) d.w_ind.push_back(matrix_from_json(w));
    out.draws.push_back(std::move(d));
  }
  return out;
}

ModelState load_init_state(const std::filesystem::path& path,
                           const DistanceDataset& data, const Hyperparameters& hp) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open init file: " + path.string());
  const json j = json::parse(in);
  ModelState st;
  st.eta = matrix_from_json(j.at("eta"));
  if (st.eta.rows() != data.S) {
    throw ValidationError("init file: eta must have one row per stimulus");
  }
  st.H = static_cast<int>(st.eta.cols());
  if (st.H < 1 || st.H > hp.H_max) {
    throw ValidationError("init file: feature count must be in [1, H_max]");
  }
  st.w_group = j.contains("w_group") ? vector_from_json(j.at("w_group"))
                                     : Eigen::VectorXd::Ones(data.J).eval();
  st.w_ind.resize(data.J);
  if (j.contains("w_ind")) {
    const auto& wi = j.at("w_ind");
    for (int g = 0; g < data.J; ++g) st.w_ind[g] = matrix_from_json(wi.at(g));
  } else {
    for (int g = 0; g < data.J; ++g) {
      st.w_ind[g] = Eigen::MatrixXd::Ones(data.n[g], st.H);
    }
  }
  st.phi = Eigen::MatrixXd::Ones(data.S, st.H);
  st.mgp_delta.resize(st.H);
  st.mgp_delta[0] = hp.a1;
  for (int h = 1; h < st.H; ++h) st.mgp_delta[h] = hp.a2;
  st.sigma2_eps.resize(data.J);
  for (int g = 0; g < data.J; ++g) st.sigma2_eps[g] = hp.sigma2_prior_mean[g];
  st.validate(data.S, data.J, data.n);
  return st;
}

void save_truth(const std::filesystem::path& path, const ingest::GroundTruth& truth,
                const ingest::SyntheticSpec& spec, const std::string& hash) {
  json j;
  j["config_hash"] = hash;
  j["spec"] = {{"S", spec.S},
               {"J", spec.J},
               {"n", spec.n},
               {"H_true", spec.H_true},
               {"feature_scales", spec.feature_scales},
               {"weight_mean", spec.weight_mean},
               {"weight_var", spec.weight_var},
               {"noise_var", spec.noise_var},
               {"seed", spec.seed}};
  j["eta"] = matrix_to_json(truth.eta);
  j["w_group"] = vector_to_json(truth.w_group);
  json wi = json::array();
  for (const auto& w : truth.w_ind) wi.push_back(matrix_to_json(w));
  j["w_ind"] = std::move(wi);
  j["sigma2"] = vector_to_json(truth.sigma2);
  json dl = json::array();
  for (const auto& d : truth.delta) dl.push_back(matrix_to_json(d));
  j["delta"] = std::move(dl);
  atomic_write(path, j.dump(2) + "\n");
}

ingest::GroundTruth load_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open truth file: " + path.string());
  const json j = json::parse(in);
  ingest::GroundTruth t;
  t.eta = matrix_from_json(j.at("eta"));
  t.w_group = vector_from_json(j.at("w_group"));
  for (const auto& w : j.at("w_ind")) t.w_ind.push_back(matrix_from_json(w));
  t.sigma2 = vector_from_json(j.at("sigma2"));
  for (const auto& d : j.at("delta")) t.delta.push_back(matrix_from_json(d));
  return t;
}

namespace {

void write_table(const std::filesystem::path& path, const std::string& hash,
                 const std::string& header, const std::string& body) {
  std::ostringstream out;
  out << "# config_hash=" << hash << "\n" << header << "\n" << body;
  atomic_write(path, out.str());
}

}  // namespace

void write_summary_tables(const std::filesystem::path& out_dir,
                          const postprocess::PosteriorSummary& sm,
                          const DistanceDataset& data,
                          const std::vector<sampler::ChainOutput>& chains,
                          const std::string& hash) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto entry = [&](const postprocess::SummaryEntry& e) {
    return format_double(e.median) + "," + format_double(e.lower) + "," +
           format_double(e.upper);
  };

  {
    std::ostringstream body;
    size_t idx = 0;
    for (int j = 0; j < sm.J; ++j) {
      for (int i = 0; i < sm.n[j]; ++i) {
        for (int s = 1; s < sm.S; ++s) {
          for (int r = 0; r < s; ++r, ++idx) {
            body << j + 1 << "," << i + 1 << "," << s + 1 << "," << r + 1 << ","
                 << format_double(data.value(j, i, s, r)) << ","
                 << entry(sm.delta_ind[idx]) << "\n";
          }
        }
      }
    }
    write_table(out_dir / "summary_delta_individual.csv", hash,
                "group,subject,s,r,observed,median,lower,upper", body.str());
  }
  {
    std::ostringstream body;
    size_t idx = 0;
    for (int j = 0; j < sm.J; ++j) {
      for (int s = 1; s < sm.S; ++s) {
        for (int r = 0; r < s; ++r, ++idx) {
          double obs = 0.0;
          for (int i = 0; i < sm.n[j]; ++i) obs += data.value(j, i, s, r);
          obs /= sm.n[j];
          body << j + 1 << "," << s + 1 << "," << r + 1 << "," << format_double(obs)
               << "," << entry(sm.delta_group[idx]) << "\n";
        }
      }
    }
    write_table(out_dir / "summary_delta_group.csv", hash,
                "group,s,r,observed_mean,median,lower,upper", body.str());
  }
  {
    std::ostringstream body;
    size_t idx = 0;
    for (int s = 0; s < sm.S; ++s) {
      for (int h = 0; h < sm.H; ++h, ++idx) {
        body << s + 1 << "," << h + 1 << "," << entry(sm.eta_shared[idx]) << "\n";
      }
    }
    write_table(out_dir / "summary_eta_shared.csv", hash, "s,h,median,lower,upper",
                body.str());
  }
  {
    std::ostringstream body;
    size_t idx = 0;
    for (int j = 0; j < sm.J; ++j) {
      for (int s = 0; s < sm.S; ++s) {
        for (int h = 0; h < sm.H; ++h, ++idx) {
          body << j + 1 << "," << s + 1 << "," << h + 1 << ","
               << entry(sm.eta_group[idx]) << "\n";
        }
      }
    }
    write_table(out_dir / "summary_eta_group.csv", hash, "group,s,h,median,lower,upper",
                body.str());
  }
  {
    std::ostringstream body;
    size_t idx = 0;
    for (int j = 0; j < sm.J; ++j) {
      for (int i = 0; i < sm.n[j]; ++i) {
        for (int s = 0; s < sm.S; ++s) {
          for (int h = 0; h < sm.H; ++h, ++idx) {
            body << j + 1 << "," << i + 1 << "," << s + 1 << "," << h + 1 << ","
                 << entry(sm.eta_ind[idx]) << "\n";
          }
        }
      }
    }
    write_table(out_dir / "summary_eta_individual.csv", hash,
                "group,subject,s,h,median,lower,upper", body.str());
  }
  {
    std::ostringstream body;
    for (int j = 0; j < sm.J; ++j) {
      body << j + 1 << "," << entry(sm.w_group[j]) << "\n";
    }
    write_table(out_dir / "summary_weights_group.csv", hash,
                "group,median,lower,upper", body.str());
  }
  {
    std::ostringstream body;
    size_t idx = 0;
    for (int j = 0; j < sm.J; ++j) {
      for (int i = 0; i < sm.n[j]; ++i) {
        for (int h = 0; h < sm.H; ++h, ++idx) {
          body << j + 1 << "," << i + 1 << "," << h + 1 << "," << entry(sm.w_ind[idx])
               << "\n";
        }
      }
    }
    write_table(out_dir / "summary_weights_individual.csv", hash,
                "group,subject,h,median,lower,upper", body.str());
  }
  {
    std::ostringstream body;
    for (int j = 0; j < sm.J; ++j) {
      body << j + 1 << "," << entry(sm.sigma2[j]) << "\n";
    }
    write_table(out_dir / "summary_sigma2.csv", hash, "group,median,lower,upper",
                body.str());
  }
  {
    std::ostringstream body;
    body << entry(sm.H_summary) << "\n";
    write_table(out_dir / "summary_H.csv", hash, "median,lower,upper", body.str());
  }
  for (size_t c = 0; c < chains.size(); ++c) {
    std::ostringstream body;
    const auto& ch = chains[c];
    for (size_t t = 0; t < ch.H_trace.size(); ++t) {
      body << t << "," << ch.H_trace[t] << "," << format_double(ch.D_trace[t]) << "\n";
    }
    write_table(out_dir / ("trace_H_D_chain" + std::to_string(c + 1) + ".csv"), hash,
                "iteration,H,D", body.str());
  }
}

void write_diagnostics(const std::filesystem::path& out_dir,
                       const diagnostics::DiagnosticsReport& report,
                       const std::vector<sampler::ChainOutput>& chains,
                       const std::string& hash) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  json j;
  j["config_hash"] = hash;
  j["psrf_threshold"] = report.psrf_threshold;
  j["mpsrf_delta"] = report.mpsrf_delta;
  json q = json::array();
  for (const auto& d : report.quantities) {
    q.push_back({{"name", d.name},
                 {"psrf", d.psrf},
                 {"ess", d.ess},
                 {"zero_variance", d.zero_variance}});
  }
  j["quantities"] = std::move(q);
  j["flags"] = report.flags;

  json acc = json::object();
  for (size_t c = 0; c < chains.size(); ++c) {
    const auto& a = chains[c].adapt;
    json chain_acc;
    json eta = json::array();
    for (const auto& row : a.eta) {
      json r = json::array();
      for (const auto& b : row) r.push_back(b.rate());
      eta.push_back(std::move(r));
    }
    chain_acc["eta"] = std::move(eta);
    json s2 = json::array();
    for (const auto& b : a.sigma2) s2.push_back(b.rate());
    chain_acc["sigma2"] = std::move(s2);
    json wg = json::array();
    for (const auto& b : a.w_group) wg.push_back(b.rate());
    chain_acc["w_group"] = std::move(wg);
    json wi = json::array();
    for (const auto& g : a.w_ind) {
      json gj = json::array();
      for (const auto& row : g) {
        json r = json::array();
        for (const auto& b : row) r.push_back(b.rate());
        gj.push_back(std::move(r));
      }
      wi.push_back(std::move(gj));
    }
    chain_acc["w_ind"] = std::move(wi);
    acc["chain" + std::to_string(c + 1)] = std::move(chain_acc);
  }
  j["accept_rates"] = std::move(acc);
  atomic_write(out_dir / "diagnostics.json", j.dump(2) + "\n");

  std::ostringstream txt;
  txt << "# config_hash=" << hash << "\n";
  txt << "quantity                     PSRF        ESS\n";
  for (const auto& d : report.quantities) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-24s %8.4f %10.1f%s\n", d.name.c_str(), d.psrf,
                  d.ess, d.zero_variance ? "  (zero variance)" : "");
    txt << line;
  }
  txt << "\nmultivariate PSRF (delta): " << format_double(report.mpsrf_delta) << "\n";
  if (report.flags.empty()) {
    txt << "all tracked quantities below threshold "
        << format_double(report.psrf_threshold) << "\n";
  } else {
    txt << "FLAGGED (PSRF > " << format_double(report.psrf_threshold) << "):\n";
    for (const auto& f : report.flags) txt << "  " << f << "\n";
  }
  atomic_write(out_dir / "diagnostics.txt", txt.str());
}

}  // namespace mixmds::io
