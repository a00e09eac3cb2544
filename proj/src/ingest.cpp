#include "mixmds/ingest.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "mixmds/model.hpp"

namespace mixmds::ingest {

void TrialSignals::validate() const {
  if (S < 1 || T < 1) throw ValidationError("TrialSignals: S and T must be >= 1");
  if (f.size() != group.size()) {
    throw ValidationError("TrialSignals: one group id per subject required");
  }
  for (size_t i = 0; i < f.size(); ++i) {
    if (static_cast<int>(f[i].size()) != S) {
      throw ValidationError("TrialSignals: subject " + std::to_string(i + 1) +
                            " must have one block per stimulus");
    }
    for (int s = 0; s < S; ++s) {
      if (f[i][s].size() < 2) {
        throw ValidationError("TrialSignals: subject " + std::to_string(i + 1) +
                              " stimulus " + std::to_string(s + 1) +
                              " needs at least 2 trials");
      }
      for (const auto& trial : f[i][s]) {
        if (static_cast<int>(trial.size()) != T) {
          throw ValidationError("TrialSignals: inconsistent T for subject " +
                                std::to_string(i + 1));
        }
        for (double v : trial) {
          if (!std::isfinite(v)) {
            throw ValidationError("TrialSignals: non-finite sample for subject " +
                                  std::to_string(i + 1));
          }
        }
      }
    }
  }
}

std::vector<std::vector<std::vector<double>>> preprocess_trials(
    const TrialSignals& signals) {
  signals.validate();
  const int S = signals.S;
  const int T = signals.T;
  const int N = signals.n_subjects();

  std::vector<std::vector<std::vector<double>>> out(N);
  std::vector<int> degenerate_t(N, -1);  // first bad time index per subject
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < N; ++i) {
    std::vector<std::vector<double>> means(S, std::vector<double>(T, 0.0));
    std::vector<std::vector<double>> sds(S, std::vector<double>(T, 0.0));
    for (int s = 0; s < S; ++s) {
      const auto& trials = signals.f[i][s];
      const double M = static_cast<double>(trials.size());
      for (int t = 0; t < T; ++t) {
        double mean = 0.0;
        for (const auto& trial : trials) mean += trial[t];
        mean /= M;
        double sse = 0.0;
        for (const auto& trial : trials) {
          sse += (trial[t] - mean) * (trial[t] - mean);
        }
        means[s][t] = mean;
        sds[s][t] = std::sqrt(sse / (M - 1.0));
      }
    }
    std::vector<std::vector<double>> rescaled(S, std::vector<double>(T, 0.0));
    for (int t = 0; t < T && degenerate_t[i] < 0; ++t) {
      double pooled = 0.0;
      for (int s = 0; s < S; ++s) pooled += sds[s][t];
      pooled /= S;
      if (!(pooled > 0.0)) {
        degenerate_t[i] = t;
        break;
      }
      for (int s = 0; s < S; ++s) rescaled[s][t] = means[s][t] / pooled;
    }
    out[i] = std::move(rescaled);
  }
  for (int i = 0; i < N; ++i) {
    if (degenerate_t[i] >= 0) {
      throw ValidationError("preprocess_trials: zero pooled deviation for subject " +
                            std::to_string(i + 1) +
                            " at t=" + std::to_string(degenerate_t[i]));
    }
  }
  return out;
}

DistanceDataset distances_from_signals(
    const std::vector<std::vector<std::vector<double>>>& rescaled,
    const std::vector<int>& group, int n_groups) {
  if (rescaled.size() != group.size()) {
    throw ValidationError("distances_from_signals: one group id per subject");
  }
  const int S = static_cast<int>(rescaled.front().size());
  DistanceDataset ds;
  ds.S = S;
  ds.J = n_groups;
  ds.n.assign(n_groups, 0);
  std::vector<std::vector<int>> members(n_groups);
  for (size_t i = 0; i < group.size(); ++i) {
    const int j = group[i] - 1;
    if (j < 0 || j >= n_groups) {
      throw ValidationError("distances_from_signals: bad group id for subject " +
                            std::to_string(i + 1));
    }
    members[j].push_back(static_cast<int>(i));
    ++ds.n[j];
  }
  ds.d.resize(n_groups);
  for (int j = 0; j < n_groups; ++j) {
    ds.d[j].resize(ds.n[j], ds.n_pairs());
    for (int i = 0; i < ds.n[j]; ++i) {
      const auto& subj = rescaled[members[j][i]];
      for (int s = 1; s < S; ++s) {
        for (int r = 0; r < s; ++r) {
          double sum = 0.0;
          for (size_t t = 0; t < subj[s].size(); ++t) {
            const double diff = subj[s][t] - subj[r][t];
            sum += diff * diff;
          }
          const double dist = std::sqrt(sum);
          if (!(dist > 0.0)) {
            throw ValidationError(
                "distances_from_signals: zero distance between stimuli " +
                std::to_string(s + 1) + " and " + std::to_string(r + 1) +
                " for subject " + std::to_string(members[j][i] + 1));
          }
          ds.d[j](i, DistanceDataset::pair_index(s, r)) = dist;
        }
      }
    }
  }
  ds.validate();
  return ds;
}

void SyntheticSpec::validate() const {
  if (S < 2 || J < 1 || H_true < 1 || H_true >= S) {
    throw ValidationError("SyntheticSpec: need S >= 2, J >= 1, 1 <= H_true < S");
  }
  if (static_cast<int>(n.size()) != J || static_cast<int>(noise_var.size()) != J) {
    throw ValidationError("SyntheticSpec: n and noise_var need one entry per group");
  }
  for (int nj : n) {
    if (nj < 1) throw ValidationError("SyntheticSpec: subject counts must be >= 1");
  }
  if (static_cast<int>(feature_scales.size()) != H_true) {
    throw ValidationError("SyntheticSpec: one feature scale per true dimension");
  }
  for (double sc : feature_scales) {
    if (!(sc > 0.0)) throw ValidationError("SyntheticSpec: feature scales must be > 0");
  }
  for (double v : noise_var) {
    if (!(v > 0.0)) throw ValidationError("SyntheticSpec: noise variances must be > 0");
  }
  if (!(weight_mean > 0.0) || !(weight_var > 0.0)) {
    throw ValidationError("SyntheticSpec: weight moments must be > 0");
  }
}

std::pair<DistanceDataset, GroundTruth> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const WeightHyper wh = solve_weight_hyperparams(spec.weight_mean, spec.weight_var);
  constexpr double kDeltaFloor = 1e-6;

  for (int attempt = 0;; ++attempt) {
    Rng rng(derive_seed(spec.seed, attempt));
    GroundTruth truth;
    truth.eta.resize(spec.S, spec.H_true);
    for (int s = 0; s < spec.S; ++s) {
      for (int h = 0; h < spec.H_true; ++h) {
        truth.eta(s, h) = rng.normal(0.0, spec.feature_scales[h]);
      }
    }
    truth.w_group.resize(spec.J);
    for (int j = 0; j < spec.J; ++j) {
      truth.w_group[j] =
          draw_weight(rng, wh.a_w, wh.b_w, WeightPriorForm::GammaOnInverseSquare);
    }
    truth.w_ind.resize(spec.J);
    for (int j = 0; j < spec.J; ++j) {
      truth.w_ind[j].resize(spec.n[j], spec.H_true);
      for (int i = 0; i < spec.n[j]; ++i) {
        for (int h = 0; h < spec.H_true; ++h) {
          truth.w_ind[j](i, h) =
              draw_weight(rng, wh.a_w, wh.b_w, WeightPriorForm::GammaOnInverseSquare);
        }
      }
    }
    truth.sigma2.resize(spec.J);
    for (int j = 0; j < spec.J; ++j) truth.sigma2[j] = spec.noise_var[j];

    ModelState st;
    st.H = spec.H_true;
    st.eta = truth.eta;
    st.w_group = truth.w_group;
    st.w_ind = truth.w_ind;
    st.phi = Eigen::MatrixXd::Ones(spec.S, spec.H_true);
    st.mgp_delta = Eigen::VectorXd::Ones(spec.H_true);
    st.sigma2_eps = truth.sigma2;

    bool degenerate = false;
    truth.delta.resize(spec.J);
    DistanceDataset ds;
    ds.S = spec.S;
    ds.J = spec.J;
    ds.n = spec.n;
    ds.d.resize(spec.J);
    for (int j = 0; j < spec.J && !degenerate; ++j) {
      truth.delta[j].resize(spec.n[j], ds.n_pairs());
      ds.d[j].resize(spec.n[j], ds.n_pairs());
      for (int i = 0; i < spec.n[j] && !degenerate; ++i) {
        for (int s = 1; s < spec.S && !degenerate; ++s) {
          for (int r = 0; r < s; ++r) {
            const double delta = model::latent_distance(st, j, i, s, r);
            if (delta < kDeltaFloor) {
              degenerate = true;
              break;
            }
            truth.delta[j](i, DistanceDataset::pair_index(s, r)) = delta;
            const GammaShapeRate g =
                gamma_mean_var_to_shape_rate(delta, spec.noise_var[j]);
            double d = 0.0;
            do {
              d = rng.gamma(g.shape, g.rate);
            } while (!(d > 0.0));
            ds.d[j](i, DistanceDataset::pair_index(s, r)) = d;
          }
        }
      }
    }
    if (degenerate) {
      std::cerr << "generate_synthetic: degenerate latent distance, reseeding "
                   "(attempt "
                << attempt + 1 << ")\n";
      continue;
    }
    ds.validate();
    return {std::move(ds), std::move(truth)};
  }
}

DistanceDataset simulate_distances(const ModelState& state, const std::vector<int>& n,
                                   Rng& rng) {
  DistanceDataset ds;
  ds.S = state.S();
  ds.J = state.J();
  ds.n = n;
  ds.d.resize(ds.J);
  for (int j = 0; j < ds.J; ++j) {
    ds.d[j].resize(n[j], ds.n_pairs());
    for (int i = 0; i < n[j]; ++i) {
      for (int s = 1; s < ds.S; ++s) {
        for (int r = 0; r < s; ++r) {
          const double delta = model::latent_distance(state, j, i, s, r);
          const GammaShapeRate g =
              gamma_mean_var_to_shape_rate(delta, state.sigma2_eps[j]);
          double d = 0.0;
          do {
            d = rng.gamma(g.shape, g.rate);
          } while (!(d > 0.0));
          ds.d[j](i, DistanceDataset::pair_index(s, r)) = d;
        }
      }
    }
  }
  return ds;
}

namespace {

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

DistanceDataset read_distance_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open distance file: " + path.string());

  struct Row {
    int group, subject, s, r;
    double d;
    int line;
  };
  std::vector<Row> rows;
  std::ostringstream errs;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {  // expect "group,subject,s,r,d"
      header_seen = true;
      continue;
    }
    std::istringstream ls(line);
    Row row{};
    row.line = line_no;
    char c1, c2, c3, c4;
    if (!(ls >> row.group >> c1 >> row.subject >> c2 >> row.s >> c3 >> row.r >> c4 >>
          row.d) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',') {
      errs << "line " << line_no << ": malformed row\n";
      continue;
    }
    rows.push_back(row);
  }
  if (rows.empty()) errs << "no data rows\n";
  if (!errs.str().empty()) {
    throw ValidationError("invalid distance file " + path.string() + ":\n" + errs.str());
  }

  int J = 0, S = 0;
  for (const auto& row : rows) {
    J = std::max(J, row.group);
    S = std::max(S, std::max(row.s, row.r));
  }
  std::vector<int> n(J, 0);
  for (const auto& row : rows) {
    if (row.group < 1) {
      errs << "line " << row.line << ": group must be >= 1\n";
      continue;
    }
    n[row.group - 1] = std::max(n[row.group - 1], row.subject);
  }
  DistanceDataset ds;
  ds.J = J;
  ds.S = S;
  ds.n = n;
  ds.d.resize(J);
  std::vector<Eigen::MatrixXi> seen(J);
  for (int j = 0; j < J; ++j) {
    ds.d[j] = Eigen::MatrixXd::Zero(n[j], ds.n_pairs());
    seen[j] = Eigen::MatrixXi::Zero(n[j], ds.n_pairs());
  }
  for (const auto& row : rows) {
    if (row.group < 1 || row.subject < 1 || row.r < 1 || row.s <= row.r || row.s > S) {
      errs << "line " << row.line << ": bad indices (need 1 <= r < s <= S)\n";
      continue;
    }
    if (!(row.d > 0.0) || !std::isfinite(row.d)) {
      errs << "line " << row.line << ": distance must be finite and > 0\n";
      continue;
    }
    const int p = DistanceDataset::pair_index(row.s - 1, row.r - 1);
    if (seen[row.group - 1](row.subject - 1, p)++) {
      errs << "line " << row.line << ": duplicate pair\n";
      continue;
    }
    ds.d[row.group - 1](row.subject - 1, p) = row.d;
  }
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < n[j]; ++i) {
      for (int p = 0; p < ds.n_pairs(); ++p) {
        if (!seen[j](i, p)) {
          errs << "missing pair " << p + 1 << " for group " << j + 1 << " subject "
               << i + 1 << "\n";
        }
      }
    }
  }
  if (!errs.str().empty()) {
    throw ValidationError("invalid distance file " + path.string() + ":\n" + errs.str());
  }
  ds.validate();
  return ds;
}

void write_distance_csv(const std::filesystem::path& path, const DistanceDataset& data,
                        const std::string& header_comment) {
  std::ostringstream out;
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << "group,subject,s,r,d\n";
  for (int j = 0; j < data.J; ++j) {
    for (int i = 0; i < data.n[j]; ++i) {
      for (int s = 1; s < data.S; ++s) {
        for (int r = 0; r < s; ++r) {
          out << j + 1 << "," << i + 1 << "," << s + 1 << "," << r + 1 << ","
              << format_double(data.value(j, i, s, r)) << "\n";
        }
      }
    }
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << out.str();
  }
  std::filesystem::rename(tmp, path);
}

TrialSignals read_signals(const std::filesystem::path& meta_json_path) {
  std::ifstream in(meta_json_path);
  if (!in) {
    throw ValidationError("cannot open signal metadata: " + meta_json_path.string());
  }
  nlohmann::json meta = nlohmann::json::parse(in);
  TrialSignals sig;
  sig.S = meta.at("S").get<int>();
  sig.T = meta.at("T").get<int>();
  sig.group = meta.at("group").get<std::vector<int>>();
  const int N = static_cast<int>(sig.group.size());

  std::vector<std::vector<int>> trials(N, std::vector<int>(sig.S));
  const auto& m = meta.at("trials");
  if (m.is_number_integer()) {
    for (auto& row : trials) std::fill(row.begin(), row.end(), m.get<int>());
  } else {
    for (int i = 0; i < N; ++i) {
      for (int s = 0; s < sig.S; ++s) trials[i][s] = m.at(i).at(s).get<int>();
    }
  }

  const std::filesystem::path bin =
      meta_json_path.parent_path() / meta.at("data").get<std::string>();
  std::ifstream df(bin, std::ios::binary);
  if (!df) throw ValidationError("cannot open signal data: " + bin.string());
  sig.f.resize(N);
  for (int i = 0; i < N; ++i) {
    sig.f[i].resize(sig.S);
    for (int s = 0; s < sig.S; ++s) {
      sig.f[i][s].resize(trials[i][s]);
      for (int mtrial = 0; mtrial < trials[i][s]; ++mtrial) {
        sig.f[i][s][mtrial].resize(sig.T);
        df.read(reinterpret_cast<char*>(sig.f[i][s][mtrial].data()),
                static_cast<std::streamsize>(sig.T * sizeof(double)));
        if (!df) {
          throw ValidationError("signal data file truncated: " + bin.string());
        }
      }
    }
  }
  sig.validate();
  return sig;
}

void write_signals(const std::filesystem::path& meta_json_path,
                   const TrialSignals& signals) {
  signals.validate();
  const std::filesystem::path bin = meta_json_path.string() + ".bin";
  nlohmann::json meta;
  meta["S"] = signals.S;
  meta["T"] = signals.T;
  meta["group"] = signals.group;
  std::vector<std::vector<int>> trials;
  for (const auto& subj : signals.f) {
    std::vector<int> row;
    for (const auto& stim : subj) row.push_back(static_cast<int>(stim.size()));
    trials.push_back(row);
  }
  meta["trials"] = trials;
  meta["data"] = bin.filename().string();
  {
    std::ofstream f(meta_json_path);
    f << meta.dump(2) << "\n";
  }
  std::ofstream df(bin, std::ios::binary);
  for (const auto& subj : signals.f) {
    for (const auto& stim : subj) {
      for (const auto& trial : stim) {
        df.write(reinterpret_cast<const char*>(trial.data()),
                 static_cast<std::streamsize>(trial.size() * sizeof(double)));
      }
    }
  }
}

}  // namespace mixmds::ingest
