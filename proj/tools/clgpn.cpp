#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "clgpn/diagnostics.hpp"
#include "clgpn/errors.hpp"
#include "clgpn/io.hpp"
#include "clgpn/sampler.hpp"
#include "clgpn/scoring.hpp"
#include "clgpn/simulation.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace clgpn;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;
constexpr const char* kManifest = "manifest.json";

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> chains;
  std::string out = ".";
  bool degrees = false;
  bool log_linear = false;
  std::optional<std::string> missing_token;
  std::optional<std::string> variant;
  std::optional<int> K;
  std::optional<std::string> scheme;
  std::optional<std::size_t> T;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "key = value configuration file");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--out", f.out, "output directory");
}

void add_data_flags(CLI::App* cmd, Flags& f) {
  cmd->add_flag("--degrees", f.degrees, "direction column is in degrees");
  cmd->add_flag("--log-linear", f.log_linear, "take the natural log of the linear column");
  cmd->add_option("--missing-token", f.missing_token, "token marking a missing value");
}

void add_model_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--chains", f.chains, "number of independent chains");
  cmd->add_option("--variant", f.variant, "clgpn, cldpn or ind")->check(CLI::IsMember({"clgpn", "cldpn", "ind"}));
  cmd->add_option("--K", f.K, "number of regimes");
}

/// Config file merged with command-line overrides.
ConfigFile resolve(const Flags& f) {
  ConfigFile cfg = f.config.empty() ? ConfigFile{} : ConfigFile::load(f.config);
  if (f.seed) cfg.set("seed", std::to_string(*f.seed));
  if (f.chains) cfg.set("chains", std::to_string(*f.chains));
  if (f.degrees) cfg.set("degrees", "true");
  if (f.log_linear) cfg.set("log_linear", "true");
  if (f.missing_token) cfg.set("missing_token", *f.missing_token);
  if (f.variant) cfg.set("variant", *f.variant);
  if (f.K) cfg.set("K", std::to_string(*f.K));
  if (f.scheme) cfg.set("scheme", *f.scheme);
  if (f.T) cfg.set("T", std::to_string(*f.T));
  return cfg;
}

DatasetOptions dataset_options(const ConfigFile& cfg) {
  DatasetOptions opt;
  opt.degrees = cfg.flag("degrees", false);
  opt.log_linear = cfg.flag("log_linear", false);
  opt.missing_token = cfg.text("missing_token", "NA");
  return opt;
}

std::size_t positive_count(const ConfigFile& cfg, const char* key, long long fallback) {
  const long long v = cfg.integer(key, fallback);
  if (v < 1) throw ConfigError(std::string("'") + key + "' must be at least 1");
  return static_cast<std::size_t>(v);
}

class Run {
 public:
  Run(std::string command, const ConfigFile& cfg, const std::string& out)
      : dir_(out), start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    manifest_.seed = static_cast<std::uint64_t>(cfg.integer("seed", 1));
    manifest_.config = cfg.values();
    manifest_.version = kVersion;
    fs::create_directories(dir_);
  }

  void input(const fs::path& path) {
    manifest_.inputs.push_back(fs::absolute(path).string());
    if (!manifest_.input_checksum.empty()) manifest_.input_checksum += ' ';
    manifest_.input_checksum += path.filename().string() + ':' + file_checksum(path);
  }

  std::ofstream open(const std::string& name) {
    std::ofstream os(dir_ / name);
    if (!os) throw InputError("cannot write " + (dir_ / name).string());
    manifest_.outputs.push_back(name);
    return os;
  }

  void finish() {
    manifest_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    manifest_.write(dir_ / kManifest);
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::chrono::steady_clock::time_point start_;
  RunManifest manifest_;
};

struct Fit {
  std::vector<ChainOutput> chains;  // aligned to the pooled MAP
  ChainOutput pooled;
};

Fit fit_model(const ObservationSeq& obs, const ChainConfig& cc, const Priors& pr, std::size_t n_chains,
              std::size_t workers) {
  Fit fit;
  fit.chains = run_chains(obs, cc, pr, n_chains, workers);
  std::size_t best_chain = 0;
  for (std::size_t c = 1; c < fit.chains.size(); ++c) {
    if (map_estimate(fit.chains[c]).log_posterior > map_estimate(fit.chains[best_chain]).log_posterior) best_chain = c;
  }
  const std::vector<RegimeParams> pivot = map_estimate(fit.chains[best_chain]).params;
  fit.pooled.K = cc.K;
  fit.pooled.variant = cc.variant;
  for (auto& ch : fit.chains) {
    ch = align_to_pivot(ch, pivot);
    ch.map_index = map_index(ch);
    fit.pooled.draws.insert(fit.pooled.draws.end(), ch.draws.begin(), ch.draws.end());
  }
  fit.pooled.acceptance = fit.chains[best_chain].acceptance;
  fit.pooled.map_index = map_index(fit.pooled);
  return fit;
}

void write_labels_csv(std::ostream& os, const ChainOutput& out) {
  os << "# manifest=" << kManifest << '\n';
  if (out.draws.empty()) return;
  os << "iteration";
  for (std::size_t t = 0; t < out.draws.front().states.labels.size(); ++t) os << ",xi" << t;
  os << '\n';
  for (const auto& d : out.draws) {
    os << d.iteration;
    for (int l : d.states.labels) os << ',' << l + 1;
    os << '\n';
  }
}

void write_imputed_csv(std::ostream& os, const ChainOutput& out) {
  os << "# manifest=" << kManifest << '\n';
  if (out.draws.empty()) return;
  os << "iteration";
  for (const auto& m : out.draws.front().imputed) os << ",x@" << m.time << ",y@" << m.time;
  os << '\n';
  os << std::setprecision(17);
  for (const auto& d : out.draws) {
    os << d.iteration;
    for (const auto& m : d.imputed) os << ',' << m.x << ',' << m.y;
    os << '\n';
  }
}

void write_acceptance(std::ostream& os, const ChainOutput& out) {
  os << "acceptance (post burn-in):";
  for (std::size_t k = 0; k < out.acceptance.sigma_rho.size(); ++k) {
    os << " sigma_rho[" << k + 1 << "]=" << std::fixed << std::setprecision(3) << out.acceptance.sigma_rho[k];
  }
  os << " radius=" << std::fixed << std::setprecision(3) << out.acceptance.radius << '\n';
  os.unsetf(std::ios::fixed);
}

void write_fit_outputs(Run& run, const Fit& fit) {
  for (std::size_t c = 0; c < fit.chains.size(); ++c) {
    const std::string suffix = std::to_string(c + 1) + ".csv";
    auto d = run.open("draws_chain" + suffix);
    write_draws_csv(d, fit.chains[c], kManifest);
    auto l = run.open("labels_chain" + suffix);
    write_labels_csv(l, fit.chains[c]);
    if (!fit.chains[c].draws.front().imputed.empty()) {
      auto m = run.open("imputed_chain" + suffix);
      write_imputed_csv(m, fit.chains[c]);
    }
  }
  auto s = run.open("states_map.csv");
  write_states(s, map_estimate(fit.pooled).states.labels, kManifest);
  auto summary = run.open("summary.txt");
  summary << "# manifest=" << kManifest << '\n';
  write_parameter_summary(summary, fit.pooled);
  write_acceptance(summary, fit.pooled);
}

struct ModelSetup {
  ChainConfig chain;
  Priors priors;
  std::size_t chains = 1;
  std::size_t workers = 0;
};

ModelSetup model_setup(const ConfigFile& cfg) {
  ModelSetup m;
  m.chain = chain_config_from(cfg);
  m.priors = priors_from(cfg);
  m.chains = positive_count(cfg, "chains", 1);
  m.workers = static_cast<std::size_t>(cfg.integer("workers", 0));
  return m;
}

Dataset load_data(Run& run, const std::string& path, const ConfigFile& cfg) {
  Dataset d = parse_dataset(path, dataset_options(cfg));
  run.input(path);
  return d;
}

int cmd_simulate(const Flags& f) {
  const ConfigFile cfg = resolve(f);
  Run run("simulate", cfg, f.out);
  const Scheme scheme = make_scheme(parse_scheme(cfg.text("scheme", "c")));
  const std::size_t T = positive_count(cfg, "T", 500);
  const auto seed = static_cast<std::uint64_t>(cfg.integer("seed", 1));
  const double fraction = cfg.number("missing_fraction", 0.0);
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ConfigError("'missing_fraction' must lie in [0, 1)");

  const SimulatedSeries sim = generate(scheme, T, seed);
  Dataset truth;
  truth.obs = sim.obs;
  for (std::size_t t = 1; t <= T; ++t) truth.time.push_back(static_cast<double>(t));
  Dataset data = truth;
  if (fraction > 0.0) apply_missing(data.obs, fraction, replicate_seed(seed, 0x6d697373ULL));

  auto d = run.open("data.csv");
  write_dataset(d, data, kManifest);
  auto t = run.open("truth.csv");
  write_dataset(t, truth, kManifest);
  auto s = run.open("states.csv");
  write_states(s, sim.states, kManifest);
  run.finish();
  return 0;
}

int cmd_fit(const Flags& f, const std::string& data_path) {
  const ConfigFile cfg = resolve(f);
  const ModelSetup m = model_setup(cfg);
  Run run("fit", cfg, f.out);
  const Dataset data = load_data(run, data_path, cfg);
  const Fit fit = fit_model(data.obs, m.chain, m.priors, m.chains, m.workers);
  write_fit_outputs(run, fit);
  run.finish();
  return 0;
}

int cmd_select(const Flags& f, const std::string& data_path) {
  const ConfigFile cfg = resolve(f);
  const ModelSetup m = model_setup(cfg);
  const int k_min = static_cast<int>(cfg.integer("k_min", 2));
  const int k_max = static_cast<int>(cfg.integer("k_max", 6));
  if (k_min < 1 || k_max < k_min || k_max > 8) throw ConfigError("need 1 <= k_min <= k_max <= 8");
  Run run("select", cfg, f.out);
  const Dataset data = load_data(run, data_path, cfg);

  std::vector<CriteriaRow> rows;
  for (int K = k_min; K <= k_max; ++K) {
    ChainConfig cc = m.chain;
    cc.K = K;
    const Fit fit = fit_model(data.obs, cc, m.priors, m.chains, m.workers);
    rows.push_back({K, criteria(map_estimate(fit.pooled), data.obs, cc.variant, m.priors.hyper_beta())});
  }
  auto csv = run.open("criteria.csv");
  csv << "# manifest=" << kManifest << '\n' << "K,params,map_loglik,aic,bic,icl\n" << std::setprecision(17);
  for (const auto& r : rows) {
    csv << r.K << ',' << r.report.param_count << ',' << r.report.map_loglik << ',' << r.report.aic << ','
        << r.report.bic << ',' << r.report.icl << '\n';
  }
  auto txt = run.open("criteria.txt");
  txt << "# manifest=" << kManifest << '\n';
  write_criteria_table(txt, rows);
  write_criteria_table(std::cout, rows);
  run.finish();
  return 0;
}

int cmd_study(const Flags& f) {
  const ConfigFile cfg = resolve(f);
  const ModelSetup m = model_setup(cfg);
  StudyConfig sc;
  sc.scheme = parse_scheme(cfg.text("scheme", "c"));
  sc.T = positive_count(cfg, "T", 500);
  sc.replicates = positive_count(cfg, "replicates", 10);
  sc.k_min = static_cast<int>(cfg.integer("k_min", 2));
  sc.k_max = static_cast<int>(cfg.integer("k_max", 6));
  if (sc.k_min < 1 || sc.k_max < sc.k_min || sc.k_max > 8) throw ConfigError("need 1 <= k_min <= k_max <= 8");
  sc.variants.clear();
  std::istringstream vs(cfg.text("variants", "clgpn,cldpn,ind"));
  for (std::string v; std::getline(vs, v, ',');) {
    try {
      sc.variants.push_back(parse_variant(v));
    } catch (const InputError& e) {
      throw ConfigError(std::string("'variants': ") + e.what());
    }
  }
  if (sc.variants.empty()) throw ConfigError("'variants' is empty");
  sc.chain = m.chain;
  sc.priors = m.priors;
  sc.seed = m.chain.seed;
  sc.workers = m.workers;
  Run run("study", cfg, f.out);
  const StudyResult res = run_study(sc);
  auto csv = run.open("study.csv");
  csv << "# manifest=" << kManifest << '\n';
  res.write_csv(csv);
  auto txt = run.open("frequencies.txt");
  txt << "# manifest=" << kManifest << '\n';
  res.write_table(txt);
  res.write_table(std::cout);
  run.finish();
  return 0;
}

int cmd_score(const Flags& f, const std::string& data_path, const std::string& truth_path) {
  const ConfigFile cfg = resolve(f);
  const ModelSetup m = model_setup(cfg);
  Run run("score", cfg, f.out);
  const Dataset data = load_data(run, data_path, cfg);
  const Dataset truth = load_data(run, truth_path, cfg);
  if (truth.obs.size() != data.obs.size()) throw InputError("data and truth files have different lengths");
  const Fit fit = fit_model(data.obs, m.chain, m.priors, m.chains, m.workers);
  write_fit_outputs(run, fit);
  const ScoreReport s = score_imputations(fit.pooled, data.obs, truth.obs);
  auto txt = run.open("scores.txt");
  txt << "# manifest=" << kManifest << '\n';
  write_scores(txt, s);
  write_scores(std::cout, s);
  run.finish();
  return 0;
}

/// Rebuild a pooled ChainOutput from the CSVs of a fit directory.
ChainOutput load_fit(const fs::path& dir, int K, Variant variant) {
  ChainOutput out;
  out.K = K;
  out.variant = variant;
  for (std::size_t c = 1;; ++c) {
    const fs::path draws_path = dir / ("draws_chain" + std::to_string(c) + ".csv");
    const fs::path labels_path = dir / ("labels_chain" + std::to_string(c) + ".csv");
    if (!fs::exists(draws_path)) {
      if (c == 1) throw InputError("no draws_chain1.csv in " + dir.string());
      break;
    }
    std::ifstream din(draws_path);
    std::ifstream lin(labels_path);
    if (!lin) throw InputError("missing " + labels_path.string());
    const DrawTable draws = read_draws_csv(din);
    const DrawTable labels = read_draws_csv(lin);
    const std::size_t expected = 2 + static_cast<std::size_t>(K) * RegimeParams::kSize;
    if (draws.names.size() != expected) throw InputError(draws_path.string() + ": column count does not match K");
    const std::size_t n = draws.columns[0].size();
    if (labels.columns.empty() || labels.columns[0].size() != n) {
      throw InputError(labels_path.string() + ": draw count does not match the draws file");
    }
    for (std::size_t i = 0; i < n; ++i) {
      Draw d;
      d.iteration = static_cast<std::size_t>(draws.columns[0][i]);
      d.log_posterior = draws.columns[1][i];
      for (int k = 0; k < K; ++k) {
        std::array<double, RegimeParams::kSize> a{};
        for (std::size_t j = 0; j < a.size(); ++j) {
          a[j] = draws.columns[2 + static_cast<std::size_t>(k) * RegimeParams::kSize + j][i];
        }
        d.params.push_back(RegimeParams::from_array(a, variant));
      }
      for (std::size_t t = 1; t < labels.columns.size(); ++t) {
        const int l = static_cast<int>(labels.columns[t][i]) - 1;
        if (l < 0 || l >= K) throw InputError(labels_path.string() + ": label out of range");
        d.states.labels.push_back(l);
      }
      d.states.radii.assign(d.states.labels.size() - 1, 1.0);
      out.draws.push_back(std::move(d));
    }
  }
  out.map_index = map_index(out);
  return out;
}

int cmd_summarize(const Flags& f, const std::string& fit_dir) {
  std::ifstream min(fs::path(fit_dir) / kManifest);
  if (!min) throw InputError("no " + std::string(kManifest) + " in " + fit_dir);
  nlohmann::json fit_manifest;
  try {
    fit_manifest = nlohmann::json::parse(min);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed manifest: ") + e.what());
  }
  // settings of the fit come from its manifest; command-line flags override them
  ConfigFile cfg;
  for (const auto& [key, value] : fit_manifest.at("config").items()) cfg.set(key, value.get<std::string>());
  const ConfigFile overrides = resolve(f);
  for (const auto& [key, value] : overrides.values()) cfg.set(key, value);

  const ModelSetup m = model_setup(cfg);
  Run run("summarize", cfg, f.out);
  const ChainOutput out = load_fit(fit_dir, m.chain.K, m.chain.variant);
  Rng rng(m.chain.seed);

  auto tr = run.open("transitions.txt");
  tr << "# manifest=" << kManifest << '\n';
  write_transition_summary(tr, out, m.priors.hyper_beta(), rng);
  write_transition_summary(std::cout, out, m.priors.hyper_beta(), rng);

  std::string data_path;
  if (fit_manifest.contains("inputs") && !fit_manifest["inputs"].empty()) {
    data_path = fit_manifest["inputs"][0].get<std::string>();
  }
  if (!data_path.empty() && fs::exists(data_path)) {
    const Dataset data = load_data(run, data_path, cfg);
    const Draw& map = map_estimate(out);
    if (map.states.labels.size() != data.obs.size() + 1) throw InputError("fit and data lengths differ");
    std::vector<RegimeSummary> summaries;
    for (int k = 0; k < out.K; ++k) {
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < data.obs.size(); ++i) {
        const auto& o = data.obs[i];
        if (map.states.labels[i + 1] == k && o.x && o.y) {
          xs.push_back(o.x->value());
          ys.push_back(*o.y);
        }
      }
      summaries.push_back(regime_summary(map.params[static_cast<std::size_t>(k)], xs, ys,
                                         positive_count(cfg, "mc_draws", 100000), rng));
    }
    auto rs = run.open("regimes.txt");
    rs << "# manifest=" << kManifest << '\n';
    write_regime_summaries(rs, summaries, data.obs.size());
    write_regime_summaries(std::cout, summaries, data.obs.size());
  }
  run.finish();
  return 0;
}

int cmd_diagnose(const Flags& f, const std::vector<std::string>& files) {
  const ConfigFile cfg = resolve(f);
  Run run("diagnose", cfg, f.out);
  std::vector<std::string> names;
  std::vector<std::vector<std::vector<double>>> chains;
  for (const auto& path : files) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    run.input(path);
    DrawTable t = read_draws_csv(in);
    if (t.names.size() < 3 || t.names[0] != "iteration") throw InputError(path + ": not a draws file");
    const std::vector<std::string> params(t.names.begin() + 2, t.names.end());
    if (names.empty()) {
      names = params;
    } else if (names != params) {
      throw InputError(path + ": columns differ from the first draws file");
    }
    chains.emplace_back(std::make_move_iterator(t.columns.begin() + 2), std::make_move_iterator(t.columns.end()));
  }
  const DiagnosticsReport rep = diagnose(names, chains);
  auto csv = run.open("diagnostics.csv");
  csv << "# manifest=" << kManifest << '\n' << "parameter,draws,mean,sd,ess,degenerate";
  for (std::size_t c = 1; c <= rep.chains; ++c) csv << ",geweke_z" << c;
  csv << '\n' << std::setprecision(10);
  for (const auto& p : rep.parameters) {
    csv << p.name << ',' << p.draws << ',' << p.mean << ',' << p.sd << ',' << p.ess << ',' << (p.degenerate ? 1 : 0);
    for (std::size_t c = 0; c < rep.chains; ++c) {
      csv << ',';
      if (c < p.geweke.size()) csv << p.geweke[c];
      else csv << "NA";
    }
    csv << '\n';
  }
  if (!rep.reliable) std::cout << "warning: fewer than 100 draws in some chain; diagnostics unreliable\n";
  std::cout << std::left << std::setw(16) << "parameter" << std::setw(12) << "ESS" << "Geweke z\n";
  for (const auto& p : rep.parameters) {
    std::cout << std::setw(16) << p.name << std::setw(12) << std::fixed << std::setprecision(1) << p.ess;
    if (p.degenerate) std::cout << "degenerate";
    for (double z : p.geweke) std::cout << std::setprecision(2) << z << ' ';
    std::cout << '\n';
  }
  run.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Circular-linear hidden Markov models with general projected normal emissions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Flags flags;
  std::string data_path, truth_path, fit_dir;
  std::vector<std::string> draw_files;

  auto* simulate = app.add_subcommand("simulate", "generate a series from a simulation scheme");
  add_common(simulate, flags);
  simulate->add_option("--scheme", flags.scheme, "a, b or c")->check(CLI::IsMember({"a", "b", "c"}));
  simulate->add_option("--T", flags.T, "series length");

  auto* fit = app.add_subcommand("fit", "run the sampler on a dataset");
  add_common(fit, flags);
  add_data_flags(fit, flags);
  add_model_flags(fit, flags);
  fit->add_option("data", data_path, "CSV with columns t, x, y")->required();

  auto* select = app.add_subcommand("select", "AIC, BIC and ICL over a range of K");
  add_common(select, flags);
  add_data_flags(select, flags);
  add_model_flags(select, flags);
  select->add_option("data", data_path, "CSV with columns t, x, y")->required();

  auto* score = app.add_subcommand("score", "fit, then score imputed values against the complete series");
  add_common(score, flags);
  add_data_flags(score, flags);
  add_model_flags(score, flags);
  score->add_option("data", data_path, "CSV with missing values")->required();
  score->add_option("truth", truth_path, "complete CSV")->required();

  auto* study = app.add_subcommand("study", "selection frequencies over simulated replicates");
  add_common(study, flags);
  study->add_option("--chains", flags.chains, "chains per fit");
  study->add_option("--scheme", flags.scheme, "a, b or c")->check(CLI::IsMember({"a", "b", "c"}));
  study->add_option("--T", flags.T, "series length");

  auto* summarize = app.add_subcommand("summarize", "transition and regime tables of a fit directory");
  add_common(summarize, flags);
  summarize->add_option("fit_dir", fit_dir, "output directory of a fit")->required();

  auto* diag = app.add_subcommand("diagnose", "effective sample sizes and Geweke scores of draw files");
  add_common(diag, flags);
  diag->add_option("draws", draw_files, "draws_chain*.csv files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(flags);
    if (*fit) return cmd_fit(flags, data_path);
    if (*select) return cmd_select(flags, data_path);
    if (*score) return cmd_score(flags, data_path, truth_path);
    if (*study) return cmd_study(flags);
    if (*summarize) return cmd_summarize(flags, fit_dir);
    if (*diag) return cmd_diagnose(flags, draw_files);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InputError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DomainError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
