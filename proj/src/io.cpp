#include "clgpn/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include "json.hpp"
#include <sstream>

namespace clgpn {

const char* const kVersion = "clgpn-hmm 1.0.0";

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string data_error(const std::string& source, std::size_t line, const std::string& what) {
  return source + ":" + std::to_string(line) + ": " + what;
}

int find_column(const std::vector<std::string>& header, std::initializer_list<const char*> names) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = lower(header[i]);
    for (const char* n : names) {
      if (h == n) return static_cast<int>(i);
    }
  }
  return -1;
}

void write_number(std::ostream& os, double v) { os << std::setprecision(17) << v; }

std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

Dataset read_dataset(std::istream& is, const DatasetOptions& opt, const std::string& source) {
  Dataset d;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  int col_t = 0, col_x = 1, col_y = 2;
  std::size_t width = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto cells = split_csv(stripped);
    if (!have_header) {
      have_header = true;
      width = cells.size();
      col_t = find_column(cells, {"t", "time"});
      col_x = find_column(cells, {"x", "direction", "dir"});
      col_y = find_column(cells, {"y", "linear", "speed"});
      if (col_t < 0 || col_x < 0 || col_y < 0) {
        if (width != 3) {
          throw InputError(data_error(source, line_no, "header must name t, x and y columns"));
        }
        col_t = 0;
        col_x = 1;
        col_y = 2;
      }
      continue;
    }
    if (cells.size() != width) {
      throw InputError(data_error(source, line_no,
                                  "expected " + std::to_string(width) + " fields, found " + std::to_string(cells.size())));
    }
    double t = 0.0;
    if (!parse_double(cells[static_cast<std::size_t>(col_t)], t)) {
      throw InputError(data_error(source, line_no, "malformed time index '" + cells[static_cast<std::size_t>(col_t)] + "'"));
    }
    if (!d.time.empty() && !(t > d.time.back())) {
      throw InputError(data_error(source, line_no, "time indices must be strictly increasing"));
    }
    Observation o;
    const std::string& xs = cells[static_cast<std::size_t>(col_x)];
    const std::string& ys = cells[static_cast<std::size_t>(col_y)];
    if (xs != opt.missing_token) {
      double x = 0.0;
      if (!parse_double(xs, x) || !std::isfinite(x)) {
        throw InputError(data_error(source, line_no, "malformed direction '" + xs + "'"));
      }
      o.x = opt.degrees ? Angle::from_degrees(x) : Angle(x);
    }
    if (ys != opt.missing_token) {
      double y = 0.0;
      if (!parse_double(ys, y) || !std::isfinite(y)) {
        throw InputError(data_error(source, line_no, "malformed linear value '" + ys + "'"));
      }
      if (opt.log_linear) {
        if (!(y > 0.0)) throw InputError(data_error(source, line_no, "log transform needs a positive linear value"));
        y = std::log(y);
      }
      o.y = y;
    }
    d.time.push_back(t);
    d.obs.push_back(o);
  }
  if (!have_header) throw InputError(source + ": missing header row");
  if (d.obs.empty()) throw InputError(source + ": no data rows");
  return d;
}

Dataset parse_dataset(const std::filesystem::path& path, const DatasetOptions& opt) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file " + path.string());
  return read_dataset(in, opt, path.string());
}

void write_dataset(std::ostream& os, const Dataset& data, const std::string& manifest) {
  os << "# manifest=" << manifest << '\n';
  os << "t,x,y\n";
  for (std::size_t i = 0; i < data.obs.size(); ++i) {
    write_number(os, data.time[i]);
    os << ',';
    if (data.obs[i].x) {
      write_number(os, data.obs[i].x->value());
    } else {
      os << "NA";
    }
    os << ',';
    if (data.obs[i].y) {
      write_number(os, *data.obs[i].y);
    } else {
      os << "NA";
    }
    os << '\n';
  }
}

void write_states(std::ostream& os, std::span<const int> labels, const std::string& manifest) {
  os << "# manifest=" << manifest << '\n';
  os << "t,state\n";
  for (std::size_t t = 0; t < labels.size(); ++t) os << t << ',' << labels[t] + 1 << '\n';
}

void write_draws_csv(std::ostream& os, const ChainOutput& out, const std::string& manifest) {
  os << "# manifest=" << manifest << '\n';
  os << "iteration,log_posterior";
  for (int k = 1; k <= out.K; ++k) {
    for (const auto name : RegimeParams::kNames) os << ',' << name << '[' << k << ']';
  }
  os << '\n';
  for (const auto& d : out.draws) {
    os << d.iteration << ',';
    write_number(os, d.log_posterior);
    for (const auto& p : d.params) {
      for (double v : p.as_array()) {
        os << ',';
        write_number(os, v);
      }
    }
    os << '\n';
  }
}

DrawTable read_draws_csv(std::istream& is) {
  DrawTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv(line);
    if (!have_header) {
      have_header = true;
      table.names = cells;
      table.columns.assign(cells.size(), {});
      continue;
    }
    if (cells.size() != table.names.size()) {
      throw InputError("draws file line " + std::to_string(line_no) + ": wrong number of fields");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      if (!parse_double(cells[c], v)) throw InputError("draws file line " + std::to_string(line_no) + ": bad number");
      table.columns[c].push_back(v);
    }
  }
  if (!have_header) throw InputError("draws file has no header");
  return table;
}

const std::vector<std::string>& ConfigFile::known_keys() {
  static const std::vector<std::string> keys = {
      "iterations", "burnin",     "thin",        "seed",          "adapt_window", "target_accept", "K",
      "variant",    "exact_radius", "chains",    "mu_mean",       "mu_var",       "gamma_mean",    "gamma_var",
      "rho_mean",   "rho_var",    "ig_shape",    "ig_rate",       "beta",         "k_min",         "k_max",
      "degrees",    "log_linear", "missing_token", "scheme",      "T",            "replicates",    "missing_fraction",
      "mc_draws",   "variants",   "workers"};
  return keys;
}

ConfigFile ConfigFile::parse(std::istream& is, const std::string& source) {
  ConfigFile cfg;
  std::string line;
  std::size_t line_no = 0;
  const auto& keys = known_keys();
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (cfg.values_.count(key)) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in, path.string());
}

void ConfigFile::set(const std::string& key, const std::string& value) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("unknown key '" + key + "'");
  values_[key] = value;
}

std::string ConfigFile::text(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ConfigFile::number(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  double v = 0.0;
  if (!parse_double(it->second, v)) throw ConfigError("config key '" + key + "': expected a number");
  return v;
}

long long ConfigFile::integer(const std::string& key, long long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  long long v = 0;
  const auto& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "': expected an integer");
  }
  return v;
}

bool ConfigFile::flag(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string v = lower(it->second);
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false");
}

ChainConfig chain_config_from(const ConfigFile& cfg) {
  ChainConfig c;
  const auto positive = [&](const char* key, long long fallback) {
    const long long v = cfg.integer(key, fallback);
    if (v <= 0) throw ConfigError(std::string("config key '") + key + "' must be positive");
    return static_cast<std::size_t>(v);
  };
  c.iterations = positive("iterations", static_cast<long long>(c.iterations));
  const long long burnin = cfg.integer("burnin", static_cast<long long>(c.burnin));
  if (burnin < 0) throw ConfigError("config key 'burnin' must be non-negative");
  c.burnin = static_cast<std::size_t>(burnin);
  c.thin = positive("thin", static_cast<long long>(c.thin));
  c.seed = static_cast<std::uint64_t>(cfg.integer("seed", static_cast<long long>(c.seed)));
  c.adapt_window = positive("adapt_window", static_cast<long long>(c.adapt_window));
  c.target_accept = cfg.number("target_accept", c.target_accept);
  c.K = static_cast<int>(positive("K", c.K));
  try {
    c.variant = parse_variant(cfg.text("variant", std::string(to_string(c.variant))));
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  c.exact_radius = cfg.flag("exact_radius", c.exact_radius);
  try {
    c.validate();
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

Priors priors_from(const ConfigFile& cfg) {
  Priors p;
  p.mu_mean = cfg.number("mu_mean", p.mu_mean);
  p.mu_var = cfg.number("mu_var", p.mu_var);
  p.gamma_mean = cfg.number("gamma_mean", p.gamma_mean);
  p.gamma_var = cfg.number("gamma_var", p.gamma_var);
  p.rho_mean = cfg.number("rho_mean", p.rho_mean);
  p.rho_var = cfg.number("rho_var", p.rho_var);
  p.ig_shape = cfg.number("ig_shape", p.ig_shape);
  p.ig_rate = cfg.number("ig_rate", p.ig_rate);
  p.beta = cfg.number("beta", p.beta);
  try {
    p.validate();
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  return p;
}

void RunManifest::write(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["seed"] = seed;
  j["version"] = version;
  j["inputs"] = inputs;
  j["input_checksum"] = input_checksum;
  j["wall_seconds"] = wall_seconds;
  j["config"] = config;
  j["outputs"] = outputs;
  std::ofstream out(path);
  if (!out) throw InputError("cannot write manifest " + path.string());
  out << j.dump(2) << '\n';
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

void write_parameter_summary(std::ostream& os, const ChainOutput& out) {
  if (out.draws.empty()) throw InputError("parameter summary: no draws");
  const int K = out.K;
  os << "Posterior medians and 95% credible intervals (" << to_string(out.variant) << ", K=" << K
     << ", draws=" << out.draws.size() << ")\n";
  os << std::left << std::setw(12) << "";
  for (int k = 1; k <= K; ++k) os << std::setw(18) << ("k=" + std::to_string(k));
  os << '\n';
  for (std::size_t i = 0; i < RegimeParams::kSize; ++i) {
    const bool fixed_cldpn = out.variant == Variant::CLDPN && (i == 2 || i == 3);
    const bool fixed_ind = out.variant == Variant::IndCLGPN && (i == 5 || i == 6);
    std::ostringstream est, ci;
    for (int k = 0; k < K; ++k) {
      if (fixed_cldpn || fixed_ind) {
        est << std::setw(18) << ".";
        ci << std::setw(18) << "(. .)";
        continue;
      }
      std::vector<double> v;
      v.reserve(out.draws.size());
      for (const auto& d : out.draws) v.push_back(d.params[static_cast<std::size_t>(k)].as_array()[i]);
      est << std::setw(18) << fixed(quantile(v, 0.5));
      ci << std::setw(18) << ("(" + fixed(quantile(v, 0.025)) + " " + fixed(quantile(v, 0.975)) + ")");
    }
    os << std::setw(12) << RegimeParams::kNames[i] << est.str() << '\n';
    os << std::setw(12) << "  CI" << ci.str() << '\n';
  }
}

void write_transition_summary(std::ostream& os, const ChainOutput& out, HyperBeta hb, Rng& rng) {
  if (out.draws.empty()) throw InputError("transition summary: no draws");
  const int K = out.K;
  std::vector<std::vector<double>> entries(static_cast<std::size_t>(K * K));
  for (const auto& d : out.draws) {
    const auto est = recover_transition(d.states, K, hb, rng);
    for (int k = 0; k < K; ++k) {
      for (int h = 0; h < K; ++h) entries[static_cast<std::size_t>(k * K + h)].push_back(est.pi(k, h));
    }
  }
  os << "Transition matrix: posterior medians and 95% credible intervals\n";
  os << std::left << std::setw(8) << "from\\to";
  for (int h = 1; h <= K; ++h) os << std::setw(18) << h;
  os << '\n';
  for (int k = 0; k < K; ++k) {
    std::ostringstream est, ci;
    for (int h = 0; h < K; ++h) {
      const auto& v = entries[static_cast<std::size_t>(k * K + h)];
      est << std::setw(18) << fixed(quantile(v, 0.5));
      ci << std::setw(18) << ("(" + fixed(quantile(v, 0.025)) + " " + fixed(quantile(v, 0.975)) + ")");
    }
    os << std::setw(8) << (k + 1) << est.str() << '\n';
    os << std::setw(8) << "  CI" << ci.str() << '\n';
  }
}

void write_regime_summaries(std::ostream& os, const std::vector<RegimeSummary>& summaries, std::size_t T) {
  os << "Regime summaries\n";
  os << std::left << std::setw(14) << "";
  for (std::size_t k = 1; k <= summaries.size(); ++k) os << std::setw(12) << ("k=" + std::to_string(k));
  os << '\n';
  const auto row = [&](const char* name, auto get) {
    os << std::setw(14) << name;
    for (const auto& s : summaries) os << std::setw(12) << get(s);
    os << '\n';
  };
  row("lin_mean", [](const RegimeSummary& s) { return fixed(s.lin_mean, 3); });
  row("lin_var", [](const RegimeSummary& s) { return fixed(s.lin_var, 3); });
  row("circ_mean", [](const RegimeSummary& s) { return fixed(s.circ_mean.value(), 3); });
  row("concentration", [](const RegimeSummary& s) { return fixed(s.concentration, 3); });
  row("n", [](const RegimeSummary& s) { return std::to_string(s.n); });
  row("cl_corr_sq", [](const RegimeSummary& s) { return s.cl_corr_sq ? fixed(*s.cl_corr_sq, 3) : std::string("NA"); });
  row("F", [](const RegimeSummary& s) { return s.f_stat ? fixed(*s.f_stat, 3) : std::string("NA"); });
  if (T > 3) os << "95% percentile of F(2, " << T - 3 << ") = " << fixed(f_critical_95(T), 3) << '\n';
}

void write_criteria_table(std::ostream& os, const std::vector<CriteriaRow>& rows) {
  os << std::left << std::setw(4) << "K" << std::setw(8) << "params" << std::setw(16) << "AIC" << std::setw(16) << "BIC"
     << std::setw(16) << "ICL" << '\n';
  int best_aic = 0, best_bic = 0, best_icl = 0;
  double a = INFINITY, b = INFINITY, c = INFINITY;
  for (const auto& r : rows) {
    os << std::setw(4) << r.K << std::setw(8) << r.report.param_count << std::setw(16) << fixed(r.report.aic, 3)
       << std::setw(16) << fixed(r.report.bic, 3) << std::setw(16) << fixed(r.report.icl, 3) << '\n';
    if (r.report.aic < a) a = r.report.aic, best_aic = r.K;
    if (r.report.bic < b) b = r.report.bic, best_bic = r.K;
    if (r.report.icl < c) c = r.report.icl, best_icl = r.K;
  }
  os << "selected K: AIC=" << best_aic << " BIC=" << best_bic << " ICL=" << best_icl << '\n';
}

void write_scores(std::ostream& os, const ScoreReport& s) {
  os << "crps_circular=" << fixed(s.crps_circular, 4) << " (" << s.circular_points << " points)\n";
  os << "ape=" << fixed(s.ape, 4) << '\n';
  os << "crps_linear=" << fixed(s.crps_linear, 4) << " (" << s.linear_points << " points)\n";
  os << "mse=" << fixed(s.mse, 4) << '\n';
}

}  // namespace clgpn
