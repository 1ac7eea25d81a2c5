#include "cli_lib.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "icw/acceptance.hpp"
#include "icw/errors.hpp"
#include "icw/exact_dist.hpp"
#include "icw/landau.hpp"
#include "icw/model.hpp"
#include "icw/quadrature.hpp"
#include "icw/sampler.hpp"
#include "icw/stein.hpp"

namespace icw::cli {

using nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

namespace {

std::string cell_to_csv(const Table::Cell& cell) {
  if (std::holds_alternative<std::int64_t>(cell))
    return std::to_string(std::get<std::int64_t>(cell));
  if (std::holds_alternative<double>(cell))
    return format_double(std::get<double>(cell));
  return std::get<std::string>(cell);
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ordered_json cell_to_json(const Table::Cell& cell) {
  if (std::holds_alternative<std::int64_t>(cell))
    return std::get<std::int64_t>(cell);
  if (std::holds_alternative<double>(cell)) {
    const double v = std::get<double>(cell);
    if (std::isnan(v)) return nullptr;
    return v;
  }
  return std::get<std::string>(cell);
}

}  // namespace

void write_csv(std::ostream& out, const Table& table, const Provenance& prov) {
  out << "# icw " << prov.subcommand << " config_hash=" << hash_hex(prov.config_hash)
      << " seed=" << prov.seed;
  for (const auto& note : prov.notes) out << " " << note;
  out << "\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    out << table.columns[c] << (c + 1 < table.columns.size() ? "," : "");
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out << cell_to_csv(row[c]) << (c + 1 < row.size() ? "," : "");
    out << "\n";
  }
}

void write_json(std::ostream& out, const Table& table, const Provenance& prov) {
  ordered_json doc;
  doc["provenance"] = {{"subcommand", prov.subcommand},
                       {"config_hash", hash_hex(prov.config_hash)},
                       {"seed", prov.seed},
                       {"notes", prov.notes}};
  doc["columns"] = table.columns;
  auto rows = ordered_json::array();
  for (const auto& row : table.rows) {
    auto jrow = ordered_json::array();
    for (const auto& cell : row) jrow.push_back(cell_to_json(cell));
    rows.push_back(std::move(jrow));
  }
  doc["rows"] = std::move(rows);
  out << doc.dump(2) << "\n";
}

namespace {

WeightSequence weights_from_json(const ordered_json& spec) {
  if (spec.is_array()) {
    std::vector<double> values;
    for (std::size_t i = 0; i < spec.size(); ++i) {
      if (!spec[i].is_number())
        fail(ErrorKind::validation,
             "weights[" + std::to_string(i) + "] is not a number: " + spec[i].dump());
      values.push_back(spec[i].get<double>());
    }
    return WeightSequence::from_values(std::move(values));
  }
  if (spec.is_object()) {
    for (const auto& [key, value] : spec.items()) {
      if (key != "base" && key != "replicate")
        fail(ErrorKind::validation, "unknown key in weight spec: \"" + key + "\"");
    }
    if (!spec.contains("base") || !spec["base"].is_array())
      fail(ErrorKind::validation, "weight spec object needs a \"base\" array");
    if (!spec.contains("replicate") || !spec["replicate"].is_number_unsigned())
      fail(ErrorKind::validation,
           "weight spec object needs a non-negative integer \"replicate\"");
    return weights_from_json(spec["base"]).replicate(spec["replicate"].get<std::size_t>());
  }
  fail(ErrorKind::validation,
       "weight spec must be a JSON array or {base, replicate} object");
}

}  // namespace

WeightSequence parse_weights(const std::string& spec) {
  std::string text = spec;
  const auto first = spec.find_first_not_of(" \t");
  const bool inline_json =
      first != std::string::npos && (spec[first] == '[' || spec[first] == '{');
  if (!inline_json) {
    std::ifstream in(spec);
    if (!in) fail(ErrorKind::validation, "cannot open weights file: " + spec);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    text = buffer.str();
  }
  ordered_json parsed;
  try {
    parsed = ordered_json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorKind::validation, std::string("weights JSON parse error: ") + e.what());
  }
  return weights_from_json(parsed);
}

namespace {

constexpr std::uint64_t kDefaultSeed = 0;

// ---------------------------------------------------------------------------
// option resolution: CLI flags win, then the --config file, then defaults
// ---------------------------------------------------------------------------

struct ConfigFile {
  ordered_json data;  // null when absent

  static ConfigFile load(const std::string& path,
                         const std::vector<std::string>& allowed_keys) {
    ConfigFile cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) fail(ErrorKind::validation, "cannot open config file: " + path);
    try {
      cfg.data = ordered_json::parse(in);
    } catch (const std::exception& e) {
      fail(ErrorKind::validation, std::string("config JSON parse error: ") + e.what());
    }
    if (!cfg.data.is_object())
      fail(ErrorKind::validation, "config file must hold a JSON object");
    for (const auto& [key, value] : cfg.data.items()) {
      if (std::find(allowed_keys.begin(), allowed_keys.end(), key) ==
          allowed_keys.end())
        fail(ErrorKind::validation, "unknown config key: \"" + key + "\"");
    }
    return cfg;
  }

  template <class T>
  void fill(const CLI::App* sub, const std::string& flag, const std::string& key,
            T& value) const {
    if (data.is_null() || sub->count(flag) > 0 || !data.contains(key)) return;
    try {
      value = data.at(key).get<T>();
    } catch (const std::exception& e) {
      fail(ErrorKind::validation,
           "config key \"" + key + "\" has the wrong type: " + e.what());
    }
  }

  // weights may be an inline JSON value instead of a string
  void fill_weights(const CLI::App* sub, std::string& value) const {
    if (data.is_null() || sub->count("--weights") > 0 || !data.contains("weights"))
      return;
    const auto& w = data.at("weights");
    value = w.is_string() ? w.get<std::string>() : w.dump();
  }
};

struct OutputOptions {
  std::string out_path;
  std::string format;  // "csv" or "json"
  bool dry_run = false;
  std::string config_path;
};

// --h is a model flag, so help lives on --help alone
CLI::App* make_sub(CLI::App& app, const std::string& name, const std::string& desc) {
  auto* sub = app.add_subcommand(name, desc);
  sub->set_help_flag("--help", "Print help");
  return sub;
}

void attach_common(CLI::App* sub, OutputOptions& out, const std::string& fmt_default) {
  out.format = fmt_default;
  sub->add_option("--out", out.out_path, "Output file (stdout when omitted)");
  sub->add_option("--format", out.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}));
  sub->add_flag("--dry-run", out.dry_run, "Validate the configuration and exit");
  sub->add_option("--config", out.config_path, "JSON config file (strict keys)");
}

struct Emit {
  std::ostream& fallback;
  const OutputOptions& opts;

  void operator()(const Table& table, const Provenance& prov) const {
    std::ofstream file;
    std::ostream* sink = &fallback;
    if (!opts.out_path.empty()) {
      file.open(opts.out_path);
      if (!file) fail(ErrorKind::validation, "cannot open output file: " + opts.out_path);
      sink = &file;
    }
    if (opts.format == "json")
      write_json(*sink, table, prov);
    else
      write_csv(*sink, table, prov);
  }
};

ordered_json weights_json_echo(const std::string& spec) {
  const auto first = spec.find_first_not_of(" \t");
  if (first != std::string::npos && (spec[first] == '[' || spec[first] == '{'))
    return ordered_json::parse(spec);
  return spec;
}

// dry-run output: the fully resolved configuration
void emit_resolved(std::ostream& out, const std::string& sub, const ordered_json& resolved) {
  ordered_json doc;
  doc["subcommand"] = sub;
  doc["resolved"] = resolved;
  doc["valid"] = true;
  out << doc.dump(2) << "\n";
}

WeightSequence resolve_weights(const std::string& spec, std::size_t n_target) {
  auto ws = parse_weights(spec);
  if (n_target == 0) return ws;
  if (n_target % ws.size() != 0)
    fail(ErrorKind::validation,
         "--n " + std::to_string(n_target) + " is not a multiple of the base size " +
             std::to_string(ws.size()));
  return ws.replicate(n_target / ws.size());
}

double observable_or_nan(const Observables& obs, double Observables::*field,
                         bool valid) {
  return valid ? obs.*field : std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// fixed-point
// ---------------------------------------------------------------------------

struct FixedPointOpts {
  std::string weights;
  double beta = 0.0, h = 0.0;
  std::size_t n = 0;
  std::string scan_grid;  // "b0:b1:cnt,h0:h1:cnt"
  OutputOptions out;
};

void append_observable_row(Table& table, const WeightLaw& law, double beta, double h,
                           std::size_t n) {
  const ModelParams p(beta, h);
  const bool in_regime = in_uniqueness_regime(law, p);
  Observables obs{};
  bool computed = false;
  if (in_regime) {
    obs = compute_observables(law, p, n);
    computed = true;
  }
  const auto value = [&](double Observables::*field) {
    return Table::Cell{observable_or_nan(obs, field, computed)};
  };
  table.rows.push_back({Table::Cell{beta}, Table::Cell{h},
                        Table::Cell{static_cast<std::int64_t>(n)},
                        Table::Cell{critical_beta(law)},
                        Table::Cell{static_cast<std::int64_t>(in_regime ? 1 : 0)},
                        value(&Observables::x_star), value(&Observables::magnetization),
                        value(&Observables::weighted_magnetization),
                        value(&Observables::susceptibility),
                        value(&Observables::weighted_susceptibility),
                        value(&Observables::sigma_sq), value(&Observables::cross_coef),
                        value(&Observables::lambda)});
}

struct GridSpec {
  double lo, hi;
  std::size_t count;
};

GridSpec parse_axis(const std::string& text) {
  GridSpec g{};
  char colon1 = 0, colon2 = 0;
  std::istringstream in(text);
  if (!(in >> g.lo >> colon1 >> g.hi >> colon2 >> g.count) || colon1 != ':' ||
      colon2 != ':' || g.count < 1)
    fail(ErrorKind::validation, "bad grid axis \"" + text + "\", expected lo:hi:count");
  return g;
}

void run_fixed_point(const FixedPointOpts& opts, std::ostream& fallback) {
  const auto ws = resolve_weights(opts.weights, opts.n);
  const auto law = ws.empirical_law();

  Table table;
  table.columns = {"beta",  "h",      "n",
                   "beta_c", "in_regime", "x_star",
                   "magnetization", "weighted_magnetization", "susceptibility",
                   "weighted_susceptibility", "sigma_sq", "cross_coef",
                   "lambda"};
  if (opts.scan_grid.empty()) {
    const ModelParams p(opts.beta, opts.h);
    if (!in_uniqueness_regime(law, p))
      fail(ErrorKind::regime,
           "(beta, h) outside the uniqueness regime; beta_c = " +
               std::to_string(critical_beta(law)));
    append_observable_row(table, law, opts.beta, opts.h, ws.size());
  } else {
    const auto comma = opts.scan_grid.find(',');
    if (comma == std::string::npos)
      fail(ErrorKind::validation, "scan grid needs two axes: beta_axis,h_axis");
    const auto beta_axis = parse_axis(opts.scan_grid.substr(0, comma));
    const auto h_axis = parse_axis(opts.scan_grid.substr(comma + 1));
    for (std::size_t i = 0; i < beta_axis.count; ++i) {
      const double beta =
          beta_axis.count == 1
              ? beta_axis.lo
              : beta_axis.lo + (beta_axis.hi - beta_axis.lo) * i / (beta_axis.count - 1);
      for (std::size_t j = 0; j < h_axis.count; ++j) {
        const double h =
            h_axis.count == 1
                ? h_axis.lo
                : h_axis.lo + (h_axis.hi - h_axis.lo) * j / (h_axis.count - 1);
        append_observable_row(table, law, beta, h, ws.size());
      }
    }
  }

  ordered_json resolved = {{"weights", weights_json_echo(opts.weights)},
                           {"beta", opts.beta},
                           {"h", opts.h},
                           {"n", ws.size()},
                           {"scan_grid", opts.scan_grid}};
  Provenance prov{"fixed-point", fnv1a64("fixed-point" + resolved.dump()), "none", {}};
  Emit{fallback, opts.out}(table, prov);
}

// ---------------------------------------------------------------------------
// exact-dist
// ---------------------------------------------------------------------------

struct ExactDistOpts {
  std::string weights;
  double beta = 0.0, h = 0.0;
  std::size_t n = 0;
  std::string method = "auto";  // auto | transfer | enumerate
  OutputOptions out;
};

JointDistribution joint_by_method(const WeightSequence& ws, const ModelParams& p,
                                  const std::string& method) {
  if (method == "transfer") return dp_joint(ws, p);
  if (method == "enumerate") return enumerate_joint(ws, p);
  if (ws.integer_scale().has_value()) return dp_joint(ws, p);
  return enumerate_joint(ws, p);
}

void run_exact_dist(const ExactDistOpts& opts, std::ostream& fallback) {
  const auto ws = resolve_weights(opts.weights, opts.n);
  const ModelParams p(opts.beta, opts.h);
  const auto jd = joint_by_method(ws, p, opts.method);

  Table table;
  table.columns = {"S", "T", "mass"};
  for (const auto& atom : jd.atoms)
    table.rows.push_back({Table::Cell{atom.s}, Table::Cell{atom.t},
                          Table::Cell{std::exp(atom.log_mass)}});

  ordered_json resolved = {{"weights", weights_json_echo(opts.weights)},
                           {"beta", opts.beta},
                           {"h", opts.h},
                           {"n", ws.size()},
                           {"method", opts.method}};
  Provenance prov{"exact-dist", fnv1a64("exact-dist" + resolved.dump()), "none", {}};
  if (!in_uniqueness_regime(ws.empirical_law(), p))
    prov.notes.push_back("outside_uniqueness_regime=1");
  Emit{fallback, opts.out}(table, prov);
}

// ---------------------------------------------------------------------------
// dk-scan
// ---------------------------------------------------------------------------

struct DkScanOpts {
  std::string weights;
  double beta = 0.0, h = 0.0;
  std::vector<std::size_t> n_list;
  OutputOptions out;
};

void run_dk_scan(const DkScanOpts& opts, std::ostream& fallback) {
  if (opts.n_list.empty()) fail(ErrorKind::validation, "--n list is empty");
  const auto base = parse_weights(opts.weights);
  const ModelParams p(opts.beta, opts.h);
  if (!in_uniqueness_regime(base.empirical_law(), p))
    fail(ErrorKind::regime,
         "rate scan requires the uniqueness regime; beta_c = " +
             std::to_string(critical_beta(base.empirical_law())));

  std::vector<std::future<double>> jobs;
  for (std::size_t n : opts.n_list)
    jobs.push_back(std::async(std::launch::async, [&, n] {
      const auto ws = resolve_weights(opts.weights, n);
      const auto obs = compute_observables(ws, p);
      return standardize(joint_by_method(ws, p, "auto"), obs).spin.d_k;
    }));

  Table table;
  table.columns = {"n", "d_K", "sqrt_n_dK"};
  for (std::size_t i = 0; i < opts.n_list.size(); ++i) {
    const double dk = jobs[i].get();
    const double n = static_cast<double>(opts.n_list[i]);
    table.rows.push_back({Table::Cell{static_cast<std::int64_t>(opts.n_list[i])},
                          Table::Cell{dk}, Table::Cell{std::sqrt(n) * dk}});
  }

  ordered_json resolved = {{"weights", weights_json_echo(opts.weights)},
                           {"beta", opts.beta},
                           {"h", opts.h},
                           {"n", opts.n_list}};
  Provenance prov{"dk-scan", fnv1a64("dk-scan" + resolved.dump()), "none", {}};
  Emit{fallback, opts.out}(table, prov);
}

// ---------------------------------------------------------------------------
// mgf
// ---------------------------------------------------------------------------

struct MgfOpts {
  std::string weights;
  double beta = 0.0, h = 0.0;
  std::size_t n = 0;
  std::vector<double> s_list = {-0.5, -0.1, 0.1, 0.5};
  OutputOptions out;
};

void run_mgf(const MgfOpts& opts, std::ostream& fallback) {
  const auto ws = resolve_weights(opts.weights, opts.n);
  const ModelParams p(opts.beta, opts.h);
  if (!in_uniqueness_regime(ws.empirical_law(), p))
    fail(ErrorKind::regime,
         "cumulant generating functions require the uniqueness regime; beta_c = " +
             std::to_string(critical_beta(ws.empirical_law())));

  Table table;
  table.columns = {"s", "c_n", "c_n_dd0"};
  for (double s : opts.s_list) {
    const auto res = cgf(ws, p, s);
    table.rows.push_back({Table::Cell{s}, Table::Cell{res.value},
                          Table::Cell{res.second_derivative_at_zero}});
  }

  ordered_json resolved = {{"weights", weights_json_echo(opts.weights)},
                           {"beta", opts.beta},
                           {"h", opts.h},
                           {"n", ws.size()},
                           {"s", opts.s_list}};
  Provenance prov{"mgf", fnv1a64("mgf" + resolved.dump()), "none", {}};
  Emit{fallback, opts.out}(table, prov);
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

struct SampleOpts {
  std::string weights;
  double beta = 0.0, h = 0.0;
  std::size_t n = 0;
  std::size_t count = 1000;
  std::uint64_t seed = kDefaultSeed;
  std::string method = "auxiliary-field";  // or glauber-chain
  std::string emit = "st";                 // or spins
  OutputOptions out;
};

void run_sample(const SampleOpts& opts, std::ostream& fallback) {
  const auto ws = resolve_weights(opts.weights, opts.n);
  const ModelParams p(opts.beta, opts.h);
  const std::size_t n = ws.size();

  std::vector<Configuration> configs;
  if (opts.method == "auxiliary-field") {
    configs = sample_exact(ws, p, opts.count, opts.seed).configurations;
  } else {
    // stationary start from one exact draw, burn-in 10n, thin n
    auto start = sample_exact(ws, p, 1, opts.seed).configurations.front();
    GlauberChain chain(ws, p, std::move(start), opts.seed ^ 0x517cc1b727220a95ull);
    for (std::size_t i = 0; i < 10 * n; ++i) chain.step();
    configs.reserve(opts.count);
    for (std::size_t c = 0; c < opts.count; ++c) {
      for (std::size_t i = 0; i < n; ++i) chain.step();
      configs.push_back(chain.configuration());
    }
  }

  Table table;
  if (opts.emit == "st") {
    table.columns = {"index", "S", "T"};
    for (std::size_t c = 0; c < configs.size(); ++c)
      table.rows.push_back({Table::Cell{static_cast<std::int64_t>(c)},
                            Table::Cell{spin_sum(configs[c])},
                            Table::Cell{weighted_spin_sum(ws, configs[c])}});
  } else {
    table.columns = {"index", "spins"};
    for (std::size_t c = 0; c < configs.size(); ++c) {
      std::string spins(n, '+');
      for (std::size_t i = 0; i < n; ++i)
        if (configs[c][i] < 0) spins[i] = '-';
      table.rows.push_back(
          {Table::Cell{static_cast<std::int64_t>(c)}, Table::Cell{spins}});
    }
  }

  ordered_json resolved = {{"weights", weights_json_echo(opts.weights)},
                           {"beta", opts.beta},
                           {"h", opts.h},
                           {"n", n},
                           {"count", opts.count},
                           {"seed", opts.seed},
                           {"method", opts.method},
                           {"emit", opts.emit}};
  Provenance prov{"sample", fnv1a64("sample" + resolved.dump()),
                  std::to_string(opts.seed), {}};
  Emit{fallback, opts.out}(table, prov);
}

// ---------------------------------------------------------------------------
// stein-terms
// ---------------------------------------------------------------------------

struct SteinTermsOpts {
  std::string weights;
  double beta = 0.0, h = 0.0;
  std::size_t n = 0;
  std::string source = "exact";  // exact | sample
  std::size_t count = 20000;
  std::uint64_t seed = kDefaultSeed;
  OutputOptions out;
};

struct TermAccumulator {
  long double sum = 0.0L, sum_sq = 0.0L;
  void add(double v, double weight) {
    sum += weight * std::fabs(v);
    sum_sq += weight * v * v;
  }
};

void run_stein_terms(const SteinTermsOpts& opts, std::ostream& fallback) {
  const auto ws = resolve_weights(opts.weights, opts.n);
  const ModelParams p(opts.beta, opts.h);
  const std::size_t n = ws.size();
  const double nd = static_cast<double>(n);
  if (!in_uniqueness_regime(ws.empirical_law(), p))
    fail(ErrorKind::regime,
         "Stein terms require the uniqueness regime; beta_c = " +
             std::to_string(critical_beta(ws.empirical_law())));
  const auto obs = compute_observables(ws, p);

  Provenance prov{"stein-terms", 0, "none", {}};

  std::vector<double> spin_means;
  bool means_exact = true;
  SampleBatch batch;
  if (opts.source == "sample") {
    batch = sample_exact(ws, p, opts.count, opts.seed);
    prov.seed = std::to_string(opts.seed);
  }
  try {
    spin_means = spin_expectations(ws, p);
  } catch (const Error&) {
    if (opts.source != "sample") throw;
    means_exact = false;
    spin_means.assign(n, 0.0);
    for (const auto& cfg : batch.configurations)
      for (std::size_t i = 0; i < n; ++i) spin_means[i] += cfg[i];
    for (auto& m : spin_means) m /= static_cast<double>(batch.configurations.size());
  }
  prov.notes.push_back(means_exact ? "spin_means=exact" : "spin_means=monte-carlo");

  // E|X~| and E[X~^2] for the expectation-form bounds
  double e_abs_xt = 0.0, e_xt_sq = 0.0;
  std::optional<JointDistribution> jd;
  if (opts.source == "exact") {
    jd = joint_by_method(ws, p, "auto");
    const auto law = jd->weighted_marginal();
    for (std::size_t i = 0; i < law.values.size(); ++i) {
      const double xt = (law.values[i] - nd * obs.weighted_magnetization) /
                        (std::sqrt(nd) * std::sqrt(obs.weighted_susceptibility));
      e_abs_xt += law.mass[i] * std::fabs(xt);
      e_xt_sq += law.mass[i] * xt * xt;
    }
  } else {
    for (const auto& cfg : batch.configurations) {
      const double xt =
          std::sqrt(nd) *
          (weighted_spin_sum(ws, cfg) / nd - obs.weighted_magnetization) /
          std::sqrt(obs.weighted_susceptibility);
      e_abs_xt += std::fabs(xt);
      e_xt_sq += xt * xt;
    }
    e_abs_xt /= static_cast<double>(batch.configurations.size());
    e_xt_sq /= static_cast<double>(batch.configurations.size());
  }

  // accumulate E|R| per term
  constexpr std::size_t kTerms = 16;
  const char* term_names[kTerms] = {"R1",  "R2",  "R1~", "R2~", "R3",  "R3-",
                                    "R3^", "R3v", "R4",  "R4-", "R4^", "R4v",
                                    "R5",  "R5-", "R5^", "R5v"};
  TermAccumulator acc[kTerms];
  std::size_t samples = 0;
  const auto accumulate = [&](const Configuration& cfg, double weight) {
    const auto d = decomposition_terms(ws, p, obs, spin_means, cfg);
    const double values[kTerms] = {d.r1,     d.r2,     d.r1_tilde, d.r2_tilde,
                                   d.r3,     d.r3_bar, d.r3_hat,   d.r3_check,
                                   d.r4,     d.r4_bar, d.r4_hat,   d.r4_check,
                                   d.r5,     d.r5_bar, d.r5_hat,   d.r5_check};
    for (std::size_t t = 0; t < kTerms; ++t) acc[t].add(values[t], weight);
  };

  SteinBoundTerms bounds{};
  if (opts.source == "exact") {
    if (n > 14)
      fail(ErrorKind::size, "exact source enumerates all configurations; n <= 14");
    // enumeration weights, max-subtracted
    double hi = -1e308;
    Configuration cfg(n);
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
      for (std::size_t i = 0; i < n; ++i) cfg[i] = (mask >> i) & 1 ? 1 : -1;
      hi = std::max(hi, log_gibbs_weight(ws, p, spin_sum(cfg),
                                         weighted_spin_sum(ws, cfg)));
    }
    long double z = 0.0L;
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
      for (std::size_t i = 0; i < n; ++i) cfg[i] = (mask >> i) & 1 ? 1 : -1;
      const double u = std::exp(
          log_gibbs_weight(ws, p, spin_sum(cfg), weighted_spin_sum(ws, cfg)) - hi);
      z += u;
      accumulate(cfg, u);
    }
    for (auto& a : acc) {
      a.sum /= z;
      a.sum_sq /= z;
    }
    samples = 1ull << n;
    bounds = bound_terms_exact(ws, p, obs);
  } else {
    for (const auto& cfg : batch.configurations) accumulate(cfg, 1.0);
    samples = batch.configurations.size();
    for (auto& a : acc) {
      a.sum /= static_cast<long double>(samples);
      a.sum_sq /= static_cast<long double>(samples);
    }
    bounds = bound_terms_sampled(ws, p, obs, batch);
  }

  // Expectation-form bounds per term; the R5 family has none
  const double m1 = ws.moment(1), m2 = ws.moment(2), m3 = ws.moment(3);
  const double chi = obs.susceptibility, chit = obs.weighted_susceptibility;
  const double c_s2 = obs.cross_coef * obs.sigma_sq;
  const double sqrt_n = std::sqrt(nd);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double r3_bound =
      p.beta * std::sqrt(chit) / chi * e_abs_xt / sqrt_n + p.beta / chi * (m2 / m1) / nd;
  const double r3h_bound =
      p.beta * c_s2 / std::sqrt(chi) * (m2 / m1) * e_abs_xt / sqrt_n +
      p.beta * c_s2 / std::sqrt(chi * chit) * (m3 / m1) / nd;
  const double term_bounds[kTerms] = {
      p.beta / std::sqrt(chi) * (m2 / m1) / sqrt_n,
      chit / std::sqrt(chi) * (p.beta / m1) * (p.beta / m1) * m2 * e_xt_sq / sqrt_n,
      p.beta / std::sqrt(chit) * (m3 / m1) / sqrt_n,
      2.0 * std::sqrt(chit) * (p.beta / m1) * (p.beta / m1) * m3 * e_xt_sq / sqrt_n,
      r3_bound, r3_bound, r3h_bound, r3h_bound,
      r3_bound, r3_bound, r3h_bound, r3h_bound,
      nan, nan, nan, nan};

  Table table;
  table.columns = {"term", "mean_abs", "bound", "majorized", "n",
                   "beta", "h",        "source", "stderr"};
  const auto made_row = [&](const std::string& term, double mean_abs, double bound,
                            const std::string& majorized, double se) {
    table.rows.push_back({Table::Cell{term}, Table::Cell{mean_abs},
                          Table::Cell{bound}, Table::Cell{majorized},
                          Table::Cell{static_cast<std::int64_t>(n)},
                          Table::Cell{p.beta}, Table::Cell{p.h},
                          Table::Cell{opts.source}, Table::Cell{se}});
  };
  for (std::size_t t = 0; t < kTerms; ++t) {
    const double mean_abs = static_cast<double>(acc[t].sum);
    const double var = std::max(
        0.0, static_cast<double>(acc[t].sum_sq) - mean_abs * mean_abs);
    const double se = opts.source == "exact"
                          ? 0.0
                          : std::sqrt(var / static_cast<double>(samples));
    const std::string majorized =
        std::isnan(term_bounds[t]) ? "" : (mean_abs <= term_bounds[t] ? "true" : "false");
    made_row(term_names[t], mean_abs, term_bounds[t], majorized, se);
  }
  made_row("T1", bounds.t1, nan, "", bounds.t1_se);
  made_row("T2", bounds.t2, nan, "", bounds.t2_se);
  made_row("T3", bounds.t3, nan, "", bounds.t3_se);
  if (jd) {
    const double dk = standardize(*jd, obs).spin.d_k;
    made_row("dK", dk, bounds.total(), dk <= bounds.total() ? "true" : "false", 0.0);
  }

  ordered_json resolved = {{"weights", weights_json_echo(opts.weights)},
                           {"beta", opts.beta},
                           {"h", opts.h},
                           {"n", n},
                           {"source", opts.source},
                           {"count", opts.count},
                           {"seed", opts.seed}};
  prov.config_hash = fnv1a64("stein-terms" + resolved.dump());
  Emit{fallback, opts.out}(table, prov);
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical laboratory for an inhomogeneous mean-field spin model"};
  app.require_subcommand(1);

  FixedPointOpts fp;
  auto* fp_cmd = make_sub(app, "fixed-point",
                          "Fixed point and scalar observables (JSON by default)");
  fp_cmd->add_option("--weights", fp.weights, "Weight spec (inline JSON or path)");
  fp_cmd->add_option("--beta", fp.beta, "Inverse temperature");
  fp_cmd->add_option("--h", fp.h, "External field");
  fp_cmd->add_option("--n", fp.n, "Replicate the base to this size");
  fp_cmd->add_option("--scan-grid", fp.scan_grid, "beta_lo:beta_hi:cnt,h_lo:h_hi:cnt");
  attach_common(fp_cmd, fp.out, "json");

  ExactDistOpts ed;
  auto* ed_cmd = make_sub(app, "exact-dist", "Exact joint law of (S, T) as CSV");
  ed_cmd->add_option("--weights", ed.weights, "Weight spec (inline JSON or path)");
  ed_cmd->add_option("--beta", ed.beta, "Inverse temperature");
  ed_cmd->add_option("--h", ed.h, "External field");
  ed_cmd->add_option("--n", ed.n, "Replicate the base to this size");
  ed_cmd->add_option("--method", ed.method, "auto | transfer | enumerate")
      ->check(CLI::IsMember({"auto", "transfer", "enumerate"}));
  attach_common(ed_cmd, ed.out, "csv");

  DkScanOpts dk;
  auto* dk_cmd = make_sub(app, "dk-scan",
                          "Kolmogorov distance to the normal over an n-grid");
  dk_cmd->add_option("--weights", dk.weights, "Weight spec (inline JSON or path)");
  dk_cmd->add_option("--beta", dk.beta, "Inverse temperature");
  dk_cmd->add_option("--h", dk.h, "External field");
  dk_cmd->add_option("--n", dk.n_list, "Comma-separated n grid")->delimiter(',');
  attach_common(dk_cmd, dk.out, "csv");

  MgfOpts mg;
  auto* mg_cmd = make_sub(app, "mgf", "Cumulant generating function rows");
  mg_cmd->add_option("--weights", mg.weights, "Weight spec (inline JSON or path)");
  mg_cmd->add_option("--beta", mg.beta, "Inverse temperature");
  mg_cmd->add_option("--h", mg.h, "External field");
  mg_cmd->add_option("--n", mg.n, "Replicate the base to this size");
  mg_cmd->add_option("--s", mg.s_list, "Comma-separated tilt values")->delimiter(',');
  attach_common(mg_cmd, mg.out, "csv");

  SampleOpts sm;
  auto* sm_cmd = make_sub(app, "sample", "Draw configurations");
  sm_cmd->add_option("--weights", sm.weights, "Weight spec (inline JSON or path)");
  sm_cmd->add_option("--beta", sm.beta, "Inverse temperature");
  sm_cmd->add_option("--h", sm.h, "External field");
  sm_cmd->add_option("--n", sm.n, "Replicate the base to this size");
  sm_cmd->add_option("--count", sm.count, "Number of configurations");
  sm_cmd->add_option("--seed", sm.seed, "RNG seed");
  sm_cmd->add_option("--method", sm.method, "auxiliary-field | glauber-chain")
      ->check(CLI::IsMember({"auxiliary-field", "glauber-chain"}));
  sm_cmd->add_option("--emit", sm.emit, "st | spins")
      ->check(CLI::IsMember({"st", "spins"}));
  attach_common(sm_cmd, sm.out, "csv");

  SteinTermsOpts st;
  auto* st_cmd = make_sub(app, "stein-terms",
                              "Error terms, their bounds and the distance bound");
  st_cmd->add_option("--weights", st.weights, "Weight spec (inline JSON or path)");
  st_cmd->add_option("--beta", st.beta, "Inverse temperature");
  st_cmd->add_option("--h", st.h, "External field");
  st_cmd->add_option("--n", st.n, "Replicate the base to this size");
  st_cmd->add_option("--source", st.source, "exact | sample")
      ->check(CLI::IsMember({"exact", "sample"}));
  st_cmd->add_option("--count", st.count, "Sample count for --source sample");
  st_cmd->add_option("--seed", st.seed, "RNG seed for --source sample");
  attach_common(st_cmd, st.out, "csv");

  OutputOptions ac_out;
  auto* ac_cmd = make_sub(app, "accept", "Run the verification suite");
  ac_cmd->add_option("--out", ac_out.out_path, "Output file (stdout when omitted)");
  ac_cmd->add_flag("--dry-run", ac_out.dry_run, "Validate the configuration and exit");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    ordered_json error = {
        {"error", {{"kind", "cli"}, {"message", e.what()}}}};
    err << error.dump() << "\n";
    return 1;
  }

  try {
    const auto with_config = [&](CLI::App* sub, OutputOptions& o,
                                 const std::vector<std::string>& keys,
                                 const auto& apply) {
      const auto cfg = ConfigFile::load(o.config_path, keys);
      apply(cfg, sub);
    };

    if (fp_cmd->parsed()) {
      with_config(fp_cmd, fp.out,
                  {"weights", "beta", "h", "n", "scan_grid", "format", "out"},
                  [&](const ConfigFile& cfg, CLI::App* sub) {
                    cfg.fill_weights(sub, fp.weights);
                    cfg.fill(sub, "--beta", "beta", fp.beta);
                    cfg.fill(sub, "--h", "h", fp.h);
                    cfg.fill(sub, "--n", "n", fp.n);
                    cfg.fill(sub, "--scan-grid", "scan_grid", fp.scan_grid);
                    cfg.fill(sub, "--format", "format", fp.out.format);
                    cfg.fill(sub, "--out", "out", fp.out.out_path);
                  });
      if (fp.weights.empty()) fail(ErrorKind::validation, "--weights is required");
      if (fp.out.dry_run) {
        const auto ws = resolve_weights(fp.weights, fp.n);
        ModelParams params(fp.beta, fp.h);
        emit_resolved(out, "fixed-point",
                      {{"weights", weights_json_echo(fp.weights)},
                       {"beta", fp.beta},
                       {"h", fp.h},
                       {"n", ws.size()},
                       {"scan_grid", fp.scan_grid}});
        return 0;
      }
      run_fixed_point(fp, out);
    } else if (ed_cmd->parsed()) {
      with_config(ed_cmd, ed.out,
                  {"weights", "beta", "h", "n", "method", "format", "out"},
                  [&](const ConfigFile& cfg, CLI::App* sub) {
                    cfg.fill_weights(sub, ed.weights);
                    cfg.fill(sub, "--beta", "beta", ed.beta);
                    cfg.fill(sub, "--h", "h", ed.h);
                    cfg.fill(sub, "--n", "n", ed.n);
                    cfg.fill(sub, "--method", "method", ed.method);
                    cfg.fill(sub, "--format", "format", ed.out.format);
                    cfg.fill(sub, "--out", "out", ed.out.out_path);
                  });
      if (ed.weights.empty()) fail(ErrorKind::validation, "--weights is required");
      if (ed.out.dry_run) {
        const auto ws = resolve_weights(ed.weights, ed.n);
        ModelParams params(ed.beta, ed.h);
        emit_resolved(out, "exact-dist",
                      {{"weights", weights_json_echo(ed.weights)},
                       {"beta", ed.beta},
                       {"h", ed.h},
                       {"n", ws.size()},
                       {"method", ed.method}});
        return 0;
      }
      run_exact_dist(ed, out);
    } else if (dk_cmd->parsed()) {
      with_config(dk_cmd, dk.out, {"weights", "beta", "h", "n", "format", "out"},
                  [&](const ConfigFile& cfg, CLI::App* sub) {
                    cfg.fill_weights(sub, dk.weights);
                    cfg.fill(sub, "--beta", "beta", dk.beta);
                    cfg.fill(sub, "--h", "h", dk.h);
                    cfg.fill(sub, "--n", "n", dk.n_list);
                    cfg.fill(sub, "--format", "format", dk.out.format);
                    cfg.fill(sub, "--out", "out", dk.out.out_path);
                  });
      if (dk.weights.empty()) fail(ErrorKind::validation, "--weights is required");
      if (dk.out.dry_run) {
        for (std::size_t n : dk.n_list) resolve_weights(dk.weights, n);
        ModelParams params(dk.beta, dk.h);
        if (!in_uniqueness_regime(parse_weights(dk.weights).empirical_law(), params))
          fail(ErrorKind::regime, "parameters outside the uniqueness regime");
        emit_resolved(out, "dk-scan",
                      {{"weights", weights_json_echo(dk.weights)},
                       {"beta", dk.beta},
                       {"h", dk.h},
                       {"n", dk.n_list}});
        return 0;
      }
      run_dk_scan(dk, out);
    } else if (mg_cmd->parsed()) {
      with_config(mg_cmd, mg.out, {"weights", "beta", "h", "n", "s", "format", "out"},
                  [&](const ConfigFile& cfg, CLI::App* sub) {
                    cfg.fill_weights(sub, mg.weights);
                    cfg.fill(sub, "--beta", "beta", mg.beta);
                    cfg.fill(sub, "--h", "h", mg.h);
                    cfg.fill(sub, "--n", "n", mg.n);
                    cfg.fill(sub, "--s", "s", mg.s_list);
                    cfg.fill(sub, "--format", "format", mg.out.format);
                    cfg.fill(sub, "--out", "out", mg.out.out_path);
                  });
      if (mg.weights.empty()) fail(ErrorKind::validation, "--weights is required");
      if (mg.out.dry_run) {
        const auto ws = resolve_weights(mg.weights, mg.n);
        ModelParams params(mg.beta, mg.h);
        emit_resolved(out, "mgf",
                      {{"weights", weights_json_echo(mg.weights)},
                       {"beta", mg.beta},
                       {"h", mg.h},
                       {"n", ws.size()},
                       {"s", mg.s_list}});
        return 0;
      }
      run_mgf(mg, out);
    } else if (sm_cmd->parsed()) {
      with_config(sm_cmd, sm.out,
                  {"weights", "beta", "h", "n", "count", "seed", "method", "emit",
                   "format", "out"},
                  [&](const ConfigFile& cfg, CLI::App* sub) {
                    cfg.fill_weights(sub, sm.weights);
                    cfg.fill(sub, "--beta", "beta", sm.beta);
                    cfg.fill(sub, "--h", "h", sm.h);
                    cfg.fill(sub, "--n", "n", sm.n);
                    cfg.fill(sub, "--count", "count", sm.count);
                    cfg.fill(sub, "--seed", "seed", sm.seed);
                    cfg.fill(sub, "--method", "method", sm.method);
                    cfg.fill(sub, "--emit", "emit", sm.emit);
                    cfg.fill(sub, "--format", "format", sm.out.format);
                    cfg.fill(sub, "--out", "out", sm.out.out_path);
                  });
      if (sm.weights.empty()) fail(ErrorKind::validation, "--weights is required");
      if (sm.out.dry_run) {
        const auto ws = resolve_weights(sm.weights, sm.n);
        ModelParams params(sm.beta, sm.h);
        emit_resolved(out, "sample",
                      {{"weights", weights_json_echo(sm.weights)},
                       {"beta", sm.beta},
                       {"h", sm.h},
                       {"n", ws.size()},
                       {"count", sm.count},
                       {"seed", sm.seed},
                       {"method", sm.method},
                       {"emit", sm.emit}});
        return 0;
      }
      run_sample(sm, out);
    } else if (st_cmd->parsed()) {
      with_config(st_cmd, st.out,
                  {"weights", "beta", "h", "n", "source", "count", "seed", "format",
                   "out"},
                  [&](const ConfigFile& cfg, CLI::App* sub) {
                    cfg.fill_weights(sub, st.weights);
                    cfg.fill(sub, "--beta", "beta", st.beta);
                    cfg.fill(sub, "--h", "h", st.h);
                    cfg.fill(sub, "--n", "n", st.n);
                    cfg.fill(sub, "--source", "source", st.source);
                    cfg.fill(sub, "--count", "count", st.count);
                    cfg.fill(sub, "--seed", "seed", st.seed);
                    cfg.fill(sub, "--format", "format", st.out.format);
                    cfg.fill(sub, "--out", "out", st.out.out_path);
                  });
      if (st.weights.empty()) fail(ErrorKind::validation, "--weights is required");
      if (st.out.dry_run) {
        const auto ws = resolve_weights(st.weights, st.n);
        ModelParams params(st.beta, st.h);
        if (!in_uniqueness_regime(ws.empirical_law(), params))
          fail(ErrorKind::regime, "parameters outside the uniqueness regime");
        emit_resolved(out, "stein-terms",
                      {{"weights", weights_json_echo(st.weights)},
                       {"beta", st.beta},
                       {"h", st.h},
                       {"n", ws.size()},
                       {"source", st.source},
                       {"count", st.count},
                       {"seed", st.seed}});
        return 0;
      }
      run_stein_terms(st, out);
    } else if (ac_cmd->parsed()) {
      if (ac_out.dry_run) {
        emit_resolved(out, "accept", ordered_json::object());
        return 0;
      }
      if (!ac_out.out_path.empty()) {
        std::ofstream file(ac_out.out_path);
        if (!file)
          fail(ErrorKind::validation, "cannot open output file: " + ac_out.out_path);
        return run_acceptance(file) ? 0 : 1;
      }
      return run_acceptance(out) ? 0 : 1;
    }
  } catch (const Error& e) {
    ordered_json error = {
        {"error", {{"kind", to_string(e.kind())}, {"message", e.what()}}}};
    err << error.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    ordered_json error = {{"error", {{"kind", "internal"}, {"message", e.what()}}}};
    err << error.dump() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace icw::cli
