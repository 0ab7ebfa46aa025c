#include "spcr/app.hpp"

#include "spcr/dimension.hpp"
#include "spcr/io.hpp"
#include "spcr/pcr.hpp"
#include "spcr/ranking.hpp"
#include "spcr/rng.hpp"
#include "spcr/simgen.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

namespace spcr::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::UsageError:
    case ErrorKind::InvalidArgument:
    case ErrorKind::UnsupportedResponse:
      return kUsage;
    case ErrorKind::IngestError:
    case ErrorKind::SchemaError:
    case ErrorKind::InvalidData:
      return kIngest;
    case ErrorKind::NumericalFailure:
    case ErrorKind::DegenerateResponse:
    case ErrorKind::DegenerateData:
    case ErrorKind::DegenerateDirection:
    case ErrorKind::NoAssociation:
      return kNumerical;
  }
  return kNumerical;
}

namespace {

constexpr const char* kVersion = "0.1.0";

// Flags shared by the analysis commands. Unset strings mean "not given".
struct Options {
  std::string x_path;
  std::string y_path;
  std::string method;
  std::string m_range;
  std::string h = "auto";
  std::string eval = "in-sample";
  std::uint64_t seed = 0;
  std::string tau_prerank;
  std::uint64_t tau_shuffle = 0;
  bool tau_shuffle_set = false;
  std::string ub_table;
  std::string out_dir;
  std::string holdout_x;
  std::string holdout_y;
  int restarts = 10;
  int max_iter = 200;
  double tol = 1e-6;
  bool timing = false;

  Index m = 0;
  int top = 50;
  int overlap = 0;
  std::string model_path;
  std::string example;
  std::string spec_path;
  int replicates = 1;
  Index n_rows = 0;
};

struct MRange {
  Index lo = 0;
  Index hi = 0;
};

std::optional<MRange> parse_m_range(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto dots = text.find("..");
  MRange r;
  try {
    std::size_t used = 0;
    if (dots == std::string::npos) {
      r.lo = r.hi = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } else {
      const std::string a = text.substr(0, dots);
      const std::string b = text.substr(dots + 2);
      r.lo = std::stoll(a, &used);
      if (used != a.size()) throw std::invalid_argument(a);
      r.hi = std::stoll(b, &used);
      if (used != b.size()) throw std::invalid_argument(b);
    }
  } catch (const std::exception&) {
    fail(ErrorKind::UsageError, "--m-range must look like A..B, got '" + text + "'");
  }
  if (r.hi < r.lo) fail(ErrorKind::UsageError, "--m-range " + text + " is empty");
  if (r.lo < 2) fail(ErrorKind::UsageError, "--m-range must start at 2 or above");
  return r;
}

std::optional<TauRankConfig> parse_tau(const Options& o, Scheme scheme) {
  if (o.tau_prerank.empty()) return std::nullopt;
  TauRankConfig cfg;
  char c1 = 0;
  char c2 = 0;
  long long l = 0;
  long long s = 0;
  long long t = 0;
  std::istringstream in(o.tau_prerank);
  std::string rest;
  if (!(in >> l >> c1 >> s >> c2 >> t) || c1 != ',' || c2 != ',' || (in >> rest))
    fail(ErrorKind::UsageError, "--tau-prerank must look like L,s,tau");
  cfg.n_blocks = l;
  cfg.block_size = s;
  cfg.keep_per_block = t;
  cfg.scheme = scheme;
  if (o.tau_shuffle_set) cfg.shuffle_seed = o.tau_shuffle;
  return cfg;
}

Method parse_method_or_throw(const std::string& tag) {
  if (auto m = parse_method(tag)) return *m;
  fail(ErrorKind::UsageError, "unknown method '" + tag + "' (expected knb1-pcH, knb2-pcH, bhpt-pcH, bhpt-pc1 or nr-pcH)");
}

std::vector<Method> parse_method_list(const std::string& text, Index q) {
  std::vector<Method> out;
  if (text.empty() || text == "all") {
    for (Method m : all_methods())
      if (q == 1 || (m != Method::BhptPcH && m != Method::BhptPc1)) out.push_back(m);
    return out;
  }
  std::stringstream ss(text);
  std::string tag;
  while (std::getline(ss, tag, ',')) out.push_back(parse_method_or_throw(tag));
  if (out.empty()) fail(ErrorKind::UsageError, "--method list is empty");
  return out;
}

Scheme scheme_for(Method m) {
  switch (m) {
    case Method::Knb1PcH: return Scheme::B1;
    case Method::Knb2PcH: return Scheme::B2;
    case Method::BhptPcH:
    case Method::BhptPc1: return Scheme::Bair;
    case Method::NrPcH: return Scheme::Natural;
  }
  return Scheme::B1;
}

DimensionOptions selector_options(const Options& o) {
  DimensionOptions d;
  d.kurtosis.n_restarts = o.restarts;
  d.kurtosis.max_iter = o.max_iter;
  d.kurtosis.tol = o.tol;
  d.kurtosis.seed = o.seed;
  if (!o.ub_table.empty()) d.ub = UbTable::load(o.ub_table);
  return d;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IngestError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return hash_tag(buf.str());
}

json input_record(const std::string& path) {
  if (path.empty()) return nullptr;
  return json{{"path", path}, {"fnv1a64", hex64(file_digest(path))}};
}

json version_record() {
  return json{{"spcr", kVersion},
              {"rng", std::string(kRngName)},
              {"rng_version", kRngVersion},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"model_format", kModelFormatVersion}};
}

json config_record(const Options& o) {
  return json{{"x", o.x_path},
              {"y", o.y_path},
              {"method", o.method},
              {"m_range", o.m_range},
              {"m", o.m},
              {"h", o.h},
              {"eval", o.eval},
              {"seed", o.seed},
              {"tau_prerank", o.tau_prerank},
              {"tau_shuffle_seed", o.tau_shuffle_set ? json(o.tau_shuffle) : json(nullptr)},
              {"ub_table", o.ub_table},
              {"holdout_x", o.holdout_x},
              {"holdout_y", o.holdout_y},
              {"restarts", o.restarts},
              {"max_iter", o.max_iter},
              {"tol", o.tol},
              {"timing", o.timing},
              {"example", o.example},
              {"spec", o.spec_path},
              {"replicates", o.replicates},
              {"n", o.n_rows},
              {"top", o.top},
              {"overlap", o.overlap}};
}

// Output directory for one run. The name carries a digest of the command,
// configuration and inputs; an existing directory is never reused.
class RunDir {
 public:
  RunDir(const std::string& base, const std::string& command, const Options& o) {
    manifest_ = json{{"command", command}, {"config", config_record(o)}, {"versions", version_record()}};
    json inputs = json::object();
    for (const auto& [key, path] :
         {std::pair{"x", o.x_path}, {"y", o.y_path}, {"holdout_x", o.holdout_x}, {"holdout_y", o.holdout_y},
          {"ub_table", o.ub_table}, {"model", o.model_path}, {"spec", o.spec_path}})
      if (!path.empty()) inputs[key] = input_record(path);
    manifest_["inputs"] = inputs;
    if (base.empty()) return;

    const std::string stem = command + "-" + hex64(hash_tag(manifest_.dump())).substr(0, 12);
    fs::create_directories(base);
    fs::path dir = fs::path(base) / stem;
    for (int n = 2; fs::exists(dir); ++n) dir = fs::path(base) / (stem + "-" + std::to_string(n));
    fs::create_directory(dir);
    dir_ = dir;
  }

  bool active() const { return !dir_.empty(); }
  std::string path(const std::string& file) const { return (dir_ / file).string(); }
  const fs::path& dir() const { return dir_; }
  json& manifest() { return manifest_; }

  void write_text(const std::string& file, const std::string& text) const {
    std::ofstream out(path(file), std::ios::binary);
    if (!out) fail(ErrorKind::IngestError, "cannot write " + path(file));
    out << text;
  }

  void finish() {
    if (active()) write_text("manifest.json", manifest_.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  json manifest_;
};

// Predictor matrix entering Step 1, after the optional preliminary ranking.
struct Prepared {
  CenteredMatrix x;
  std::vector<std::string> names;
  std::vector<Index> original;  // column in the input file
};

Prepared prepare(const Dataset& data, const CenteredMatrix& y_c, const std::optional<TauRankConfig>& tau) {
  Prepared out;
  CenteredMatrix x = center_columns(data.x);
  if (!tau) {
    out.x = std::move(x);
    out.names = data.x_names;
    out.original.resize(out.names.size());
    for (std::size_t j = 0; j < out.original.size(); ++j) out.original[j] = static_cast<Index>(j);
    return out;
  }
  TauRankResult r = tau_prerank(x, y_c, *tau);
  out.x = std::move(r.subset.x);
  out.original = std::move(r.subset.indices);
  for (Index j : out.original) out.names.push_back(data.x_names[static_cast<std::size_t>(j)]);
  return out;
}

Dataset load_inputs(const Options& o) {
  if (o.x_path.empty() || o.y_path.empty()) fail(ErrorKind::UsageError, "--x and --y are required");
  return load_csv(o.x_path, o.y_path);
}

std::optional<TauRankConfig> tau_for_method(const Options& o, Method method) {
  if (o.tau_prerank.empty()) return std::nullopt;
  if (method != Method::Knb1PcH && method != Method::Knb2PcH)
    fail(ErrorKind::UsageError, "--tau-prerank applies to knb1-pcH and knb2-pcH only");
  return parse_tau(o, scheme_for(method));
}

std::vector<std::string> numbered_names(const char* prefix, Index n) {
  std::vector<std::string> names;
  for (Index j = 0; j < n; ++j) names.push_back(prefix + std::to_string(j + 1));
  return names;
}

// ---------------------------------------------------------------- rank

int cmd_rank(const Options& o, std::ostream& out) {
  const Dataset data = load_inputs(o);
  const Method method = parse_method_or_throw(o.method.empty() ? "knb1-pcH" : o.method);
  const CenteredMatrix y_c = center_columns(data.y);
  const Prepared prep = prepare(data, y_c, tau_for_method(o, method));
  const RankingResult ranking = method_ranking(method, prep.x, y_c);

  RunDir run(o.out_dir, "rank", o);
  std::ostringstream csv;
  csv << "rank,name,column,score\n";
  for (std::size_t r = 0; r < ranking.order.size(); ++r) {
    const Index j = ranking.order[r];
    csv << r + 1 << ',' << prep.names[static_cast<std::size_t>(j)] << ',' << prep.original[static_cast<std::size_t>(j)]
        << ',' << format_double(ranking.scores(j)) << '\n';
  }
  if (run.active()) run.write_text("ranking.csv", csv.str());

  const std::size_t shown = std::min<std::size_t>(ranking.order.size(), static_cast<std::size_t>(std::max(o.top, 0)));
  out << "# " << to_string(method) << " ranking (" << to_string(ranking.scheme) << "), top " << shown << " of "
      << ranking.order.size() << "\n";
  std::istringstream lines(csv.str());
  std::string line;
  for (std::size_t r = 0; r <= shown && std::getline(lines, line); ++r) out << line << '\n';

  if (o.overlap > 0) {
    // Top-K name sets per scheme; the marginal scheme ranks in one step.
    std::vector<std::pair<std::string, std::set<std::string>>> tops;
    auto top_names = [&](const Prepared& p, const RankingResult& r) {
      std::set<std::string> names;
      const std::size_t k = std::min<std::size_t>(r.order.size(), static_cast<std::size_t>(o.overlap));
      for (std::size_t i = 0; i < k; ++i) names.insert(p.names[static_cast<std::size_t>(r.order[i])]);
      return names;
    };
    for (Method m : {Method::Knb1PcH, Method::Knb2PcH}) {
      const Prepared p = prepare(data, y_c, o.tau_prerank.empty() ? std::nullopt : parse_tau(o, scheme_for(m)));
      tops.emplace_back(m == Method::Knb1PcH ? "knb1" : "knb2", top_names(p, method_ranking(m, p.x, y_c)));
    }
    if (data.y.cols() == 1) {
      const Prepared p = prepare(data, y_c, std::nullopt);
      tops.emplace_back("bhpt", top_names(p, method_ranking(Method::BhptPcH, p.x, y_c)));
    }
    std::ostringstream table;
    table << "scheme_a,scheme_b,top,overlap_percent\n";
    out << "# percentage overlap of top " << o.overlap << " variables\n";
    for (std::size_t a = 0; a < tops.size(); ++a) {
      for (std::size_t b = a + 1; b < tops.size(); ++b) {
        std::size_t common = 0;
        for (const auto& n : tops[a].second) common += tops[b].second.count(n);
        const double denom = static_cast<double>(std::min(tops[a].second.size(), tops[b].second.size()));
        char pct[32];
        std::snprintf(pct, sizeof(pct), "%.1f", denom > 0 ? 100.0 * static_cast<double>(common) / denom : 0.0);
        table << tops[a].first << ',' << tops[b].first << ',' << o.overlap << ',' << pct << '\n';
        out << tops[a].first << " vs " << tops[b].first << ": " << pct << "%\n";
      }
    }
    if (run.active()) run.write_text("overlap.csv", table.str());
  }
  run.finish();
  if (run.active()) out << "wrote " << run.dir().string() << '\n';
  return kSuccess;
}

// ---------------------------------------------------------------- select-dim

int cmd_select_dim(const Options& o, std::ostream& out) {
  const Dataset data = load_inputs(o);
  const Method method = parse_method_or_throw(o.method.empty() ? "knb1-pcH" : o.method);
  if (!uses_selector(method)) fail(ErrorKind::UsageError, "bhpt-pc1 does not select a dimension");
  if (o.m < 2) fail(ErrorKind::UsageError, "--m must be at least 2");
  const CenteredMatrix y_c = center_columns(data.y);
  const Prepared prep = prepare(data, y_c, tau_for_method(o, method));
  const RankingResult ranking = method_ranking(method, prep.x, y_c);
  const RankedSubset subset = take_ranked_subset(prep.x, ranking, o.m);
  DimensionOptions opts = selector_options(o);
  opts.kurtosis.seed = derive_seed(o.seed, {hash_tag(to_string(method)), static_cast<std::uint64_t>(o.m)});
  const DimensionSelection sel = select_dimension(subset.x, opts);

  std::ostringstream csv;
  csv << "k,beta_hat,ub,score,converged\n";
  for (const auto& [k, score] : sel.scores)
    csv << k << ',' << format_double(sel.beta_hats.at(k)) << ',' << format_double(sel.ub_values.at(k)) << ','
        << format_double(score) << ',' << (sel.converged.at(k) ? 1 : 0) << '\n';
  out << csv.str() << "H(" << o.m << ") = " << sel.chosen_h << '\n';

  RunDir run(o.out_dir, "select-dim", o);
  if (run.active()) {
    run.write_text("selection.csv", csv.str());
    run.manifest()["result"] = json{{"m", o.m}, {"chosen_h", sel.chosen_h}, {"argmax_k", sel.argmax_k},
                                    {"k_max", sel.k_max}};
    run.finish();
    out << "wrote " << run.dir().string() << '\n';
  }
  return kSuccess;
}

// ---------------------------------------------------------------- fit / predict

ComponentPolicy component_policy(const Options& o) {
  if (o.h == "auto") return ComponentPolicy::automatic(selector_options(o));
  try {
    std::size_t used = 0;
    const long long h = std::stoll(o.h, &used);
    if (used != o.h.size() || h < 1) throw std::invalid_argument(o.h);
    return ComponentPolicy::exactly(h);
  } catch (const std::exception&) {
    fail(ErrorKind::UsageError, "--h must be 'auto' or a positive integer");
  }
}

int cmd_fit(const Options& o, std::ostream& out) {
  const Dataset data = load_inputs(o);
  const Method method = parse_method_or_throw(o.method.empty() ? "knb1-pcH" : o.method);
  if (o.m < 2) fail(ErrorKind::UsageError, "--m must be at least 2");
  const CenteredMatrix y_c = center_columns(data.y);
  const Prepared prep = prepare(data, y_c, tau_for_method(o, method));
  const RankingResult ranking = method_ranking(method, prep.x, y_c);

  ComponentPolicy policy = method == Method::BhptPc1 ? ComponentPolicy::exactly(1) : component_policy(o);
  policy.selector.kurtosis.seed = derive_seed(o.seed, {hash_tag(to_string(method)), static_cast<std::uint64_t>(o.m)});
  const FitResult fitted = fit(prep.x, data.y, ranking, o.m, policy);

  ModelFile file{fitted.model, prep.names, data.y_names, std::string(to_string(method)), o.seed};
  const std::string text = serialize_model(file);
  if (!o.model_path.empty()) save_model(o.model_path, file);

  RunDir run(o.out_dir, "fit", o);
  if (run.active()) {
    run.write_text("model.json", text);
    run.manifest()["result"] = json{{"m", fitted.model.m}, {"h", fitted.model.h},
                                    {"in_sample_lse", lse(fitted_values(fitted.model, prep.x), data.y)}};
    run.finish();
  }
  out << to_string(method) << ": m = " << fitted.model.m << ", H = " << fitted.model.h
      << ", in-sample LSE = " << format_double(lse(fitted_values(fitted.model, prep.x), data.y)) << '\n';
  if (o.model_path.empty() && !run.active()) out << text;
  if (run.active()) out << "wrote " << run.dir().string() << '\n';
  return kSuccess;
}

int cmd_predict(const Options& o, std::ostream& out) {
  if (o.model_path.empty() || o.x_path.empty()) fail(ErrorKind::UsageError, "predict needs --model and --x");
  const ModelFile file = load_model(o.model_path);
  const CsvTable table = read_csv(o.x_path);
  const Matrix z = align_to_model(file, table);
  const Matrix y_hat = predict(file.model, z);

  RunDir run(o.out_dir, "predict", o);
  if (run.active()) {
    write_csv(run.path("predictions.csv"), file.y_names, y_hat);
    run.finish();
    out << "wrote " << run.dir().string() << '\n';
  } else {
    write_csv(out, file.y_names, y_hat);
  }
  return kSuccess;
}

// ---------------------------------------------------------------- sweep

struct Best {
  Index m = 0;
  Index h = 0;
  double lse = 0.0;
};

std::map<Method, Best> best_rows(const SweepResult& r) {
  std::map<Method, Best> best;
  for (const SweepRow& row : r.rows) {
    auto it = best.find(row.method);
    if (it == best.end() || row.lse < it->second.lse) best[row.method] = Best{row.m, row.chosen_h, row.lse};
  }
  return best;
}

// H credited to a method's best row; bhpt-pc1 reports its m.
Index credited_h(Method method, const Best& b) { return method == Method::BhptPc1 ? b.m : b.h; }

std::string summary_table(const std::map<Method, Best>& best) {
  std::ostringstream s;
  s << "# smallest prediction error and best dimension\n";
  s << std::left << std::setw(10) << "method" << std::setw(6) << "m" << std::setw(6) << "H" << "LSE(m)\n";
  for (const auto& [method, b] : best) {
    s << std::setw(10) << to_string(method) << std::setw(6) << b.m << std::setw(6)
      << (method == Method::BhptPc1 ? std::string("-") : std::to_string(b.h)) << format_double(b.lse) << '\n';
  }
  return s.str();
}

void append_rows(std::ostringstream& csv, const SweepResult& r, const Options& o, std::optional<int> replicate) {
  for (const SweepRow& row : r.rows) {
    if (replicate) csv << *replicate << ',';
    csv << to_string(row.method) << ',' << row.m << ',' << row.chosen_h << ',' << format_double(row.lse) << ','
        << (o.timing ? format_double(row.wall_time_ms) : std::string("0")) << '\n';
  }
}

SimulatedDataset simulate_example(const std::string& id, std::uint64_t seed) {
  if (id == "5.1.1") return example_5_1_1(seed);
  if (id == "5.1.2") return example_5_1_2(seed);
  fail(ErrorKind::UsageError, "unknown example '" + id + "' (expected 5.1.1 or 5.1.2)");
}

std::uint64_t replicate_seed(std::uint64_t seed, int replicate) {
  return derive_seed(seed, {hash_tag("replicate"), static_cast<std::uint64_t>(replicate)});
}

SweepOptions sweep_options(const Options& o, const std::vector<Method>& methods, Index n, Index p,
                           std::uint64_t seed) {
  SweepOptions so;
  so.methods = methods;
  const Index limit = std::min(n, p);
  const auto range = parse_m_range(o.m_range);
  so.m_min = range ? range->lo : 2;
  so.m_max = range ? range->hi : limit;
  if (so.m_max > limit) fail(ErrorKind::UsageError, "--m-range exceeds min(N, p) = " + std::to_string(limit));
  so.selector = selector_options(o);
  so.seed = seed;
  return so;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  RunDir run(o.out_dir, "sweep", o);
  std::ostringstream csv;

  if (!o.example.empty()) {
    if (o.replicates < 1) fail(ErrorKind::UsageError, "--replicates must be positive");
    const Index q = o.example == "5.1.1" ? 1 : 7;
    const std::vector<Method> methods = parse_method_list(o.method, q);
    if (o.eval != "in-sample") fail(ErrorKind::UsageError, "simulated replicates are evaluated in-sample");
    if (!o.tau_prerank.empty()) fail(ErrorKind::UsageError, "--tau-prerank is not used with --example");
    csv << "replicate,method,m,h,lse,wall_time_ms\n";

    std::map<Method, std::map<Index, int>> histogram;  // best-H counts
    std::map<Method, std::map<Index, int>> wins;       // best-method counts by H
    for (int rep = 0; rep < o.replicates; ++rep) {
      const std::uint64_t seed = replicate_seed(o.seed, rep);
      const SimulatedDataset ds = simulate_example(o.example, seed);
      const CenteredMatrix x = center_columns(ds.x_raw);
      const SweepResult r = sweep(x, ds.y_raw, sweep_options(o, methods, x.n_rows(), x.n_cols(), seed));
      append_rows(csv, r, o, rep);

      const auto best = best_rows(r);
      double overall = std::numeric_limits<double>::infinity();
      for (const auto& [method, b] : best) {
        ++histogram[method][credited_h(method, b)];
        overall = std::min(overall, b.lse);
      }
      for (const auto& [method, b] : best)
        if (b.lse <= overall * (1.0 + 1e-12)) ++wins[method][credited_h(method, b)];
    }

    std::ostringstream hist_csv;
    hist_csv << "method,h,count\n";
    std::ostringstream wins_csv;
    wins_csv << "method,h,count\n";
    std::ostringstream text;
    text << "# best-H counts over " << o.replicates << " replicates (example " << o.example << ")\n";
    for (const auto& [method, counts] : histogram) {
      text << to_string(method) << ':';
      for (const auto& [h, c] : counts) {
        hist_csv << to_string(method) << ',' << h << ',' << c << '\n';
        text << " H=" << h << ":" << c;
      }
      text << '\n';
    }
    text << "# counts of best performance over all methods by H (ties credit every tying method)\n";
    for (Method method : methods) {
      int total = 0;
      text << to_string(method) << ':';
      if (auto it = wins.find(method); it != wins.end()) {
        for (const auto& [h, c] : it->second) {
          wins_csv << to_string(method) << ',' << h << ',' << c << '\n';
          text << " H=" << h << ":" << c;
          total += c;
        }
      }
      text << " total=" << total << '\n';
    }
    out << text.str();
    if (run.active()) {
      run.write_text("results.csv", csv.str());
      run.write_text("best_h_histogram.csv", hist_csv.str());
      run.write_text("best_method_counts.csv", wins_csv.str());
      run.write_text("summary.txt", text.str());
    }
  } else {
    const Dataset data = load_inputs(o);
    const std::vector<Method> methods = parse_method_list(o.method, data.y.cols());
    const CenteredMatrix y_c = center_columns(data.y);
    // The preliminary ranking uses the scheme of the method it feeds, so each
    // method sweeps its own prepared matrix.
    SweepResult all;
    for (Method method : methods) {
      const Prepared prep = prepare(data, y_c, tau_for_method(o, method));
      SweepOptions so = sweep_options(o, {method}, prep.x.n_rows(), prep.x.n_cols(), o.seed);
      if (o.eval == "holdout") {
        if (o.holdout_x.empty() || o.holdout_y.empty())
          fail(ErrorKind::UsageError, "--eval holdout needs --holdout-x and --holdout-y");
        const Dataset hold = load_csv(o.holdout_x, o.holdout_y);
        if (hold.x_names != data.x_names || hold.y_names != data.y_names)
          fail(ErrorKind::SchemaError, "holdout files must have the same columns as the training files");
        so.eval = EvalMode::Holdout;
        Matrix hx(hold.x.rows(), static_cast<Index>(prep.original.size()));
        for (std::size_t j = 0; j < prep.original.size(); ++j) hx.col(static_cast<Index>(j)) = hold.x.col(prep.original[j]);
        so.x_holdout = std::move(hx);
        so.y_holdout = hold.y;
      } else if (o.eval != "in-sample") {
        fail(ErrorKind::UsageError, "--eval must be in-sample or holdout");
      }
      const SweepResult r = sweep(prep.x, data.y, so);
      all.rows.insert(all.rows.end(), r.rows.begin(), r.rows.end());
    }
    std::stable_sort(all.rows.begin(), all.rows.end(), [](const SweepRow& a, const SweepRow& b) {
      return a.method != b.method ? a.method < b.method : a.m < b.m;
    });
    csv << "method,m,h,lse,wall_time_ms\n";
    append_rows(csv, all, o, std::nullopt);
    const std::string summary = summary_table(best_rows(all));
    out << summary;
    if (run.active()) {
      run.write_text("results.csv", csv.str());
      run.write_text("summary.txt", summary);
    }
  }
  run.manifest()["eval"] = o.eval;
  run.finish();
  if (run.active()) out << "wrote " << run.dir().string() << '\n';
  return kSuccess;
}

// ---------------------------------------------------------------- simulate

LatentModelSpec spec_from_json(const json& j) {
  LatentModelSpec spec;
  for (const auto& k : j.at("source_kinds")) {
    const std::string kind = k.get<std::string>();
    if (kind == "uniform01") spec.source_kinds.push_back(SourceKind::Uniform01);
    else if (kind == "exp-mean1") spec.source_kinds.push_back(SourceKind::ExpMean1);
    else if (kind == "std-gaussian") spec.source_kinds.push_back(SourceKind::StdGaussian);
    else fail(ErrorKind::SchemaError, "unknown source kind '" + kind + "'");
  }
  auto matrix = [](const json& rows) {
    Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows.at(0).size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows.at(i).size() != static_cast<std::size_t>(m.cols())) fail(ErrorKind::SchemaError, "ragged matrix in spec");
      for (std::size_t c = 0; c < rows.at(i).size(); ++c)
        m(static_cast<Index>(i), static_cast<Index>(c)) = rows.at(i).at(c).get<double>();
    }
    return m;
  };
  spec.p_matrix = matrix(j.at("p_matrix"));
  spec.w_matrix = matrix(j.at("w_transpose")).transpose();
  spec.noise_scale = j.value("noise_scale", 0.5);
  spec.n_inert = j.value("n_inert", Index{0});
  if (j.contains("inert_law")) {
    const json& law = j.at("inert_law");
    spec.inert_law = InertLaw{law.value("scale", 0.5), law.value("mean", 1.5), law.value("sd", 1.0)};
  }
  spec.validate();
  return spec;
}

json spec_to_json(const LatentModelSpec& spec) {
  json kinds = json::array();
  for (SourceKind k : spec.source_kinds) kinds.push_back(std::string(to_string(k)));
  auto rows = [](const Matrix& m) {
    json out = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
      out.push_back(row);
    }
    return out;
  };
  return json{{"source_kinds", kinds},
              {"p_matrix", rows(spec.p_matrix)},
              {"w_transpose", rows(spec.w_matrix.transpose())},
              {"noise_scale", spec.noise_scale},
              {"n_inert", spec.n_inert},
              {"inert_law", {{"scale", spec.inert_law.scale}, {"mean", spec.inert_law.mean}, {"sd", spec.inert_law.sd}}}};
}

int cmd_simulate(const Options& o, std::ostream& out) {
  if (o.out_dir.empty()) fail(ErrorKind::UsageError, "simulate needs --out");
  if (o.replicates < 1) fail(ErrorKind::UsageError, "--replicates must be positive");
  if (o.example.empty() == o.spec_path.empty()) fail(ErrorKind::UsageError, "give exactly one of --example or --spec");

  LatentModelSpec spec;
  Index n = o.n_rows;
  if (!o.example.empty()) {
    if (o.example == "5.1.1") {
      spec = example_5_1_1_spec();
      if (n == 0) n = kExample511Rows;
    } else if (o.example == "5.1.2") {
      spec = example_5_1_2_spec();
      if (n == 0) n = kExample512Rows;
    } else {
      fail(ErrorKind::UsageError, "unknown example '" + o.example + "' (expected 5.1.1 or 5.1.2)");
    }
  } else {
    std::ifstream in(o.spec_path);
    if (!in) fail(ErrorKind::IngestError, "cannot open " + o.spec_path);
    json j;
    try {
      j = json::parse(in);
      spec = spec_from_json(j);
    } catch (const json::exception& e) {
      fail(ErrorKind::SchemaError, std::string("invalid latent model spec: ") + e.what());
    }
    if (n == 0) n = j.value("n", Index{0});
  }
  if (n < 1) fail(ErrorKind::UsageError, "sample size must be given with --n or in the spec");

  RunDir run(o.out_dir, "simulate", o);
  json reps = json::array();
  for (int rep = 0; rep < o.replicates; ++rep) {
    const std::uint64_t seed = replicate_seed(o.seed, rep);
    const SimulatedDataset ds = generate(spec, n, seed);
    char stem[32];
    std::snprintf(stem, sizeof(stem), "rep_%03d", rep);
    const std::string xf = std::string(stem) + "_x.csv";
    const std::string yf = std::string(stem) + "_y.csv";
    write_csv(run.path(xf), numbered_names("x", ds.x_raw.cols()), ds.x_raw);
    write_csv(run.path(yf), numbered_names("y", ds.y_raw.cols()), ds.y_raw);
    reps.push_back(json{{"replicate", rep}, {"seed", seed}, {"x", xf}, {"y", yf}});
  }
  run.manifest()["spec"] = spec_to_json(spec);
  run.manifest()["n"] = n;
  run.manifest()["informative_columns"] = numbered_names("x", spec.n_informative());
  run.manifest()["replicates"] = reps;
  run.finish();
  out << "wrote " << o.replicates << " replicate(s) to " << run.dir().string() << '\n';
  return kSuccess;
}

// ---------------------------------------------------------------- bench

int cmd_bench(const Options& o, std::ostream& out) {
  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point t) {
    return std::chrono::duration<double, std::milli>(clock::now() - t).count();
  };
  std::vector<std::pair<std::string, double>> rows;

  {
    const SimulatedDataset ds = example_5_1_1(o.seed);
    const CenteredMatrix x = center_columns(ds.x_raw);
    const CenteredMatrix y = center_columns(ds.y_raw);
    auto t = clock::now();
    (void)rank_with_scheme(x, y, Scheme::B1);
    rows.emplace_back("rank-b1 172x13", ms_since(t));
    SweepOptions so;
    so.methods = {Method::Knb1PcH, Method::Knb2PcH, Method::BhptPcH, Method::BhptPc1};
    so.m_min = 2;
    so.m_max = 13;
    so.seed = o.seed;
    so.selector = selector_options(o);
    t = clock::now();
    (void)sweep(x, ds.y_raw, so);
    rows.emplace_back("sweep example 5.1.1 (4 methods, m=2..13)", ms_since(t));
  }
  {
    const SimulatedDataset ds = example_5_1_2(o.seed);
    const CenteredMatrix x = center_columns(ds.x_raw);
    const CenteredMatrix y = center_columns(ds.y_raw);
    const RankingResult r = rank_with_scheme(x, y, Scheme::B2);
    const RankedSubset sub = take_ranked_subset(x, r, 50);
    DimensionOptions d = selector_options(o);
    auto t = clock::now();
    (void)select_dimension(sub.x, d);
    rows.emplace_back("select-dim example 5.1.2, m=50", ms_since(t));
  }
  {
    const Index n = 78;
    const Index p = 24481;
    RandomStream rng(derive_seed(o.seed, {hash_tag("bench-tau")}));
    Matrix raw(n, p);
    for (Index j = 0; j < p; ++j)
      for (Index i = 0; i < n; ++i) raw(i, j) = rng.normal();
    Matrix y(n, 1);
    for (Index i = 0; i < n; ++i) y(i, 0) = raw(i, 0) + rng.normal();
    const CenteredMatrix x = center_columns(raw);
    auto t = clock::now();
    (void)tau_prerank(x, center_columns(y), TauRankConfig{});
    rows.emplace_back("tau-prerank 78x24481 (L=5, s=5000, tau=200)", ms_since(t));
  }

  std::ostringstream csv;
  csv << "stage,wall_time_ms\n";
  for (const auto& [name, ms] : rows) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", ms);
    csv << name << ',' << buf << '\n';
  }
  out << csv.str();
  if (!o.out_dir.empty()) {
    RunDir run(o.out_dir, "bench", o);
    run.write_text("bench.csv", csv.str());
    run.finish();
  }
  return kSuccess;
}

void add_data_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--x", o.x_path, "Predictor CSV (header row required)");
  cmd->add_option("--y", o.y_path, "Response CSV (header row required)");
  cmd->add_option("--method", o.method, "knb1-pcH | knb2-pcH | bhpt-pcH | bhpt-pc1 | nr-pcH");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--tau-prerank", o.tau_prerank, "Preliminary ranking L,s,tau");
  cmd->add_option("--tau-shuffle-seed", o.tau_shuffle, "Shuffle columns before the tau partition")
      ->each([&o](const std::string&) { o.tau_shuffle_set = true; });
  cmd->add_option("--out", o.out_dir, "Output directory; each run gets its own subdirectory");
}

void add_selector_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--ub-table", o.ub_table, "Two-column table (k value) overriding the bias adjustment");
  cmd->add_option("--restarts", o.restarts, "Random restarts of the kurtosis search")->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-iter", o.max_iter, "Iterations per kurtosis run")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", o.tol, "Direction-change tolerance of the kurtosis search")->check(CLI::PositiveNumber);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Supervised principal-component regression with kurtosis-based dimension selection", "spcr"};
  app.set_config("--config", "", "TOML/INI configuration file (flags override it)");
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Options o;
  CLI::App* rank = app.add_subcommand("rank", "Rank variables and print them with their scores");
  add_data_flags(rank, o);
  rank->add_option("--top", o.top, "Number of ranked variables to print");
  rank->add_option("--overlap", o.overlap, "Report percentage overlap of the top-K lists of each scheme");

  CLI::App* select = app.add_subcommand("select-dim", "Select the number of components H(m)");
  add_data_flags(select, o);
  add_selector_flags(select, o);
  select->add_option("--m", o.m, "Number of ranked variables")->required();

  CLI::App* fitc = app.add_subcommand("fit", "Fit a PCR model and save it");
  add_data_flags(fitc, o);
  add_selector_flags(fitc, o);
  fitc->add_option("--m", o.m, "Number of ranked variables")->required();
  fitc->add_option("--h", o.h, "auto or a fixed number of components");
  fitc->add_option("--model", o.model_path, "Model file to write");

  CLI::App* pred = app.add_subcommand("predict", "Apply a saved model to new predictor data");
  pred->add_option("--model", o.model_path, "Model file")->required();
  pred->add_option("--x", o.x_path, "Predictor CSV with the model's column names")->required();
  pred->add_option("--out", o.out_dir, "Output directory");

  CLI::App* sw = app.add_subcommand("sweep", "LSE over a range of m for one or more methods");
  add_data_flags(sw, o);
  add_selector_flags(sw, o);
  sw->add_option("--m-range", o.m_range, "A..B");
  sw->add_option("--eval", o.eval, "in-sample | holdout");
  sw->add_option("--holdout-x", o.holdout_x, "Holdout predictor CSV");
  sw->add_option("--holdout-y", o.holdout_y, "Holdout response CSV");
  sw->add_option("--example", o.example, "Use simulated replicates of example 5.1.1 or 5.1.2 instead of --x/--y");
  sw->add_option("--replicates", o.replicates, "Number of simulated replicates");
  sw->add_flag("--timing", o.timing, "Record wall time per row (makes results non-reproducible)");

  CLI::App* sim = app.add_subcommand("simulate", "Write simulated datasets from the latent model");
  sim->add_option("--example", o.example, "5.1.1 or 5.1.2");
  sim->add_option("--spec", o.spec_path, "Latent model spec (JSON)");
  sim->add_option("--replicates", o.replicates, "Number of datasets");
  sim->add_option("--n", o.n_rows, "Rows per dataset (defaults to the example's N)");
  sim->add_option("--seed", o.seed, "RNG seed");
  sim->add_option("--out", o.out_dir, "Output directory")->required();

  CLI::App* bench = app.add_subcommand("bench", "Time the main pipeline stages");
  bench->add_option("--seed", o.seed, "RNG seed");
  bench->add_option("--restarts", o.restarts, "Random restarts of the kurtosis search");
  bench->add_option("--out", o.out_dir, "Output directory");

  std::vector<std::string> argv_store{"spcr"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (rank->parsed()) return cmd_rank(o, out);
    if (select->parsed()) return cmd_select_dim(o, out);
    if (fitc->parsed()) return cmd_fit(o, out);
    if (pred->parsed()) return cmd_predict(o, out);
    if (sw->parsed()) return cmd_sweep(o, out);
    if (sim->parsed()) return cmd_simulate(o, out);
    if (bench->parsed()) return cmd_bench(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIngest;
  }
  return kUsage;
}

}  // namespace spcr::cli
