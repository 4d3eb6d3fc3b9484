#include "cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "cascdc/cascdc.hpp"

namespace cascdc::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string sha256_file(const std::string& path) {
  const std::string bytes = io::read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 || EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw NumericalError("sha256 failed for " + path);
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::optional<std::string> k;
  std::optional<double> eps;
  std::optional<int> kernel_order;
  std::optional<double> quantile;
  std::optional<int> threads;
  bool verbose = false;
  std::vector<std::string> sets;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "key = value configuration file");
  sub->add_option("--seed", c.seed, "root random seed");
  sub->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
  sub->add_option("--k", c.k, "number of groups, or 'auto'");
  sub->add_option("--eps", c.eps, "k-means approximation slack");
  sub->add_option("--kernel-order", c.kernel_order, "kernel order l");
  sub->add_option("--quantile", c.quantile, "backtest leg fraction");
  sub->add_option("--threads", c.threads, "worker threads (0 = all cores)");
  sub->add_flag("--verbose,-v", c.verbose, "progress and diagnostics on stderr");
  sub->add_option("--set", c.sets, "override a config key: key=value")->take_all();
}

Config effective_config(const Common& c) {
  Config cfg = c.config_path.empty() ? Config() : Config::load(c.config_path);
  if (c.seed) cfg.set("seed", std::to_string(*c.seed));
  if (c.k) cfg.set("k", *c.k);
  if (c.eps) cfg.set("eps", io::format_double(*c.eps));
  if (c.kernel_order) cfg.set("kernel_order", std::to_string(*c.kernel_order));
  if (c.quantile) cfg.set("quantile", io::format_double(*c.quantile));
  if (c.threads) cfg.set("threads", std::to_string(*c.threads));
  for (const std::string& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  return cfg;
}

/// Tracks files read and written and produces the run manifest.
class Run {
 public:
  Run(std::string command, std::vector<std::string> argv, const Common& common, std::ostream& err)
      : command_(std::move(command)), argv_(std::move(argv)), common_(common), err_(err), start_(std::chrono::steady_clock::now()) {
    out_dir_ = common.out_dir;
    if (!common.config_path.empty()) input(common.config_path);
  }

  void input(const fs::path& p) {
    if (!fs::exists(p)) throw IngestError(p.string() + ": no such file");
    inputs_.push_back(p);
  }

  void write(const std::string& name, const std::string& body) {
    io::write_text(out_dir_ / name, body);
    outputs_.push_back(name);
  }

  void write_network(const DynamicNetwork& net) {
    for (const std::string& f : io::write_network(out_dir_ / "network.json", net)) outputs_.push_back(f);
  }

  void log(const std::string& msg) const {
    if (common_.verbose) err_ << "[" << command_ << "] " << msg << "\n";
  }
  void warn(const std::string& msg) const { err_ << "warning: " << msg << "\n"; }

  json& results() { return results_; }
  const fs::path& out_dir() const { return out_dir_; }

  void finish(const Config& cfg) {
    json m;
    m["command"] = command_;
    m["argv"] = argv_;
    m["cwd"] = fs::current_path().string();
    m["config"] = cfg.values();
    m["seed"] = cfg.get_int("seed", 1);
    json ins = json::array();
    for (const fs::path& p : inputs_) ins.push_back({{"path", p.string()}, {"sha256", sha256_file(p.string())}});
    m["inputs"] = ins;
    json outs = json::array();
    for (const std::string& o : outputs_) outs.push_back({{"path", o}, {"sha256", sha256_file((out_dir_ / o).string())}});
    m["outputs"] = outs;
    if (!results_.is_null()) m["results"] = results_;
    m["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m["version"] = CASCDC_VERSION;
    io::write_text(out_dir_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  const Common& common_;
  std::ostream& err_;
  std::chrono::steady_clock::time_point start_;
  fs::path out_dir_;
  std::vector<fs::path> inputs_;
  std::vector<std::string> outputs_;
  json results_;
};

void reject_unused(const Config& cfg, std::initializer_list<const char*> generic) {
  std::vector<std::string> bad;
  for (const std::string& k : cfg.unused()) {
    bool ok = false;
    for (const char* g : generic) ok = ok || k == g;
    if (!ok) bad.push_back(k);
  }
  if (bad.empty()) return;
  std::string msg = "unknown config key";
  msg += bad.size() > 1 ? "s:" : ":";
  for (const std::string& b : bad) msg += " '" + b + "'";
  throw ConfigError(msg);
}

// Keys shared by every command; silently accepted where unused.
constexpr std::initializer_list<const char*> kGeneric = {"seed", "threads", "k", "eps", "kernel_order", "quantile"};

ClusterOptions cluster_options(const Config& cfg) {
  ClusterOptions o;
  o.eps = cfg.get_double("eps", 0.01);
  o.kernel_order = static_cast<int>(cfg.get_int("kernel_order", 4));
  o.restarts = static_cast<int>(cfg.get_int("restarts", 20));
  o.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  o.r_max = static_cast<int>(cfg.get_int("r_max", -1));
  const std::string norm = cfg.get_string("norm", "spectral");
  if (norm == "spectral")
    o.norm = BandwidthNorm::Spectral;
  else if (norm == "frobenius")
    o.norm = BandwidthNorm::Frobenius;
  else
    throw ConfigError("config key 'norm': expected spectral or frobenius, got '" + norm + "'");
  if (o.eps < 0.0) throw ConfigError("config key 'eps': must be non-negative");
  if (o.kernel_order < 0) throw ConfigError("config key 'kernel_order': must be non-negative");
  return o;
}

SignificanceTest significance(const Config& cfg) {
  const std::string t = cfg.get_string("test", "t");
  if (t == "t") return SignificanceTest::PairedT;
  if (t == "newey-west") return SignificanceTest::NeweyWest;
  throw ConfigError("config key 'test': expected t or newey-west, got '" + t + "'");
}

// ---------------------------------------------------------------------------

int cmd_simulate(Run& run, const Config& cfg, std::ostream& out) {
  const std::string mode = cfg.get_string("mode", "sweep");
  const std::string deg = cfg.get_string("degree_mode", "uniform");
  const std::string cov = cfg.get_string("covariate_mode", "uniform");
  DegreeMode dm;
  if (deg == "uniform")
    dm = DegreeMode::Uniform;
  else if (deg == "power-law")
    dm = DegreeMode::PowerLaw;
  else
    throw ConfigError("config key 'degree_mode': expected uniform or power-law, got '" + deg + "'");
  CovariateMode cm;
  if (cov == "uniform")
    cm = CovariateMode::UniformNoise;
  else if (cov == "dummies")
    cm = CovariateMode::GroupDummies;
  else
    throw ConfigError("config key 'covariate_mode': expected uniform or dummies, got '" + cov + "'");
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  const int T = static_cast<int>(cfg.get_int("T", 10));
  const int K = static_cast<int>(cfg.get_int("k", 3));

  if (mode == "instance") {
    SimConfig sc;
    sc.N = static_cast<int>(cfg.get_int("N", 100));
    sc.T = T;
    sc.K = K;
    sc.churn = static_cast<int>(cfg.get_int("churn", 0));
    sc.degree_mode = dm;
    sc.covariate_mode = cm;
    sc.dummy_flip_probability = cfg.get_double("flip_probability", 0.0);
    sc.seed = seed;
    reject_unused(cfg, kGeneric);
    const BlockProbabilitySeries B = K == 3 ? BlockProbabilitySeries::reference_ramp(T)
                                            : BlockProbabilitySeries::linear_ramp(Matrix::Identity(K, K) * 0.6 + Matrix::Constant(K, K, 0.2), T);
    const SimulatedInstance inst = sample_dynamic_dcbm(sc, B);
    run.write_network(inst.network);
    run.write("membership_true.csv", io::membership_csv(inst.membership, inst.network.node_ids()));
    std::string body = "node_id";
    for (int j = 0; j < inst.covariates.cols(); ++j) {
      const auto& names = inst.covariates.names();
      body += "," + (static_cast<std::size_t>(j) < names.size() && !names[static_cast<std::size_t>(j)].empty() ? names[static_cast<std::size_t>(j)] : "x" + std::to_string(j + 1));
    }
    body += "\n";
    for (int i = 0; i < inst.covariates.rows(); ++i) {
      body += inst.network.node_ids()[static_cast<std::size_t>(i)];
      for (int j = 0; j < inst.covariates.cols(); ++j) body += "," + io::format_double(inst.covariates.values()(i, j));
      body += "\n";
    }
    run.write("covariates.csv", body);
    run.results()["clipped_probabilities"] = inst.clipped;
    if (inst.clipped > 0) run.warn(std::to_string(inst.clipped) + " edge probabilities clipped to 1");
    out << "wrote instance N=" << sc.N << " T=" << T << " K=" << K << " to " << run.out_dir().string() << "\n";
    return kOk;
  }
  if (mode != "sweep") throw ConfigError("config key 'mode': expected sweep or instance, got '" + mode + "'");

  SweepSpec spec;
  spec.seed = seed;
  spec.reps = static_cast<int>(cfg.get_int("reps", 100));
  spec.threads = static_cast<int>(cfg.get_int("threads", 1));
  spec.cluster = cluster_options(cfg);
  spec.degree_mode = dm;
  spec.covariate_mode = cm;
  spec.methods.clear();
  for (const std::string& m : cfg.get_list("methods", {"CASC-DC", "DSC-DC", "DSC-PZ", "DSC-Cw"})) spec.methods.push_back(parse_method(m));
  const std::string sweep = cfg.get_string("sweep", "nodes");
  if (sweep == "nodes") {
    const int lo = static_cast<int>(cfg.get_int("n_min", 10)), hi = static_cast<int>(cfg.get_int("n_max", 100)),
              step = static_cast<int>(cfg.get_int("n_step", 5));
    if (lo < K + 1 || hi < lo || step < 1) throw ConfigError("config keys 'n_min'/'n_max'/'n_step': need K < n_min <= n_max, n_step >= 1");
    spec.cells = node_sweep(lo, hi, step, T, K);
  } else if (sweep == "churn") {
    const int N = static_cast<int>(cfg.get_int("N", 100));
    if (N <= K) throw ConfigError("config key 'N': must exceed K");
    spec.cells = churn_sweep(N, T, K);
  } else {
    throw ConfigError("config key 'sweep': expected nodes or churn, got '" + sweep + "'");
  }
  reject_unused(cfg, kGeneric);
  run.log("running " + std::to_string(spec.cells.size()) + " cells x " + std::to_string(spec.reps) + " replicates");
  const std::vector<CellResult> res = run_sweep(spec);
  std::string body = "sweep,value,N,T,K,s,method,mean,stderr,sup_mean,reps\n";
  for (const CellResult& c : res)
    for (std::size_t m = 0; m < spec.methods.size(); ++m)
      body += sweep + "," + std::to_string(sweep == "nodes" ? c.cell.N : c.cell.churn) + "," + std::to_string(c.cell.N) + "," +
              std::to_string(c.cell.T) + "," + std::to_string(c.cell.K) + "," + std::to_string(c.cell.churn) + "," +
              method_name(spec.methods[m]) + "," + io::format_double(c.mean[m]) + "," + io::format_double(c.stderr_mean[m]) + "," +
              io::format_double(c.sup_mean[m]) + "," + std::to_string(spec.reps) + "\n";
  run.write("sweep.csv", body);
  out << "wrote " << (run.out_dir() / "sweep.csv").string() << "\n";
  return kOk;
}

CovariateMatrix read_covariates(const fs::path& p, const std::vector<std::string>& ids) {
  const std::string src = p.string();
  const io::CsvTable tab = io::parse_csv(io::read_text(p), src);
  const int cn = io::column_of(tab, {"node_id", "node"}, src);
  std::map<std::string, std::size_t> row_of;
  for (std::size_t r = 0; r < tab.rows.size(); ++r) row_of[tab.rows[r][static_cast<std::size_t>(cn)]] = r;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < tab.header.size(); ++c)
    if (static_cast<int>(c) != cn) cols.push_back(c);
  Matrix x(static_cast<Index>(ids.size()), static_cast<Index>(cols.size()));
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = row_of.find(ids[i]);
    if (it == row_of.end()) {
      missing.push_back(ids[i]);
      continue;
    }
    for (std::size_t c = 0; c < cols.size(); ++c)
      x(static_cast<Index>(i), static_cast<Index>(c)) = io::parse_double(tab.rows[it->second][cols[c]], io::where(src, tab, it->second, cols[c]));
  }
  if (!missing.empty()) {
    std::string msg = src + ": covariates missing for:";
    for (const std::string& m : missing) msg += " " + m;
    throw IngestError(msg);
  }
  return CovariateMatrix::continuous(std::move(x));
}

struct ClusterInputs {
  std::string returns, attributes, network, covariates;
};

int cmd_cluster(Run& run, const Config& cfg, const ClusterInputs& in, std::ostream& out) {
  if (in.returns.empty() == in.network.empty()) throw ConfigError("cluster: give exactly one of --returns or --network");
  ClusterOptions opt = cluster_options(cfg);
  DynamicNetwork net;
  CovariateMatrix x;
  bool have_covariates = false;
  std::vector<std::string> period_labels;
  if (!in.returns.empty()) {
    run.input(in.returns);
    ReturnPanel panel = io::read_panel(in.returns);
    panel.fill_gaps();
    if (!panel.filled.empty()) run.warn(std::to_string(panel.filled.size()) + " interior return gaps filled with 0");
    ReturnNetworkConfig rc;
    rc.window = static_cast<int>(cfg.get_int("window", kMinimumWindow));
    rc.step = static_cast<int>(cfg.get_int("step", 1));
    const std::string wm = cfg.get_string("window_mode", "rolling");
    if (wm == "rolling")
      rc.mode = WindowMode::Rolling;
    else if (wm == "expanding")
      rc.mode = WindowMode::Expanding;
    else
      throw ConfigError("config key 'window_mode': expected rolling or expanding, got '" + wm + "'");
    const std::string sym = cfg.get_string("symmetrization", "or");
    if (sym == "or")
      rc.symmetrization = Symmetrization::Or;
    else if (sym == "and")
      rc.symmetrization = Symmetrization::And;
    else
      throw ConfigError("config key 'symmetrization': expected or/and, got '" + sym + "'");
    const std::string rule = cfg.get_string("lambda_rule", "bic");
    if (rule == "bic")
      rc.fit.lasso.rule = lasso::LambdaRule::BIC;
    else if (rule == "cv")
      rc.fit.lasso.rule = lasso::LambdaRule::CrossValidation;
    else
      throw ConfigError("config key 'lambda_rule': expected bic or cv, got '" + rule + "'");
    run.log("estimating return network over " + std::to_string(panel.days()) + " days, " + std::to_string(panel.size()) + " assets");
    ReturnNetwork rn = return_network(panel, rc);
    if (!rn.failed_fits.empty()) run.warn(std::to_string(rn.failed_fits.size()) + " asset-period fits failed; those nodes are isolated");
    net = std::move(rn.network);
    period_labels = rn.period_end_dates;
    if (!in.attributes.empty()) {
      run.input(in.attributes);
      x = covariate_dummies(io::align_attributes(io::read_attributes(in.attributes), net.node_ids()));
      have_covariates = x.cols() > 0;
    }
    run.write_network(net);
  } else {
    const io::LoadedNetwork ln = io::read_network(in.network);
    for (const fs::path& p : ln.files_read) run.input(p);
    net = ln.network;
    if (!in.covariates.empty()) {
      run.input(in.covariates);
      x = read_covariates(in.covariates, net.node_ids());
      have_covariates = x.cols() > 0;
    }
  }
  if (!have_covariates) {
    x = CovariateMatrix::none(net.nodes());
    if (in.attributes.empty() && in.covariates.empty()) run.warn("no covariates supplied; clustering the network alone");
  }

  const std::string k_text = cfg.get_string("k", "3");
  if (k_text == "auto") {
    const int k_max = static_cast<int>(cfg.get_int("k_max", std::min(8, net.nodes() - 1)));
    const int folds = static_cast<int>(cfg.get_int("folds", 5));
    std::vector<int> range;
    for (int k = 1; k <= k_max; ++k) range.push_back(k);
    const SimilaritySeries pilot = build_series(net, x, 1, false);
    const SelectKResult sk = select_k(pilot, range, folds, SeedStream(opt.seed).child("select-k").seed());
    opt.K = sk.K;
    std::string body = "k,cv_error\n";
    for (std::size_t c = 0; c < sk.candidates.size(); ++c) body += std::to_string(sk.candidates[c]) + "," + io::format_double(sk.scores[c]) + "\n";
    run.write("select_k.csv", body);
    run.log("selected K=" + std::to_string(opt.K));
  } else {
    try {
      std::size_t used = 0;
      opt.K = std::stoi(k_text, &used);
      if (used != k_text.size()) throw std::invalid_argument(k_text);
    } catch (const std::exception&) {
      throw ConfigError("config key 'k': expected an integer or 'auto', got '" + k_text + "'");
    }
  }
  if (opt.K < 1 || opt.K > net.nodes()) throw ConfigError("config key 'k': need 1 <= K <= N");
  reject_unused(cfg, kGeneric);

  const DynamicClustering dc = have_covariates ? casc_dc(net, x, opt) : dsc_pz_baseline(net, opt);
  for (int t = 0; t < net.periods(); ++t)
    if (dc.failed[static_cast<std::size_t>(t)]) run.warn("period " + std::to_string(t + 1) + " fell back to a single group: " + dc.errors[static_cast<std::size_t>(t)]);
  run.write("membership.csv", io::membership_csv(dc.membership, net.node_ids()));
  run.write("diagnostics.csv", io::diagnostics_csv(dc.alphas, dc.r_hat));
  std::string sizes = "t,group,size\n";
  for (int t = 0; t < dc.membership.periods(); ++t) {
    const std::vector<int> gs = dc.membership.group_sizes(t);
    for (std::size_t g = 0; g < gs.size(); ++g) sizes += std::to_string(t + 1) + "," + std::to_string(g + 1) + "," + std::to_string(gs[g]) + "\n";
  }
  run.write("group_sizes.csv", sizes);
  if (!period_labels.empty()) {
    std::string body = "t,end_date\n";
    for (std::size_t t = 0; t < period_labels.size(); ++t) body += std::to_string(t + 1) + "," + period_labels[t] + "\n";
    run.write("periods.csv", body);
  }
  json& r = run.results();
  r["K"] = opt.K;
  r["eps"] = opt.eps;
  r["kernel_order"] = opt.kernel_order;
  r["r_hat"] = dc.r_hat;
  r["alpha"] = dc.alphas;
  r["covariates"] = have_covariates;
  out << "clustered N=" << net.nodes() << " T=" << net.periods() << " into K=" << opt.K << " groups; wrote "
      << (run.out_dir() / "membership.csv").string() << "\n";
  return kOk;
}

int cmd_analyze(Run& run, const Config& cfg, const std::string& network, const std::string& membership, const std::string& attributes,
                std::ostream& out) {
  if (network.empty() || membership.empty()) throw ConfigError("analyze: --network and --membership are required");
  const SignificanceTest test = significance(cfg);
  reject_unused(cfg, kGeneric);
  const io::LoadedNetwork ln = io::read_network(network);
  for (const fs::path& p : ln.files_read) run.input(p);
  run.input(membership);
  const io::LoadedMembership lm = io::read_membership(membership, &ln.network.node_ids());
  MembershipSeries z = lm.membership;
  if (z.periods() == 1 && ln.network.periods() > 1) z = MembershipSeries::constant(z.at(0), z.groups(), ln.network.periods());
  if (z.periods() != ln.network.periods())
    throw IngestError(membership + ": " + std::to_string(z.periods()) + " periods, network has " + std::to_string(ln.network.periods()));
  const auto rows = group_connections(ln.network, z, test);
  for (const GroupConnection& g : rows)
    if (g.cross_undefined) run.warn("group " + std::to_string(g.group + 1) + " spans every node in some period; cross connection undefined");
  run.write("connections.csv", io::connections_csv(rows));
  if (!attributes.empty()) {
    run.input(attributes);
    const ContractAttributes attrs = io::align_attributes(io::read_attributes(attributes), ln.network.node_ids());
    const Labels& last = z.at(z.periods() - 1);
    run.write("centrality.csv", io::centrality_csv(group_centrality(contract_adjacency(attrs), last, z.groups())));
  }
  out << "wrote " << (run.out_dir() / "connections.csv").string() << "\n";
  return kOk;
}

int cmd_backtest(Run& run, const Config& cfg, const std::string& returns, const std::string& membership, const std::string& from,
                 const std::string& to, std::ostream& out) {
  if (returns.empty() || membership.empty()) throw ConfigError("backtest: --returns and --membership are required");
  BacktestConfig bc;
  bc.quantile = cfg.get_double("quantile", 0.2);
  const std::string mode = cfg.get_string("leg_mode", "quantile");
  if (mode == "quantile")
    bc.mode = LegMode::Quantile;
  else if (mode == "single")
    bc.mode = LegMode::SingleAsset;
  else
    throw ConfigError("config key 'leg_mode': expected quantile or single, got '" + mode + "'");
  const SignificanceTest test = significance(cfg);
  reject_unused(cfg, kGeneric);
  run.input(returns);
  run.input(membership);
  const ReturnPanel panel = io::read_panel(returns);
  const io::LoadedMembership lm = io::read_membership(membership, &panel.assets);
  const Labels& labels = lm.membership.at(lm.membership.periods() - 1);
  if (!from.empty()) {
    bc.first_day = panel.date_index(from);
    if (bc.first_day < 0) throw RangeError("backtest: --from " + from + " is not a panel date");
    if (bc.first_day == 0) throw RangeError("backtest: --from " + from + " has no previous trading day in the panel");
  }
  if (!to.empty()) {
    bc.last_day = panel.date_index(to);
    if (bc.last_day < 0) throw RangeError("backtest: --to " + to + " is not a panel date");
  }
  if (bc.last_day >= 0 && bc.last_day < bc.first_day) throw ConfigError("backtest: empty date range");
  std::vector<BacktestResult> groups;
  for (int g = 0; g < lm.membership.groups(); ++g) {
    groups.push_back(contrarian_backtest(panel, labels, g, bc));
    if (groups.back().widened) run.warn("group " + std::to_string(g + 1) + " has fewer than 2/q assets; legs hold one asset");
  }
  const BacktestResult all = contrarian_backtest(panel, labels, -1, bc);
  std::vector<BacktestResult> series = groups;
  series.push_back(all);
  run.write("backtest.csv", io::backtest_csv(series));
  run.write("spreads.csv", io::spreads_csv(spread_statistics(groups, test)));
  std::string summary = "group,days,mean_daily,cumulative,widened\n";
  for (const BacktestResult& r : series) {
    const double mean = r.daily.empty() ? 0.0 : std::accumulate(r.daily.begin(), r.daily.end(), 0.0) / static_cast<double>(r.daily.size());
    summary += (r.group < 0 ? std::string("All") : std::to_string(r.group + 1)) + "," + std::to_string(r.daily.size()) + "," +
               io::format_double(mean) + "," + io::format_double(r.cumulative.empty() ? 0.0 : r.cumulative.back()) + "," +
               (r.widened ? "1" : "0") + "\n";
  }
  run.write("summary.csv", summary);
  out << "wrote " << (run.out_dir() / "backtest.csv").string() << "\n";
  return kOk;
}

int cmd_bound(Run& run, const Config& cfg, std::ostream& out) {
  BoundParams p;
  auto need = [&](const char* key) {
    if (!cfg.has(key)) throw ConfigError("bound: missing parameter '" + std::string(key) + "'");
    return cfg.get_double(key, 0.0);
  };
  p.N = need("N");
  p.T = need("T");
  p.K = cfg.has("K") ? need("K") : need("k");
  p.r = need("r");
  p.s = need("s");
  p.P_max = need("P_max");
  p.delta_min = need("delta_min");
  p.lambda_K_max = need("lambda");
  p.m_z = need("m_z");
  p.W_max = need("W_max");
  p.c_w = need("c_w");
  p.eps = need("eps");
  p.L = need("L");
  p.beta = need("beta");
  p.l = static_cast<int>(cfg.has("l") ? cfg.get_int("l", 0) : cfg.get_int("kernel_order", 4));
  p.confidence = need("confidence");
  reject_unused(cfg, kGeneric);
  const BoundValue v = theorem1_bound(p);
  json j;
  j["value"] = v.value;
  j["vacuous"] = v.vacuous;
  run.write("bound.json", j.dump(2) + "\n");
  run.results() = j;
  out << io::format_double(v.value) << (v.vacuous ? " (vacuous: >= 1)" : "") << "\n";
  return kOk;
}

int cmd_replay(const std::string& manifest_path, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  json m;
  try {
    m = json::parse(io::read_text(manifest_path));
  } catch (const json::exception& e) {
    throw IngestError(manifest_path + ": " + e.what());
  }
  const fs::path cwd = m.at("cwd").get<std::string>();
  const fs::path here = fs::current_path();
  const fs::path manifest_dir = fs::absolute(manifest_path).parent_path();
  const fs::path target = out_dir.empty() ? manifest_dir / "replay" : fs::absolute(out_dir);
  fs::current_path(cwd);
  struct Restore {
    fs::path p;
    ~Restore() { fs::current_path(p); }
  } restore{here};
  std::vector<std::string> mismatched_inputs;
  for (const json& in : m.at("inputs"))
    if (sha256_file(in.at("path").get<std::string>()) != in.at("sha256").get<std::string>()) mismatched_inputs.push_back(in.at("path").get<std::string>());
  if (!mismatched_inputs.empty()) {
    std::string msg = "replay: inputs changed since the recorded run:";
    for (const std::string& s : mismatched_inputs) msg += " " + s;
    throw IngestError(msg);
  }
  std::vector<std::string> args = m.at("argv").get<std::vector<std::string>>();
  bool replaced = false;
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--out-dir") {
      args[i + 1] = target.string();
      replaced = true;
    }
  if (!replaced) {
    args.push_back("--out-dir");
    args.push_back(target.string());
  }
  std::ostringstream sink;
  const int code = run(args, sink, err);
  if (code != kOk) return code;
  int differ = 0;
  for (const json& o : m.at("outputs")) {
    const std::string rel = o.at("path").get<std::string>();
    const fs::path p = target / rel;
    const bool same = fs::exists(p) && sha256_file(p.string()) == o.at("sha256").get<std::string>();
    if (!same) {
      ++differ;
      err << "differs: " << rel << "\n";
    }
  }
  if (differ > 0) {
    err << "replay: " << differ << " output(s) differ\n";
    return kNumerical;
  }
  out << "replay identical: " << m.at("outputs").size() << " output(s) in " << target.string() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic covariate-assisted spectral clustering"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CASCDC_VERSION);
  Common common;
  ClusterInputs ci;
  std::string an_network, an_membership, an_attributes;
  std::string bt_returns, bt_membership, bt_from, bt_to;
  std::string rp_manifest, rp_out;

  CLI::App* simulate = app.add_subcommand("simulate", "simulation sweeps or a single simulated instance");
  add_common(simulate, common);
  CLI::App* cluster = app.add_subcommand("cluster", "cluster a return panel or a stored network");
  add_common(cluster, common);
  cluster->add_option("--returns", ci.returns, "returns CSV (date,asset_1,...)");
  cluster->add_option("--attributes", ci.attributes, "asset attributes JSON");
  cluster->add_option("--network", ci.network, "network JSON header");
  cluster->add_option("--covariates", ci.covariates, "covariates CSV (node_id,x1,...)");
  CLI::App* analyze = app.add_subcommand("analyze", "group connection and centrality tables");
  add_common(analyze, common);
  analyze->add_option("--network", an_network, "network JSON header")->required();
  analyze->add_option("--membership", an_membership, "membership CSV")->required();
  analyze->add_option("--attributes", an_attributes, "asset attributes JSON (group centrality)");
  CLI::App* backtest = app.add_subcommand("backtest", "daily contrarian strategy per group");
  add_common(backtest, common);
  backtest->add_option("--returns", bt_returns, "returns CSV")->required();
  backtest->add_option("--membership", bt_membership, "membership CSV (last period is used)")->required();
  backtest->add_option("--from", bt_from, "first trading date");
  backtest->add_option("--to", bt_to, "last trading date");
  CLI::App* bound = app.add_subcommand("bound", "evaluate the uniform misclustering bound");
  add_common(bound, common);
  CLI::App* replay = app.add_subcommand("replay", "re-run a manifest and compare outputs");
  replay->add_option("manifest", rp_manifest, "manifest.json of a previous run")->required();
  replay->add_option("--out-dir", rp_out, "where to write the replayed outputs (default: <run>/replay)");

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << CASCDC_VERSION << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (replay->parsed()) return cmd_replay(rp_manifest, rp_out, out, err);
    CLI::App* sub = app.get_subcommands().front();
    const Config cfg = effective_config(common);
    Run r(sub->get_name(), args, common, err);
    int code = kOk;
    if (sub == simulate) code = cmd_simulate(r, cfg, out);
    else if (sub == cluster) code = cmd_cluster(r, cfg, ci, out);
    else if (sub == analyze) code = cmd_analyze(r, cfg, an_network, an_membership, an_attributes, out);
    else if (sub == backtest) code = cmd_backtest(r, cfg, bt_returns, bt_membership, bt_from, bt_to, out);
    else if (sub == bound) code = cmd_bound(r, cfg, out);
    if (code == kOk) r.finish(cfg);
    return code;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const RangeError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IngestError& e) {
    err << "error: " << e.what() << "\n";
    return kIngest;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kIngest;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIngest;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIngest;
  }
}

}  // namespace cascdc::cli
