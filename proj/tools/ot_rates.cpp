// ot-rates: exact discrete OT solves and Monte-Carlo rate experiments.
// Exit codes: 0 ok, 1 usage, 2 numerical or I/O failure, 3 check FAIL.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "otrates/config.hpp"
#include "otrates/costs.hpp"
#include "otrates/diagnostics.hpp"
#include "otrates/duality.hpp"
#include "otrates/error.hpp"
#include "otrates/io.hpp"
#include "otrates/lowerbounds.hpp"
#include "otrates/measures.hpp"
#include "otrates/rates.hpp"
#include "otrates/rng.hpp"
#include "otrates/solver.hpp"

namespace fs = std::filesystem;
using namespace otrates;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CheckFailed {};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out_dir = ".";
  std::string format = "csv";
};

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Data files go through here so the manifest can list their digests.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
  void write(const std::string& name, const std::string& contents) {
    fs::create_directories(dir_);
    write_file_atomic(dir_ / name, contents);
    digests_[name] = digest_hex(contents);
  }
  void manifest(const std::string& subcommand, const json& resolved, std::uint64_t seed, const std::string& start) {
    json m;
    m["subcommand"] = subcommand;
    m["resolved_config"] = resolved;
    m["master_seed"] = seed;
    m["tool_version"] = kVersion;
    m["start"] = start;
    m["end"] = now_iso();
    m["outputs"] = digests_;
    fs::create_directories(dir_);
    write_file_atomic(dir_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::map<std::string, std::string> digests_;
};

int resolve_threads(const Globals& g, int from_config) {
  if (g.threads > 0) return g.threads;
  if (const char* env = std::getenv("OT_RATES_THREADS")) {
    const long long t = parse_int(env);
    if (t < 1) throw UsageError("OT_RATES_THREADS must be a positive integer");
    return static_cast<int>(t);
  }
  return from_config;
}

ResolvedConfig load_config(const Globals& g) {
  if (g.config.empty()) throw UsageError("this subcommand needs --config <file>");
  ResolvedConfig rc = parse_config(g.config);
  if (g.seed) {
    rc.experiment.master_seed = *g.seed;
    rc.values["seed"] = std::to_string(*g.seed);
  }
  rc.experiment.threads = resolve_threads(g, rc.experiment.threads);
  rc.values["threads"] = std::to_string(rc.experiment.threads);
  return rc;
}

json config_json(const ResolvedConfig& rc) { return json(rc.values); }

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_double(v[k]);
  return s;
}

Vec parse_vec(const std::string& text, int dim = 0) {
  Vec v;
  for (const auto& tok : split(text, ',')) v.push_back(parse_double(tok));
  if (dim > 1 && v.size() == 1) v.assign(dim, v[0]);
  if (dim > 0 && static_cast<int>(v.size()) != dim)
    throw UsageError("expected " + std::to_string(dim) + " coordinates in '" + text + "'");
  return v;
}

// ---- solve ----------------------------------------------------------------

struct SolveArgs {
  std::string a, b, cost, out, duals, method = "auto";
  bool weighted = false;
};

int run_solve(const Globals& g, const SolveArgs& s) {
  const std::string start = now_iso();
  const WeightedPoints a = read_points_csv(s.a, s.weighted), b = read_points_csv(s.b, s.weighted);
  if (a.points.empty() || b.points.empty()) throw UsageError("point files must not be empty");
  if (a.points.dim() != b.points.dim()) throw UsageError("point files have different dimensions");
  const CostSpec cost = parse_cost(s.cost, a.points.dim());

  std::string method = s.method;
  if (method == "auto") method = s.weighted ? "network" : "assignment";
  TransportPlan plan;
  if (method == "assignment" || method == "brute") {
    if (s.weighted) throw UsageError("--method " + method + " needs unweighted points");
    if (a.points.size() != b.points.size())
      throw UsageError("unweighted inputs need equal point counts (" + std::to_string(a.points.size()) + " vs " +
                       std::to_string(b.points.size()) + "); pass --weighted with a weight column");
    plan = method == "brute" ? brute_force(a.points, b.points, cost) : solve_assignment(a.points, b.points, cost);
  } else if (method == "network") {
    DiscreteMeasure mu = s.weighted ? DiscreteMeasure{a.points, a.weights} : DiscreteMeasure::uniform(a.points);
    DiscreteMeasure nu = s.weighted ? DiscreteMeasure{b.points, b.weights} : DiscreteMeasure::uniform(b.points);
    plan = solve_general(mu, nu, cost);
  } else {
    throw UsageError("unknown --method '" + method + "'");
  }

  std::cout << "value=" << format_double(plan.value) << "\n";
  std::cout << "method=" << to_string(plan.method) << "\n";
  if (!s.out.empty()) {
    std::ostringstream os;
    os << "i,j,mass\n";
    for (const auto& e : plan.entries) os << e.i << ',' << e.j << ',' << format_double(e.mass) << '\n';
    write_file_atomic(s.out, os.str());
  }
  if (!s.duals.empty()) {
    std::ostringstream os;
    os << "side,index,potential\n";
    for (std::size_t i = 0; i < plan.dual_mu.size(); ++i) os << "a," << i << ',' << format_double(plan.dual_mu[i]) << '\n';
    for (std::size_t j = 0; j < plan.dual_nu.size(); ++j) os << "b," << j << ',' << format_double(plan.dual_nu[j]) << '\n';
    write_file_atomic(s.duals, os.str());
  }
  (void)g;
  (void)start;
  return 0;
}

// ---- transform --------------------------------------------------------------

struct TransformArgs {
  std::string anchors, query, cost, out;
  std::optional<double> cap;
};

int run_transform(const Globals& g, const TransformArgs& t) {
  const WeightedPoints anchors = read_points_csv(t.anchors, true);
  const WeightedPoints query = read_points_csv(t.query, false);
  if (anchors.points.empty()) throw UsageError("anchor file is empty");
  if (query.points.dim() != anchors.points.dim()) throw UsageError("query and anchor dimensions differ");
  const CostSpec cost = parse_cost(t.cost, anchors.points.dim());
  PotentialHandle f(anchors.points, anchors.weights, cost, t.cap);
  const Vec values = f.evaluate(query.points, resolve_threads(g, 0));
  std::ostringstream os;
  const int d = query.points.dim();
  for (int k = 0; k < d; ++k) os << 'x' << (k + 1) << ',';
  os << "value\n";
  for (std::size_t q = 0; q < values.size(); ++q) {
    for (int k = 0; k < d; ++k) os << format_double(query.points[q][k]) << ',';
    os << format_double(values[q]) << '\n';
  }
  if (t.out.empty())
    std::cout << os.str();
  else
    write_file_atomic(t.out, os.str());
  return 0;
}

// ---- rate -------------------------------------------------------------------

std::string plot_script() {
  return "# gnuplot -p plot.gp\n"
         "set datafile separator ','\n"
         "set logscale xy\n"
         "set xlabel 'n'\n"
         "set ylabel 'delta_hat'\n"
         "set key top right\n"
         "plot 'summary.csv' every ::1 using 1:2:3 with yerrorlines title 'delta_hat', \\\n"
         "     'samples.csv' every ::1 using 1:4 with points pt 7 ps 0.3 title 'abs_error'\n";
}

int run_rate(const Globals& g) {
  const std::string start = now_iso();
  const ResolvedConfig rc = load_config(g);
  for (const auto& note : rc.experiment.pair.notes) std::cerr << "note: " << note << "\n";
  RateReport report = estimate_delta(rc.experiment);
  if (report.per_n.empty()) throw UsageError("empty grid; nothing to write");
  bool have_slope = true;
  for (const auto& row : report.per_n) have_slope = have_slope && row.delta_hat > 0.0;
  if (have_slope) {
    report = fit_slope(std::move(report), rc.bootstrap, rc.experiment.master_seed);
  } else {
    std::cerr << "note: delta_hat is zero somewhere on the grid; slope left undefined\n";
  }

  Outputs out(g.out_dir);
  out.write("samples.csv", samples_csv(report));
  out.write("summary.csv", summary_csv(report));
  std::ostringstream aux;
  aux << "n,signed_mean,failed\n";
  for (const auto& row : report.per_n) aux << row.n << ',' << format_double(row.signed_mean) << ',' << row.failed << '\n';
  out.write("signed.csv", aux.str());
  out.write("slope.txt", have_slope ? slope_txt(report)
                                    : "slope=nan\nci_lo=nan\nci_hi=nan\nB=" + std::to_string(rc.bootstrap) + "\n");
  out.write("plot.gp", plot_script());
  out.manifest("rate", config_json(rc), rc.experiment.master_seed, start);

  if (g.format == "text") {
    std::cout << "exact_value " << format_double(report.exact_value) << "\n";
    for (const auto& row : report.per_n)
      std::cout << "n=" << row.n << " delta_hat=" << format_double(row.delta_hat) << " se=" << format_double(row.se)
                << " reps=" << row.reps << "\n";
    if (have_slope)
      std::cout << "slope=" << format_double(*report.slope) << " ci=[" << format_double(report.slope_ci->first) << ", "
                << format_double(report.slope_ci->second) << "]\n";
  } else {
    std::cout << summary_csv(report);
    if (have_slope) std::cout << slope_txt(report);
  }
  return 0;
}

// ---- diagnose ---------------------------------------------------------------

struct PlanSample {
  PointCloud x, y;
  TransportPlan plan;
};

PlanSample sample_plan(const ExperimentConfig& ex, std::size_t n, std::uint64_t s) {
  PlanSample p;
  p.x = sample_points(ex.pair.mu, n, derive_seed({ex.master_seed, n, s, 0x64696167ull, 0}));
  p.y = sample_points(ex.pair.nu, n, derive_seed({ex.master_seed, n, s, 0x64696167ull, 1}));
  p.plan = solve_assignment(p.x, p.y, ex.pair.cost);
  return p;
}

double max_norm(const PointCloud& a, const PointCloud& b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, norm2(a[i]));
  for (std::size_t i = 0; i < b.size(); ++i) r = std::max(r, norm2(b[i]));
  return r;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

int run_diagnose(const Globals& g, const std::string& check) {
  const std::string start = now_iso();
  const ResolvedConfig rc = load_config(g);
  const ExperimentConfig& ex = rc.experiment;
  const CostSpec& cost = ex.pair.cost;
  std::vector<DiagnosticReport> reports;

  if (check == "semiconcavity") {
    for (int s = 0; s < rc.diag_seeds; ++s) {
      const PlanSample p = sample_plan(ex, rc.diag_n, static_cast<std::uint64_t>(s));
      // phi = conjugate of the target potential; the region is the ball holding both supports.
      const PotentialHandle phi(p.y, p.plan.dual_nu, cost);
      const double radius = std::max(max_norm(p.x, p.y), 1e-12);
      const double lambda = cost.lambda_on_ball(2.0 * radius);
      const Region region = Region::ball(Vec(cost.dim(), 0.0), radius);
      auto rep = semiconcavity_check(phi, lambda, region, rc.triples, derive_seed({ex.master_seed, 7, static_cast<std::uint64_t>(s)}), ex.threads);
      rep.midpoint.name += "[" + std::to_string(s) + "]";
      rep.lipschitz.name += "[" + std::to_string(s) + "]";
      reports.push_back(rep.midpoint);
      reports.push_back(rep.lipschitz);
    }
  } else if (check == "displacement") {
    json per_n = json::array();
    std::vector<double> medians;
    for (std::size_t n : ex.n_grid) {
      std::vector<double> maxima;
      for (int s = 0; s < rc.diag_seeds; ++s) {
        const PlanSample p = sample_plan(ex, n, static_cast<std::uint64_t>(s));
        maxima.push_back(displacement_profile(p.plan, p.x, p.y).max_ratio);
      }
      medians.push_back(median(maxima));
      per_n.push_back({{"n", n}, {"median_max_ratio", medians.back()}});
    }
    DiagnosticReport rep;
    rep.name = "displacement";
    rep.tolerance = 2.0;
    rep.max_violation = medians.back() / medians.front();
    rep.samples_used = static_cast<std::int64_t>(ex.n_grid.size()) * rc.diag_seeds;
    rep.pass = rep.max_violation <= rep.tolerance;
    rep.witness = {{"per_n", per_n}, {"statistic", "median max ratio at largest n / at smallest n"}};
    reports.push_back(rep);
  } else if (check == "superdiff") {
    for (int s = 0; s < rc.diag_seeds; ++s) {
      const PlanSample p = sample_plan(ex, rc.diag_n, static_cast<std::uint64_t>(s));
      const ExtendedPotentials ext = extend_potentials(p.plan, p.x, p.y, cost);
      const double bound = rc.superdiff_bound > 0.0 ? rc.superdiff_bound
                                                  : std::max(4.0, potential_bound_on_ball(ext.phi, rc.superdiff_radius));
      SuperdiffOptions opts;
      opts.seed = derive_seed({ex.master_seed, 9, static_cast<std::uint64_t>(s)});
      auto rep = superdiff_growth_check(ext.phi, rc.superdiff_radius, bound, cost.meta().growth_p, cost.meta().kappa, opts);
      rep.name += "[" + std::to_string(s) + "]";
      reports.push_back(rep);
    }
  } else {
    throw UsageError("unknown check '" + check + "' (expected semiconcavity, displacement or superdiff)");
  }

  std::string lines;
  bool all_pass = true;
  double worst = 0.0;
  for (const auto& r : reports) {
    lines += r.to_line() + "\n";
    all_pass = all_pass && r.pass;
    worst = std::max(worst, r.max_violation);
  }
  Outputs out(g.out_dir);
  out.write("diagnostics.jsonl", lines);
  json resolved = config_json(rc);
  resolved["check"] = check;
  out.manifest("diagnose", resolved, ex.master_seed, start);
  std::cout << (all_pass ? "PASS" : "FAIL") << " " << check << " reports=" << reports.size()
            << " max_violation=" << format_double(worst) << "\n";
  if (!all_pass) throw CheckFailed{};
  return 0;
}

// ---- lowerbound ---------------------------------------------------------------

struct LowerboundArgs {
  std::size_t m = 64;
  std::string q = "uniform", z0, cost;
  int seeds = 20;
  double radius = 0.5;
};

int run_lowerbound(const Globals& g, const LowerboundArgs& a) {
  const std::string start = now_iso();
  if (a.z0.empty()) throw UsageError("--z0 is required");
  if (a.seeds < 1) throw UsageError("--seeds must be positive");
  Vec z0 = parse_vec(a.z0);
  const CostSpec cost = parse_cost(a.cost, static_cast<int>(z0.size()));
  const QFamily family = QFamily::parse(a.q);
  const std::uint64_t base = g.seed.value_or(0);
  std::ostringstream os;
  os << "m,seed,tv,chi2,value_minus_h\n";
  for (int s = 0; s < a.seeds; ++s) {
    const std::uint64_t seed = base + static_cast<std::uint64_t>(s);
    const auto q = family.make(a.m, seed);
    const GadgetResult r = minimax_gadget(a.m, q, z0, cost, seed, GadgetGeometry{{}, a.radius});
    os << r.m << ',' << seed << ',' << format_double(r.tv) << ',' << format_double(r.chi2) << ','
       << format_double(r.value_minus_h) << '\n';
  }
  Outputs out(g.out_dir);
  out.write("gadget.csv", os.str());
  const json resolved = {{"m", a.m}, {"q", family.to_string()}, {"z0", join(z0)}, {"cost", cost.name()},
                         {"seeds", a.seeds}, {"radius", format_double(a.radius)}};
  out.manifest("lowerbound", resolved, base, start);
  if (g.format == "text") std::cout << os.str();
  return 0;
}

// ---- costcheck ----------------------------------------------------------------

struct CostcheckArgs {
  std::string cost, condition = "H0", region;
  int dim = 0;
  std::int64_t budget = 10000;
};

int run_costcheck(const Globals& g, const CostcheckArgs& a) {
  if (a.dim < 1) throw UsageError("--dim must be positive");
  const CostSpec cost = parse_cost(a.cost, a.dim);
  const Condition cond = parse_condition(a.condition);
  Region region = Region::ball(Vec(a.dim, 0.0), 1.0);
  if (!a.region.empty()) {
    const SamplerSpec s = parse_sampler(a.region);
    if (s.dim() != a.dim) throw UsageError("region dimension does not match --dim");
    if (s.kind == SamplerSpec::Kind::kUniformBall)
      region = Region::ball(s.center, s.extent);
    else if (s.kind == SamplerSpec::Kind::kUniformCube)
      region = Region::box(s.center, s.extent);
    else
      throw UsageError("region must be 'ball:c=..;r=..' or 'cube:c=..;h=..'");
  }
  const ConditionReport r = check_conditions(cost, cond, region, a.budget, g.seed.value_or(0));
  std::cout << (r.pass ? "PASS " : "FAIL ") << to_string(r.condition) << " cost=" << cost.name()
            << " max_violation=" << format_double(r.max_violation) << " tolerance=" << format_double(r.tolerance)
            << " trials=" << r.trials << "\n";
  std::cout << "detail: " << r.detail << "\n";
  for (const auto& w : r.witnesses) std::cout << "witness: " << join(w) << "\n";
  if (!r.pass) throw CheckFailed{};
  return 0;
}

std::string config_keys_help() {
  std::string s = "\nConfig keys ([experiment] section of --config):\n";
  for (const auto& k : config_registry()) {
    s += "  " + std::string(k.name);
    s += k.default_value ? " (default \"" + std::string(k.default_value) + "\")" : " (required)";
    s += ": " + std::string(k.help) + "\n";
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact discrete optimal transport and Monte-Carlo convergence-rate experiments"};
  app.footer(config_keys_help());
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed_value = 0;
  app.add_option("--config", g.config, "experiment config file (INI)");
  auto* seed_opt = app.add_option("--seed", seed_value, "master seed (overrides the config)");
  app.add_option("--threads", g.threads, "worker threads (fallback: OT_RATES_THREADS, then config)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--out-dir", g.out_dir, "directory for data files and manifest.json");
  app.add_option("--format", g.format, "stdout format")->check(CLI::IsMember({"csv", "text"}));

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "exact OT between two point files");
  solve->add_option("--points-a", solve_args.a, "source points x1,...,xd[,weight]")->required();
  solve->add_option("--points-b", solve_args.b, "target points x1,...,xd[,weight]")->required();
  solve->add_option("--cost", solve_args.cost, "cost, e.g. power:p=2,r=2")->required();
  solve->add_option("--out", solve_args.out, "plan CSV (i,j,mass)");
  solve->add_option("--duals", solve_args.duals, "potentials CSV (side,index,potential)");
  solve->add_flag("--weighted", solve_args.weighted, "last column of each file is a weight");
  solve->add_option("--method", solve_args.method, "auto|assignment|network|brute")
      ->check(CLI::IsMember({"auto", "assignment", "network", "brute"}));

  TransformArgs tr_args;
  auto* transform = app.add_subcommand("transform", "evaluate min_j { c(x, y_j) - lambda_j } at query points");
  transform->add_option("--anchors", tr_args.anchors, "anchors y1,...,yd,lambda")->required();
  transform->add_option("--query", tr_args.query, "query points x1,...,xd")->required();
  transform->add_option("--cost", tr_args.cost, "cost")->required();
  transform->add_option("--out", tr_args.out, "output CSV (x1,...,xd,value); stdout if omitted");
  double cap_value = 0.0;
  auto* cap_opt = transform->add_option("--cap", cap_value, "truncate values at this level");

  auto* rate = app.add_subcommand("rate", "Monte-Carlo estimate of the expected gap over the n grid");

  std::string check;
  auto* diagnose = app.add_subcommand("diagnose", "structural checks on solver potentials and plans");
  diagnose->add_option("--check", check, "semiconcavity|displacement|superdiff")
      ->required()
      ->check(CLI::IsMember({"semiconcavity", "displacement", "superdiff"}));

  LowerboundArgs lb_args;
  auto* lowerbound = app.add_subcommand("lowerbound", "packing / random-bijection gadget values");
  lowerbound->add_option("--m", lb_args.m, "number of atoms")->required()->check(CLI::PositiveNumber);
  lowerbound->add_option("--q", lb_args.q, "uniform | split:<tv> | spike:<mass> | dirichlet:<alpha>");
  lowerbound->add_option("--z0", lb_args.z0, "shift, comma separated (sets the dimension)")->required();
  lowerbound->add_option("--cost", lb_args.cost, "cost")->required();
  lowerbound->add_option("--seeds", lb_args.seeds, "number of seeds");
  lowerbound->add_option("--radius", lb_args.radius, "packing ball radius");

  CostcheckArgs cc_args;
  auto* costcheck = app.add_subcommand("costcheck", "sampled check of a cost condition");
  costcheck->add_option("--cost", cc_args.cost, "cost")->required();
  costcheck->add_option("--dim", cc_args.dim, "dimension")->required();
  costcheck->add_option("--condition", cc_args.condition, "H0|H1|H3|H4");
  costcheck->add_option("--region", cc_args.region, "ball:c=..;r=.. or cube:c=..;h=.. (default unit ball)");
  costcheck->add_option("--budget", cc_args.budget, "sampled trials");

  for (auto* sub : {solve, transform, rate, diagnose, lowerbound, costcheck}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (*seed_opt) g.seed = seed_value;
  if (*cap_opt) tr_args.cap = cap_value;

  try {
    if (*solve) return run_solve(g, solve_args);
    if (*transform) return run_transform(g, tr_args);
    if (*rate) return run_rate(g);
    if (*diagnose) return run_diagnose(g, check);
    if (*lowerbound) return run_lowerbound(g, lb_args);
    if (*costcheck) return run_costcheck(g, cc_args);
  } catch (const CheckFailed&) {
    return 3;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
