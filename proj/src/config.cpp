#include "otrates/config.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "otrates/error.hpp"
#include "otrates/io.hpp"

namespace otrates {

const std::vector<ConfigKey>& config_registry() {
  static const std::vector<ConfigKey> keys = {
      {"cost", nullptr, "cost family, \"power:p=<f>,r=<f>\" or \"smooth:p=<f>,eps=<f>\""},
      {"mu", nullptr, "source sampler, e.g. \"ball:c=0,0,0,0,0;r=0.25\" or \"gauss:m=0;d=5;cov=I\""},
      {"nu", "", "target sampler; may reference mu as \"translate:mu;z0=...\" (give nu or pair)"},
      {"pair", "", "closed-form pair instead of nu: \"location:z0=...\" or \"identical\""},
      {"n_grid", "128,256,512,1024,2048", "strictly increasing sample sizes"},
      {"reps", "100", "replications per n (>= 2)"},
      {"seed", "0", "master seed"},
      {"metric", "cost", "\"cost\" or \"wasserstein:p=<f>,delta0=<f>\""},
      {"threads", "0", "worker threads, 0 = OpenMP default"},
      {"bootstrap", "1000", "bootstrap resamples for slope intervals"},
      {"diag_n", "256", "sample size for diagnose semiconcavity/superdiff"},
      {"diag_seeds", "20", "seeds per n for diagnose displacement and plans per check"},
      {"triples", "10000", "midpoint triples for semiconcavity"},
      {"superdiff_radius", "8", "radius r for the superdifferential growth check (>= 4)"},
      {"superdiff_bound", "0", "bound R on |phi|; 0 = a certified bound from the cost and anchors"},
  };
  return keys;
}

namespace {

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string unquote(std::string_view v) {
  v = trim(v);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return std::string(trim(v));
}

std::optional<Vec> translation_between(const SamplerSpec& a, const SamplerSpec& b) {
  const SamplerSpec fa = a.flattened(), fb = b.flattened();
  if (fa.kind != fb.kind || fa.dim() != fb.dim() || fa.extent != fb.extent) return std::nullopt;
  if (fa.kind == SamplerSpec::Kind::kGaussian && fa.covariance.a != fb.covariance.a) return std::nullopt;
  Vec z(fa.dim());
  for (int k = 0; k < fa.dim(); ++k) z[k] = fb.center[k] - fa.center[k];
  return z;
}

bool is_quadratic(const CostSpec& c) {
  return c.family() == CostFamily::kPowerLr && c.p() == 2.0 && c.r() == 2.0;
}

std::string canonical_grid(const std::vector<std::size_t>& g) {
  std::string s;
  for (std::size_t k = 0; k < g.size(); ++k) s += (k ? "," : "") + std::to_string(g[k]);
  return s;
}

}  // namespace

std::string nearest_key(std::string_view key) {
  std::string best;
  std::size_t best_d = static_cast<std::size_t>(-1);
  for (const auto& k : config_registry()) {
    const std::size_t d = edit_distance(key, k.name);
    if (d < best_d) {
      best_d = d;
      best = k.name;
    }
  }
  return best;
}

ResolvedConfig parse_config_text(std::string_view text, const std::string& origin) {
  std::map<std::string, std::string> raw;
  std::map<std::string, int> line_of;
  bool in_section = false;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  auto where = [&](int ln) { return origin + ":" + std::to_string(ln) + ": "; };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#' || t.front() == ';') continue;
    if (t.front() == '[') {
      if (t != "[experiment]") throw UsageError(where(line_no) + "unknown section '" + std::string(t) + "' (expected [experiment])");
      if (in_section) throw UsageError(where(line_no) + "duplicate [experiment] section");
      in_section = true;
      continue;
    }
    if (!in_section) throw UsageError(where(line_no) + "key outside the [experiment] section");
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw UsageError(where(line_no) + "expected 'key = value'");
    const std::string key(trim(t.substr(0, eq)));
    const bool known = std::any_of(config_registry().begin(), config_registry().end(),
                                   [&](const ConfigKey& k) { return key == k.name; });
    if (!known)
      throw UsageError(where(line_no) + "unknown key '" + key + "' (did you mean '" + nearest_key(key) + "'?)");
    if (raw.count(key)) throw UsageError(where(line_no) + "duplicate key '" + key + "'");
    raw[key] = unquote(t.substr(eq + 1));
    line_of[key] = line_no;
  }
  if (!in_section) throw UsageError(origin + ": missing [experiment] section");
  for (const auto& k : config_registry()) {
    if (!k.default_value && (!raw.count(k.name) || raw[k.name].empty()))
      throw UsageError(origin + ": missing required key '" + std::string(k.name) + "'");
  }
  const bool has_nu = raw.count("nu") && !raw["nu"].empty();
  const bool has_pair = raw.count("pair") && !raw["pair"].empty();
  if (has_nu == has_pair) throw UsageError(origin + ": give exactly one of 'nu' and 'pair'");
  for (const auto& k : config_registry())
    if (!raw.count(k.name)) raw[k.name] = k.default_value;

  // Each value is parsed with its line number attached to any error.
  auto field = [&](const char* key, auto&& parse) {
    try {
      return parse(raw[key]);
    } catch (const UsageError& e) {
      const std::string at = line_of.count(key) ? where(line_of[key]) : origin + ": default for ";
      throw UsageError(at + "key '" + key + "': " + e.what());
    }
  };
  auto as_int = [](long long lo) {
    return [lo](const std::string& v) {
      const long long x = parse_int(v);
      if (x < lo) throw UsageError("must be at least " + std::to_string(lo));
      return x;
    };
  };
  auto as_real = [](const std::string& v) { return parse_double(v); };

  ResolvedConfig rc;
  auto& ex = rc.experiment;
  const SamplerSpec mu = field("mu", [](const std::string& v) { return parse_sampler(v); });
  const CostSpec cost = field("cost", [&](const std::string& v) { return parse_cost(v, mu.dim()); });
  if (has_pair) {
    ex.pair = field("pair", [&](const std::string& v) {
      if (v == "identical") return ground_truth_identical(mu, cost);
      const std::string prefix = "location:z0=";
      if (v.rfind(prefix, 0) != 0) throw UsageError("expected 'location:z0=<coords>' or 'identical'");
      Vec z0;
      for (const auto& tok : split(std::string_view(v).substr(prefix.size()), ',')) z0.push_back(parse_double(tok));
      if (z0.size() == 1 && mu.dim() > 1) z0.assign(mu.dim(), z0[0]);
      if (static_cast<int>(z0.size()) != mu.dim()) throw UsageError("z0 has the wrong dimension");
      return ground_truth_location(mu, z0, cost);
    });
  } else {
    ex.pair = field("nu", [&](const std::string& v) {
      const SamplerSpec nu = parse_sampler(v, [&](std::string_view ref) { return ref == "mu" ? &mu : nullptr; });
      if (nu.dim() != mu.dim()) throw UsageError("nu and mu have different dimensions");
      const SamplerSpec fm = mu.flattened(), fn = nu.flattened();
      if (fm.kind == SamplerSpec::Kind::kGaussian && fn.kind == SamplerSpec::Kind::kGaussian && is_quadratic(cost) &&
          !translation_between(mu, nu)) {
        return ground_truth_gaussian_w2(fm.center, fm.covariance, fn.center, fn.covariance);
      }
      const auto z0 = translation_between(mu, nu);
      if (!z0) throw UsageError("no closed-form transport cost for this (mu, nu, cost); use a translate of mu");
      GroundTruthPair p = ground_truth_location(mu, *z0, cost);
      p.nu = nu;
      if (std::all_of(z0->begin(), z0->end(), [](double t) { return t == 0.0; }))
        p.provenance = Provenance::kIdenticalPair;
      return p;
    });
  }
  ex.n_grid.clear();
  for (const auto& tok : split(raw["n_grid"], ','))
    ex.n_grid.push_back(static_cast<std::size_t>(field("n_grid", [&](const std::string&) { return as_int(1)(tok); })));
  ex.reps = static_cast<int>(field("reps", as_int(2)));
  ex.master_seed = static_cast<std::uint64_t>(field("seed", as_int(0)));
  ex.metric = field("metric", [](const std::string& v) { return Metric::parse(v); });
  ex.threads = static_cast<int>(field("threads", as_int(0)));
  rc.bootstrap = static_cast<int>(field("bootstrap", as_int(0)));
  rc.diag_n = static_cast<std::size_t>(field("diag_n", as_int(1)));
  rc.diag_seeds = static_cast<int>(field("diag_seeds", as_int(1)));
  rc.triples = field("triples", as_int(1));
  rc.superdiff_radius = field("superdiff_radius", as_real);
  rc.superdiff_bound = field("superdiff_bound", as_real);
  field("n_grid", [&](const std::string&) {
    ex.validate();
    return 0;
  });

  auto& v = rc.values;
  v["cost"] = cost.name();
  v["mu"] = raw["mu"];
  v["nu"] = raw["nu"];
  v["pair"] = raw["pair"];
  v["n_grid"] = canonical_grid(ex.n_grid);
  v["reps"] = std::to_string(ex.reps);
  v["seed"] = std::to_string(ex.master_seed);
  v["metric"] = ex.metric.to_string();
  v["threads"] = std::to_string(ex.threads);
  v["bootstrap"] = std::to_string(rc.bootstrap);
  v["diag_n"] = std::to_string(rc.diag_n);
  v["diag_seeds"] = std::to_string(rc.diag_seeds);
  v["triples"] = std::to_string(rc.triples);
  v["superdiff_radius"] = format_double(rc.superdiff_radius);
  v["superdiff_bound"] = format_double(rc.superdiff_bound);
  return rc;
}

ResolvedConfig parse_config(const std::filesystem::path& path) {
  return parse_config_text(read_file(path), path.string());
}

std::string ResolvedConfig::to_ini() const {
  std::string out = "[experiment]\n";
  for (const auto& k : config_registry()) {
    const auto it = values.find(k.name);
    const std::string v = it == values.end() ? "" : it->second;
    if (v.empty() && (std::string_view(k.name) == "nu" || std::string_view(k.name) == "pair")) continue;
    out += std::string(k.name) + " = \"" + v + "\"\n";
  }
  return out;
}

}  // namespace otrates
