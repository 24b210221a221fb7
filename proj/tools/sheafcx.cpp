// sheafcx command-line tool: sum, lfun, complexity, bound, equidist, selftest.

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <string>

#include "sheafcx/acceptance.hpp"
#include "sheafcx/bound_calculus.hpp"
#include "sheafcx/cache.hpp"
#include "sheafcx/complexity_curve.hpp"
#include "sheafcx/equidist.hpp"
#include "sheafcx/io.hpp"
#include "sheafcx/parser.hpp"
#include "sheafcx/run_config.hpp"
#include "sheafcx/sum_engine.hpp"

using namespace sheafcx;
using io::Json;

namespace {

struct Globals {
  std::string config_file;
  std::optional<u64> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> format;
  std::optional<std::string> cache_dir;
  std::optional<double> max_evaluations;
};

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg;
  if (!g.config_file.empty()) cfg.load_file(g.config_file);
  cfg.load_env();
  if (g.seed) cfg.seed = *g.seed;
  if (g.threads) cfg.threads = *g.threads;
  if (g.format) cfg.format = RunConfig::parse_format(*g.format);
  if (g.cache_dir) cfg.cache_dir = *g.cache_dir;
  if (g.max_evaluations) cfg.max_evaluations = *g.max_evaluations;
  cfg.validate();
  return cfg;
}

Json envelope(const std::string& command, const RunConfig& cfg, Json result) {
  return Json{{"schema", io::kSchemaVersion},
              {"version", kVersion},
              {"command", command},
              {"seed", cfg.seed},
              {"config_hash", cfg.hash()},
              {"config",
               Json{{"max_evaluations", cfg.max_evaluations},
                    {"max_family", cfg.max_family},
                    {"tolerance", cfg.tolerance},
                    {"gap", cfg.gap},
                    {"format", RunConfig::format_name(cfg.format)}}},
              {"result", std::move(result)}};
}

SumOptions sum_options(const RunConfig& cfg, int ambient) {
  SumOptions o;
  o.max_evaluations = static_cast<u64>(cfg.max_evaluations);
  o.threads = cfg.threads;
  o.field_seed = cfg.seed;
  o.ambient = ambient;
  return o;
}

Weight parse_weight(const std::string& s) {
  try {
    const auto slash = s.find('/');
    if (slash == std::string::npos) return Weight(std::stoll(s));
    return Weight(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
  } catch (const std::logic_error&) {
    throw Error(Errc::BadParams, "cannot read weight '" + s + "'");
  }
}

void print_text(const Json& j, int indent = 0) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it->is_object() || (it->is_array() && !it->empty() && (*it)[0].is_structured())) {
      std::cout << pad << it.key() << ":\n";
      if (it->is_object()) print_text(*it, indent + 2);
      else
        for (const auto& el : *it) {
          std::cout << pad << "  -\n";
          print_text(el, indent + 4);
        }
    } else {
      std::cout << pad << it.key() << ": " << (it->is_string() ? it->get<std::string>() : it->dump()) << "\n";
    }
  }
}

void emit(const std::string& command, const RunConfig& cfg, Json result) {
  const Json out = envelope(command, cfg, std::move(result));
  if (cfg.format == OutputFormat::Text) print_text(out);
  else if (cfg.format == OutputFormat::Json) std::cout << out.dump(2) << "\n";
  else throw Error(Errc::BadParams, "csv output is available for `equidist` only");
}

/// L-function estimate, in polynomial mode when the sheaf is known to have H^0_c = H^2_c = 0.
struct LfunOutcome {
  LPolynomialEstimate est;
  FrobeniusSpectrum spectrum;
};

LfunOutcome run_lfun(const Expr& e, u64 p, int M, bool polynomial, const RunConfig& cfg, int ambient) {
  PowerSumCache cache(cfg.cache_dir);
  const auto sums = cache.power_sums(e, p, M, sum_options(cfg, ambient));
  FitOptions fo;
  fo.tolerance = cfg.tolerance;
  fo.gap = cfg.gap;
  fo.vanishing_h0_h2 = polynomial;
  LfunOutcome out{fit_l_polynomial(sums, fo), {}};
  out.spectrum = frobenius_spectrum(out.est);
  return out;
}

int cmd_sum(const std::string& text, u64 p, int m, const std::string& w, int ambient, const RunConfig& cfg) {
  const Expr e = parse_expr(text);
  const auto r = complete_sum(e, p, m, parse_weight(w), sum_options(cfg, ambient));
  Json j{{"expr", to_string(e)}, {"canonical_hash", canonical_hash(e)}, {"p", p}, {"m", m}};
  j.update(io::to_json(r));
  emit("sum", cfg, j);
  return 0;
}

int cmd_lfun(const std::string& text, u64 p, int M, bool polynomial, int ambient, const RunConfig& cfg) {
  const Expr e = parse_expr(text);
  const auto out = run_lfun(e, p, M, polynomial, cfg, ambient);
  Json j{{"expr", to_string(e)}, {"canonical_hash", canonical_hash(e)}, {"p", p}, {"M", M}};
  j["estimate"] = io::to_json(out.est);
  j["spectrum"] = io::to_json(out.spectrum);
  emit("lfun", cfg, j);
  return 0;
}

int cmd_complexity(const std::string& text, u64 p, std::optional<int> M, const RunConfig& cfg) {
  const Expr e = parse_expr(text);
  const auto inv = rank_one_invariants(e, p);
  const i64 chi = gos_chi(inv);
  // Any ramification makes a rank-one sheaf geometrically nontrivial, so H^2_c = 0; H^0_c = 0 on an affine curve.
  bool ramified = false;
  for (const auto& sp : inv.singular_points) ramified = ramified || sp.swan > 0 || sp.tame;
  const bool polynomial = ramified && chi <= 0;
  const int terms = M ? *M : polynomial ? static_cast<int>(-chi) + 1 : 8;
  Json j{{"expr", to_string(e)}, {"p", p}, {"invariants", io::to_json(inv)}, {"gos_chi", chi}, {"fkm_conductor", fkm_conductor(inv)}};
  try {
    const auto out = run_lfun(e, p, terms, polynomial, cfg, 1);
    std::vector<i64> betti = {out.spectrum.betti_sum()};
    if (out.est.polynomial_mode) betti = {0, out.est.degree, 0};
    j["oracle"] = Json{{"M", terms}, {"chi_c", out.est.chi_c}, {"betti", betti}, {"agrees_with_gos", out.est.chi_c == chi}};
    j["complexity"] = io::to_json(curve_complexity(inv, betti));
  } catch (const Error& err) {
    if (err.code() != Errc::Unstable && err.code() != Errc::BudgetExceeded) throw;
    j["oracle"] = Json{{"M", terms}, {"error", err.what()}};
    j["complexity"] = io::to_json(curve_complexity(inv, std::nullopt));
  }
  emit("complexity", cfg, j);
  return 0;
}

int cmd_bound(const std::string& text, int ambient, const RunConfig& cfg) {
  const Expr e = parse_expr(text);
  const auto b = propagate(e, {}, ambient);
  Json j{{"expr", to_string(e)}, {"ambient", b.trail.ambient}, {"verified", verify_trail(b.trail)}};
  j.update(io::to_json(b));
  emit("bound", cfg, j);
  return 0;
}

struct EquidistArgs {
  int n = 1, d = 3;
  u64 p = 0;
  std::string variant = "all";
  u64 sample = 0;
  std::optional<u64> family_seed, oracle_seed;
  u64 oracle_samples = 100000;
  int k_max = 4;
  double c_sys = 10, threshold = 4;
  std::string csv_path;
};

int cmd_equidist(const EquidistArgs& a, const RunConfig& cfg) {
  FamilyDescriptor desc;
  desc.n = a.n;
  desc.d = a.d;
  desc.p = a.p;
  if (a.variant == "all") desc.variant = FamilyVariant::All;
  else if (a.variant == "odd") desc.variant = FamilyVariant::Odd;
  else if (a.variant == "kloosterman") desc.variant = FamilyVariant::Kloosterman;
  else throw Error(Errc::BadParams, "unknown family variant '" + a.variant + "'");
  if (a.sample > 0) {
    desc.mode = FamilyMode::Sample;
    desc.count = a.sample;
    desc.seed = a.family_seed.value_or(cfg.seed);
  }
  desc.exhaustive_cap = cfg.max_family;
  EquidistOptions eo;
  eo.threads = cfg.threads;
  eo.max_evaluations = cfg.max_evaluations * 100;  // families are budgeted in cheap polynomial evaluations

  if (cfg.format == OutputFormat::Csv || !a.csv_path.empty()) {
    const auto members = enumerate_deligne(desc);
    const auto sums = family_sums(desc, members, eo);
    if (cfg.format == OutputFormat::Csv) {
      write_family_csv(std::cout, desc, members, sums);
      return 0;
    }
    std::ofstream out(a.csv_path);
    if (!out) throw Error(Errc::Io, "cannot write " + a.csv_path);
    write_family_csv(out, desc, members, sums);
  }
  CompareOptions co;
  co.k_max = a.k_max;
  co.oracle_samples = a.oracle_samples;
  co.oracle_seed = a.oracle_seed.value_or(cfg.seed + 1);
  co.c_sys = a.c_sys;
  co.threshold = a.threshold;
  co.sums = eo;
  emit("equidist", cfg, io::to_json(compare(desc, co)));
  return 0;
}

int cmd_selftest(const RunConfig& cfg) {
  acceptance::Options opt;
  opt.threads = cfg.threads;
  int failed = 0;
  for (const auto& r : acceptance::run_fast(opt)) {
    std::cout << acceptance::format_line(r) << "\n";
    failed += r.pass ? 0 : 1;
  }
  std::cout << (failed ? "selftest FAILED" : "selftest passed") << std::endl;
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sheafcx: trace functions, exponential sums and complexity bounds of sheaf expressions over finite fields"};
  app.set_version_flag("--version", std::string("sheafcx ") + kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_file, "Flat key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for sampling and extension-field construction");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--format", g.format, "Output format: json, text or csv");
  app.add_option("--cache-dir", g.cache_dir, "Directory for cached power sums");
  app.add_option("--max-evaluations", g.max_evaluations, "Budget cap on trace evaluations per call");

  std::string expr_text;
  u64 p = 0;
  int ambient = 0;

  auto* sum = app.add_subcommand("sum", "Normalized complete sum q^{-w/2} sum_x t_A(x)");
  int m = 1;
  std::string w = "0";
  sum->add_option("expr", expr_text, "Sheaf expression")->required();
  sum->add_option("--p", p, "Prime")->required();
  sum->add_option("--m", m, "Extension degree");
  sum->add_option("--w", w, "Weight for the normalization, e.g. 1 or 1/2");
  sum->add_option("--ambient", ambient, "Ambient dimension (default: the expression's own)");

  auto* lfun = app.add_subcommand("lfun", "Fit the L-function from power sums S_1..S_M");
  int M = 8;
  bool polynomial = false;
  lfun->add_option("expr", expr_text, "Sheaf expression")->required();
  lfun->add_option("--p", p, "Prime")->required();
  lfun->add_option("--M", M, "Number of power sums");
  lfun->add_flag("--polynomial", polynomial, "Assume H^0_c = H^2_c = 0 and fit a polynomial");
  lfun->add_option("--ambient", ambient, "Ambient dimension");

  auto* complexity = app.add_subcommand("complexity", "Local invariants, Euler characteristic and complexity of a rank-one sheaf on A^1");
  std::optional<int> cM;
  complexity->add_option("expr", expr_text, "Sheaf expression")->required();
  complexity->add_option("--p", p, "Prime")->required();
  complexity->add_option("--M", cM, "Number of power sums for the oracle");

  auto* bound = app.add_subcommand("bound", "Propagate effective complexity bounds with a trail");
  bound->add_option("expr", expr_text, "Sheaf expression")->required();
  bound->add_option("--ambient", ambient, "Ambient dimension");

  auto* equidist = app.add_subcommand("equidist", "Compare family moments with a Haar-measure oracle");
  EquidistArgs ea;
  equidist->add_option("--n", ea.n, "Number of variables (1 or 2)");
  equidist->add_option("--d", ea.d, "Degree");
  equidist->add_option("--p", ea.p, "Prime")->required();
  equidist->add_option("--variant", ea.variant, "all, odd or kloosterman");
  equidist->add_option("--sample", ea.sample, "Sample this many members instead of enumerating the family");
  equidist->add_option("--family-seed", ea.family_seed, "Seed for family sampling (default: --seed)");
  equidist->add_option("--oracle-samples", ea.oracle_samples, "Haar samples");
  equidist->add_option("--oracle-seed", ea.oracle_seed, "Seed for Haar sampling (default: --seed + 1)");
  equidist->add_option("--kmax", ea.k_max, "Largest a + b among the moments E[S^a conj(S)^b]");
  equidist->add_option("--c-sys", ea.c_sys, "Systematic allowance constant: c_sys / sqrt(p)");
  equidist->add_option("--threshold", ea.threshold, "z-score threshold");
  equidist->add_option("--csv", ea.csv_path, "Also write per-member sums to this CSV file");

  auto* selftest = app.add_subcommand("selftest", "Run the fast acceptance checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const RunConfig cfg = resolve_config(g);
    if (sum->parsed()) return cmd_sum(expr_text, p, m, w, ambient, cfg);
    if (lfun->parsed()) return cmd_lfun(expr_text, p, M, polynomial, ambient, cfg);
    if (complexity->parsed()) return cmd_complexity(expr_text, p, cM, cfg);
    if (bound->parsed()) return cmd_bound(expr_text, ambient, cfg);
    if (equidist->parsed()) return cmd_equidist(ea, cfg);
    if (selftest->parsed()) return cmd_selftest(cfg);
  } catch (const ParseError& e) {
    std::cerr << e.render(expr_text) << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == Errc::Unstable) std::cerr << "hint: rerun with a larger --M\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
