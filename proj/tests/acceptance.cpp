// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hetlab/caves.hpp"
#include "hetlab/classical.hpp"
#include "hetlab/identity_suite.hpp"
#include "hetlab/rns_phase.hpp"

using namespace hetlab;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
};

std::string sci(double x) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << x;
  return s.str();
}

// 1 ---------------------------------------------------------------------------

Verdict exact_identities() {
  Verdict v;
  double worst = 0.0;
  for (int d : {8, 12, 16}) {
    const TwoModeBasis b(d, d);
    const OperatorMatrix D = rns_phase_operator(b);
    const OperatorMatrix N = number_diff(b);
    const double r = spectral_norm((commutator(D, N) - D).matrix());
    worst = std::max(worst, r);
    if (!(r <= 1e-12)) v.fail("||[D,N]-D|| = " + sci(r) + " at d=" + std::to_string(d));
    for (int i = 0; i < b.dim(); ++i)
      for (int j = 0; j < b.dim(); ++j) {
        const auto [p, q] = b.state_of(i);
        const Complex want = i == j ? Complex(p - q) : Complex(0.0);
        if (N(i, j) != want) {
          v.fail("N entry (" + std::to_string(i) + "," + std::to_string(j) + ") at d=" + std::to_string(d));
          return v;
        }
      }
  }
  if (v.pass) v.detail = "max ||[D,N]-D|| = " + sci(worst) + " over d in {8,12,16}; N diagonal with p-q exactly";
  return v;
}

// 2 ---------------------------------------------------------------------------

Verdict polynomial_sweep() {
  const std::vector<std::string> ids{"II3", "II17", "L1",  "L4",  "L7",  "L9",  "L10", "L21", "L22", "L23", "L24",
                                     "L25", "L26",  "L32", "L33", "L34", "Z3",  "Z16", "C5",  "C6",  "C7",  "C8"};
  Verdict v;
  ToleranceConfig tol;
  tol.poly_tol = 1e-10;
  const auto sweep = randomized_sweep(0, 20, TwoModeBasis(12, 12), tol, 2);
  if (sweep.size() != 20) v.fail("sweep produced " + std::to_string(sweep.size()) + " points");
  double worst = 0.0;
  for (const std::string& id : ids) {
    int seen = 0;
    for (const SweepPoint& pt : sweep) {
      for (const IdentityReport& r : pt.reports) {
        if (r.id != id) continue;
        ++seen;
        if (!r.residual || !(*r.residual <= 1e-10) || r.params.margin < 2) {
          v.fail(id + " at A=" + sci(pt.params.A()) + " B=" + sci(pt.params.B()) + ": " +
                 (r.residual ? sci(*r.residual) : r.note));
        } else {
          worst = std::max(worst, *r.residual);
        }
      }
    }
    if (seen != 20) v.fail(id + " evaluated at " + std::to_string(seen) + " of 20 points");
  }
  if (v.pass) v.detail = std::to_string(ids.size()) + " cases x 20 points (seed 0, d=12, margin 2), max residual " + sci(worst);
  return v;
}

// 3 ---------------------------------------------------------------------------

Verdict matrix_function_convergence() {
  Verdict v;
  std::ifstream f(EXPECTED_RESULTS);
  if (!f) {
    v.fail("cannot read expected results file");
    return v;
  }
  const json expected = json::parse(f);
  const std::vector<std::string> ids = expected["cases"].get<std::vector<std::string>>();
  const std::vector<int> dims = expected["dims"].get<std::vector<int>>();
  const double k = expected["k"].get<double>();
  const auto study = convergence_study(ids, params_for_k(k), dims, ToleranceConfig{});

  int ok = 0;
  for (const ConvergenceCase& c : study) {
    const double threshold = expected["threshold_at_max_d"].at(c.id).get<double>();
    const ConvergenceRow& last = c.rows.back();
    const bool monotone = c.verdict == "exact" || c.verdict == "decreasing";
    const bool small = last.residual && *last.residual <= threshold;
    if (monotone && small) {
      ++ok;
      continue;
    }
    std::string why = c.id + " " + c.verdict;
    if (last.residual) {
      why += ", " + sci(*last.residual) + " at d=" + std::to_string(last.d);
    } else {
      why += " (" + last.error.substr(0, last.error.find(':', last.error.find(':') + 1)) + ")";
    }
    v.fail(why);
  }
  v.detail = std::to_string(ok) + "/" + std::to_string(study.size()) + " cases meet the frozen thresholds; " + v.detail;
  return v;
}

// 4 ---------------------------------------------------------------------------

Verdict caves_limit() {
  Verdict v;
  const TwoModeBasis b(20, 20);
  const SubspaceProjector interior = photon_projector(b, 4);
  const ToleranceConfig tol;
  const OperatorMatrix N = number_diff(b);
  try {
    const HeterodyneParams sw(1.0, 1.0);
    const CavesOperators ops = build_caves_operators(sw, b, tol);
    const OperatorMatrix R = r_operator(build_psi(sw, b), tol).canonical;
    const double s_r = projected_residual(ops.S, R, interior);
    const UnitarityProducts u = unitarity_products(ops, tol, interior);
    const SnCommutatorReport sn = sn_commutator(ops, N, tol, interior);
    if (!(s_r <= 1e-3)) v.fail("||S-R|| = " + sci(s_r));
    if (!(u.deficit_SSdag <= 1e-3)) v.fail("||SS^dag-1|| = " + sci(u.deficit_SSdag));
    if (!(sn.sw_limit_residual <= 1e-3)) v.fail("||[S,N]-S|| = " + sci(sn.sw_limit_residual));
  } catch (const std::exception& e) {
    v.fail(std::string("mu=1: ") + e.what());
  }
  try {
    std::array<double, 2> deficit{};
    const std::array<double, 2> ks{0.02, 0.04};
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const CavesOperators ops = build_caves_operators(params_for_k(ks[i]), b, tol);
      deficit[i] = unitarity_products(ops, tol, interior).deficit_SSdag;
    }
    const double ratio = deficit[1] / deficit[0];
    if (!(ratio >= 1.5 && ratio <= 2.5)) v.fail("deficit ratio k=0.04/k=0.02 is " + sci(ratio));
  } catch (const std::exception& e) {
    v.fail(std::string("k in {0.02, 0.04}: ") + e.what());
  }
  if (v.pass) v.detail = "SW limit and first-order deficit scaling hold at d=20";
  return v;
}

// 5 ---------------------------------------------------------------------------

Verdict k_expansion_bound() {
  Verdict v;
  double worst = 0.0;
  for (double r : {0.2, 0.1, 0.05, 0.02, 0.01, 0.005}) {
    const KExpansion e = k_expansion(r);
    const double gap = std::abs(e.k_exact - e.k_first_order);
    worst = std::max(worst, gap / (2 * r * r * r));
    if (!(gap <= 2 * r * r * r)) v.fail("r=" + sci(r) + ": gap " + sci(gap));
  }
  if (v.pass) v.detail = "max |k_exact - k_first_order| / 2r^3 = " + sci(worst) + " on the default grid";
  return v;
}

// 6 ---------------------------------------------------------------------------

Verdict classical_oracle() {
  Verdict v;
  const ClassicalReport c = run_classical(OscillatorSpec::harmonic(2.0, 0.0, 1.0, 1e-3));
  if (!(c.wronskian_drift <= 1e-8)) v.fail("Wronskian drift " + sci(c.wronskian_drift));
  if (!(c.emp_residual <= 1e-6)) v.fail("EMP residual " + sci(c.emp_residual));
  if (!c.constant_omega_error || !(*c.constant_omega_error <= 1e-8)) v.fail("constant-omega phase error");
  if (!(c.route_discrepancy <= 1e-6)) v.fail("route discrepancy " + sci(c.route_discrepancy));

  OscillatorSpec lin;
  lin.omega_squared = OmegaSquaredProfile::linear(0.0, 1.0);
  lin.t0 = 1.0;
  lin.t1 = 2.0;
  lin.step = 2.5e-4;
  const ClassicalReport l = run_classical(lin);
  if (!(l.wronskian_drift <= 1e-8)) v.fail("linear profile Wronskian drift " + sci(l.wronskian_drift));
  if (!(l.emp_residual <= 1e-6)) v.fail("linear profile EMP residual " + sci(l.emp_residual));
  if (!(l.route_discrepancy <= 1e-6)) v.fail("linear profile route discrepancy " + sci(l.route_discrepancy));

  double coherent = 0.0;
  for (const Complex gamma : {Complex(0.5, 0.0), Complex(0.3, -0.4), Complex(-0.7, 0.2)}) {
    for (double t : {0.0, 0.7, 1.5707963267948966}) {
      const CoherentExpectations e = coherent_expectations(gamma, 2.0, t, 24);
      coherent = std::max({coherent, std::abs(e.a_t - std::conj(gamma) * std::polar(1.0, 2.0 * t)),
                           std::abs(e.b_dag_t - gamma * std::polar(1.0, -2.0 * t)),
                           std::abs(e.product - std::norm(gamma))});
      if (!e.tail_ok) v.fail("coherent tail bound at |gamma|=" + sci(std::abs(gamma)));
    }
  }
  if (!(coherent <= 1e-8)) v.fail("coherent expectations off by " + sci(coherent));
  if (v.pass) {
    v.detail = "drift " + sci(std::max(c.wronskian_drift, l.wronskian_drift)) + ", EMP " +
               sci(std::max(c.emp_residual, l.emp_residual)) + ", theta " + sci(*c.constant_omega_error) +
               ", routes " + sci(std::max(c.route_discrepancy, l.route_discrepancy)) + ", coherent " + sci(coherent);
  }
  return v;
}

// 7 ---------------------------------------------------------------------------

Verdict coverage_check() {
  Verdict v;
  const CoverageReport r = coverage(builtin_catalog());
  for (const std::string& m : r.missing) v.fail("unreferenced " + m);
  for (const std::string& u : r.unknown) v.fail("out of scope " + u);
  if (v.pass) v.detail = std::to_string(in_scope_labels().size()) + " in-scope labels, all referenced";
  return v;
}

// 8 ---------------------------------------------------------------------------

struct Run {
  int code;
  std::string out;
};

Run hetlab(const std::string& args) {
  const std::string cmd = std::string("'") + HETLAB_BIN + "' " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

bool has_keys(const json& j, std::initializer_list<const char*> keys) {
  return std::all_of(keys.begin(), keys.end(), [&](const char* k) { return j.contains(k); });
}

Verdict cli_contract() {
  Verdict v;
  struct Probe {
    std::string args;
    int want;
    std::function<bool(const json&)> schema;
  };
  const auto common = [](const json& j) {
    return has_keys(j, {"tool", "version", "mode", "config", "volatile"}) && j["volatile"].contains("wall_time_s");
  };
  const std::vector<Probe> probes{
      {"verify --da 8 --db 8 --only polynomial,exact-full-space --random-points 2", 0,
       [&](const json& j) {
         if (!common(j) || !has_keys(j, {"summary", "cases", "random_sweep", "deviations"})) return false;
         for (const json& c : j["cases"])
           if (!has_keys(c, {"id", "paper_ref", "params", "residual", "tolerance", "status", "note"})) return false;
         const json& s = j["summary"];
         return s["pass"].get<int>() + s["fail"].get<int>() + s["skip"].get<int>() + s["report_only"].get<int>() ==
                s["total"].get<int>();
       }},
      {"verify --da 8 --db 8", 2,
       [&](const json& j) {
         return common(j) && j["summary"]["total"].get<std::size_t>() == builtin_catalog().size();
       }},
      {"verify --da 8 --db 8 --poly-tol 0 --fn-tol 0", 2, [&](const json& j) { return common(j); }},
      {"sweep --da 6 --db 6 --k-grid 0.1,0.05", 2,
       [&](const json& j) {
         if (!common(j) || !j.contains("rows") || j["rows"].size() != 2) return false;
         for (const json& r : j["rows"])
           if (!has_keys(r, {"r", "k_exact", "k_first_order", "deficit_SSdag", "deficit_SdagS", "sn_residual",
                             "error"}))
             return false;
         return j["rows"][0]["r"].get<double>() > j["rows"][1]["r"].get<double>();
       }},
      {"converge --dims 6,8,10 --case GG7,N4", 0,
       [&](const json& j) {
         if (!common(j) || !j.contains("cases")) return false;
         for (const json& c : j["cases"])
           if (!has_keys(c, {"id", "verdict", "rows"}) || c["rows"].size() != 3) return false;
         return true;
       }},
      {"classical --omega0 2 --t0 0 --t1 1", 0,
       [&](const json& j) { return common(j) && has_keys(j, {"profile", "results", "checks"}); }},
  };

  for (const Probe& p : probes) {
    const Run a = hetlab(p.args);
    const Run b = hetlab(p.args);
    if (a.code != p.want) v.fail("'" + p.args + "' exit " + std::to_string(a.code) + ", want " + std::to_string(p.want));
    try {
      auto ja = nlohmann::ordered_json::parse(a.out);
      auto jb = nlohmann::ordered_json::parse(b.out);
      if (!p.schema(json::parse(a.out))) v.fail("'" + p.args + "' report does not match the schema");
      if (ja.dump(2) + "\n" != a.out) v.fail("'" + p.args + "' does not round trip");
      ja.erase("volatile");
      jb.erase("volatile");
      if (ja.dump() != jb.dump()) v.fail("'" + p.args + "' is not deterministic");
    } catch (const std::exception& e) {
      v.fail("'" + p.args + "' output is not JSON");
    }
  }

  for (const std::string args : {"verify --da 8 --db 8 --format csv", "sweep --da 6 --db 6 --format csv",
                                 "converge --dims 6,8,10 --case N4 --format markdown"}) {
    if (hetlab(args).out != hetlab(args).out) v.fail("'" + args + "' is not byte-identical across runs");
  }

  for (const std::string args : {"", "plot", "verify --da 1", "verify --format xml", "sweep --k-grid 1.5",
                                 "converge --dims 8", "classical --profile-csv /nonexistent.csv",
                                 "verify --da 6 --db 6 --out /nonexistent-dir/report.json"}) {
    const int code = hetlab(args).code;
    if (code != 1) v.fail("'" + args + "' exit " + std::to_string(code) + ", want 1");
  }
  if (v.pass) v.detail = "schemas, byte determinism and exit codes 0/1/2 hold for all four subcommands";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"exact identities on the full truncated space", exact_identities},
      {"polynomial identities over the seed-0 randomized sweep", polynomial_sweep},
      {"matrix-function identities converge on the fixed interior", matrix_function_convergence},
      {"Shapiro-Wagner limit and first-order scaling of the extension", caves_limit},
      {"k-expansion error bound", k_expansion_bound},
      {"classical oracle", classical_oracle},
      {"equation coverage", coverage_check},
      {"CLI contract", cli_contract},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.fail(std::string("unexpected error: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failed;
    std::ostringstream line;
    line.precision(1);
    line << std::fixed << (v.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " ("
         << secs << " s) -- " << v.detail;
    std::cout << line.str() << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria pass" << std::endl;
  return failed == 0 ? 0 : 1;
}
