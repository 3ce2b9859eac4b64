#include <CLI11.hpp>

#include <iostream>

#include "hetlab/report.hpp"

namespace {

// Options bound to scratch values; only those given on the command line
// override the config file.
struct Overrides {
  std::string config;
  int da = 0, db = 0, margin = 0, random_points = 0;
  double A = 0, B = 0, alpha = 0, beta = 0;
  std::vector<double> k_grid;
  std::vector<int> dims;
  std::string out, format;
  std::uint64_t seed = 0;
  std::vector<std::string> only, cases;
  double poly_tol = 0, fn_tol = 0, pinv_rel_tol = 0, branch_eps = 0;

  std::string profile, profile_csv;
  double omega0 = 0, c0 = 0, c1 = 0, t0 = 0, t1 = 0, step = 0, gamma_re = 0, gamma_im = 0, coherent_t = 0;
  int coherent_d = 0;
};

template <class T>
void apply(CLI::App& app, const char* name, const T& from, T& into) {
  if (app.count(name) > 0) into = from;
}

void add_common(CLI::App& sub, Overrides& o) {
  sub.add_option("--config", o.config, "JSON config file; command-line values win")->check(CLI::ExistingFile);
  sub.add_option("--da", o.da, "signal-mode Fock cutoff");
  sub.add_option("--db", o.db, "image-mode Fock cutoff");
  sub.add_option("--A", o.A, "signal coefficient A > 0");
  sub.add_option("--B", o.B, "image coefficient B > 0");
  sub.add_option("--alpha", o.alpha, "signal phase");
  sub.add_option("--beta", o.beta, "image phase");
  sub.add_option("--margin", o.margin, "minimum rectangular margin for polynomial cases");
  sub.add_option("--out", o.out, "output file (default stdout)");
  sub.add_option("--format", o.format, "json, csv or markdown");
  sub.add_option("--poly-tol", o.poly_tol);
  sub.add_option("--fn-tol", o.fn_tol);
  sub.add_option("--pinv-rel-tol", o.pinv_rel_tol);
  sub.add_option("--branch-eps", o.branch_eps);
}

hetlab::RunConfig assemble(CLI::App& sub, hetlab::RunMode mode, const Overrides& o) {
  hetlab::RunConfig base;
  base.mode = mode;
  hetlab::RunConfig c = o.config.empty() ? base : hetlab::load_config(o.config, base);
  if (c.mode != mode) throw hetlab::Error("config mode does not match the subcommand");

  apply(sub, "--da", o.da, c.d_a);
  apply(sub, "--db", o.db, c.d_b);
  apply(sub, "--A", o.A, c.A);
  apply(sub, "--B", o.B, c.B);
  apply(sub, "--alpha", o.alpha, c.alpha);
  apply(sub, "--beta", o.beta, c.beta);
  apply(sub, "--margin", o.margin, c.margin);
  apply(sub, "--out", o.out, c.out);
  if (sub.count("--format") > 0) c.format = hetlab::parse_format(o.format);
  apply(sub, "--poly-tol", o.poly_tol, c.tol.poly_tol);
  apply(sub, "--fn-tol", o.fn_tol, c.tol.fn_tol);
  apply(sub, "--pinv-rel-tol", o.pinv_rel_tol, c.tol.pinv_rel_tol);
  apply(sub, "--branch-eps", o.branch_eps, c.tol.branch_eps);

  if (mode == hetlab::RunMode::Verify) {
    apply(sub, "--seed", o.seed, c.seed);
    apply(sub, "--random-points", o.random_points, c.random_points);
    apply(sub, "--only", o.only, c.only);
    apply(sub, "--case", o.cases, c.cases);
  }
  if (mode == hetlab::RunMode::Sweep) apply(sub, "--k-grid", o.k_grid, c.k_grid);
  if (mode == hetlab::RunMode::Converge) {
    apply(sub, "--dims", o.dims, c.dims);
    apply(sub, "--case", o.cases, c.cases);
  }
  if (mode == hetlab::RunMode::Classical) {
    hetlab::ClassicalConfig& k = c.classical;
    apply(sub, "--profile", o.profile, k.profile);
    apply(sub, "--omega0", o.omega0, k.omega0);
    apply(sub, "--c0", o.c0, k.c0);
    apply(sub, "--c1", o.c1, k.c1);
    apply(sub, "--profile-csv", o.profile_csv, k.profile_csv);
    if (sub.count("--profile-csv") > 0 && sub.count("--profile") == 0) k.profile = "csv";
    apply(sub, "--t0", o.t0, k.t0);
    apply(sub, "--t1", o.t1, k.t1);
    apply(sub, "--step", o.step, k.step);
    apply(sub, "--gamma-re", o.gamma_re, k.gamma_re);
    apply(sub, "--gamma-im", o.gamma_im, k.gamma_im);
    apply(sub, "--coherent-d", o.coherent_d, k.coherent_d);
    apply(sub, "--coherent-t", o.coherent_t, k.coherent_t);
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks for two-mode heterodyne phase operators"};
  app.set_version_flag("--version", std::string(hetlab::kToolVersion));
  app.require_subcommand(1);

  Overrides o;
  CLI::App* verify = app.add_subcommand("verify", "run the identity catalog");
  CLI::App* sweep = app.add_subcommand("sweep", "Caves-limit sweep over frequency ratios");
  CLI::App* converge = app.add_subcommand("converge", "truncation convergence study");
  CLI::App* classical = app.add_subcommand("classical", "classical oscillator phase checks");
  for (CLI::App* sub : {verify, sweep, converge, classical}) add_common(*sub, o);

  verify->add_option("--seed", o.seed, "seed for the randomized parameter sweep");
  verify->add_option("--random-points", o.random_points, "randomized (A, B, alpha, beta) points");
  verify->add_option("--only", o.only, "restrict to case kinds")->delimiter(',');
  verify->add_option("--case", o.cases, "restrict to case ids")->delimiter(',');
  sweep->add_option("--k-grid", o.k_grid, "frequency ratios r in (0, 1)")->delimiter(',');
  converge->add_option("--dims", o.dims, "strictly increasing cutoffs")->delimiter(',');
  converge->add_option("--case", o.cases, "case ids")->delimiter(',');
  classical->add_option("--profile", o.profile, "constant, linear or csv");
  classical->add_option("--omega0", o.omega0);
  classical->add_option("--c0", o.c0, "linear profile intercept");
  classical->add_option("--c1", o.c1, "linear profile slope");
  classical->add_option("--profile-csv", o.profile_csv, "tabulated Omega^2 file (t,value)");
  classical->add_option("--t0", o.t0);
  classical->add_option("--t1", o.t1);
  classical->add_option("--step", o.step);
  classical->add_option("--gamma-re", o.gamma_re);
  classical->add_option("--gamma-im", o.gamma_im);
  classical->add_option("--coherent-d", o.coherent_d);
  classical->add_option("--coherent-t", o.coherent_t);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const std::pair<CLI::App*, hetlab::RunMode> modes[] = {{verify, hetlab::RunMode::Verify},
                                                           {sweep, hetlab::RunMode::Sweep},
                                                           {converge, hetlab::RunMode::Converge},
                                                           {classical, hetlab::RunMode::Classical}};
    for (const auto& [sub, mode] : modes) {
      if (sub->parsed()) return hetlab::run(assemble(*sub, mode, o), std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "hetlab: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
