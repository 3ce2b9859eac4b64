#include "hetlab/report.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "hetlab/caves.hpp"
#include "hetlab/classical.hpp"
#include "hetlab/identity_suite.hpp"

namespace hetlab {

using ojson = nlohmann::ordered_json;

const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::Verify: return "verify";
    case RunMode::Sweep: return "sweep";
    case RunMode::Converge: return "converge";
    case RunMode::Classical: return "classical";
  }
  return "unknown";
}

const char* to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::Json: return "json";
    case OutputFormat::Csv: return "csv";
    case OutputFormat::Markdown: return "markdown";
  }
  return "unknown";
}

RunMode parse_mode(const std::string& s) {
  for (RunMode m : {RunMode::Verify, RunMode::Sweep, RunMode::Converge, RunMode::Classical})
    if (s == to_string(m)) return m;
  throw DomainError("unknown mode '" + s + "'");
}

OutputFormat parse_format(const std::string& s) {
  if (s == "json") return OutputFormat::Json;
  if (s == "csv") return OutputFormat::Csv;
  if (s == "markdown" || s == "md") return OutputFormat::Markdown;
  throw DomainError("unknown format '" + s + "' (json, csv, markdown)");
}

// RunConfig -----------------------------------------------------------------

namespace {

const std::set<std::string>& case_kind_names() {
  static const std::set<std::string> names = {
      to_string(CaseKind::Polynomial), to_string(CaseKind::MatrixFunction), to_string(CaseKind::ExactFullSpace),
      to_string(CaseKind::Scalar), to_string(CaseKind::ReportOnly)};
  return names;
}

void check_dim(int d, const char* what) {
  if (d < 2 || d > 64) throw DomainError(std::string(what) + " must lie in 2..64, got " + std::to_string(d));
}

}  // namespace

void RunConfig::validate() const {
  check_dim(d_a, "da");
  check_dim(d_b, "db");
  if (margin < 0) throw DomainError("margin must be >= 0");
  tol.validate();
  HeterodyneParams(A, B, alpha, beta);
  if (random_points < 0) throw DomainError("random_points must be >= 0");
  for (const std::string& k : only)
    if (!case_kind_names().count(k)) throw DomainError("unknown case kind '" + k + "' in only");
  for (const std::string& id : cases)
    if (!find_case(id)) throw DomainError("unknown case id '" + id + "'");

  if (mode == RunMode::Sweep) {
    if (k_grid.empty()) throw DomainError("sweep needs a non-empty k grid");
    for (double r : k_grid)
      if (!(r > 0.0 && r < 1.0)) throw DomainError("k grid values must lie in (0, 1)");
  }
  if (mode == RunMode::Converge) {
    if (dims.size() < 3) throw DomainError("converge needs at least three dims");
    for (std::size_t i = 0; i < dims.size(); ++i) {
      check_dim(dims[i], "dims entry");
      if (i > 0 && dims[i] <= dims[i - 1]) throw DomainError("dims must be strictly increasing");
    }
  }
  if (mode == RunMode::Classical) {
    const ClassicalConfig& c = classical;
    if (c.profile != "constant" && c.profile != "linear" && c.profile != "csv") {
      throw DomainError("classical profile must be constant, linear or csv");
    }
    if (c.profile == "csv" && c.profile_csv.empty()) throw DomainError("csv profile needs profile_csv");
    if (c.profile == "constant" && !(c.omega0 > 0.0)) throw DomainError("omega0 must be positive");
    if (c.coherent_d < 2 || c.coherent_d > 64) throw DomainError("coherent_d must lie in 2..64");
  }
}

ojson RunConfig::to_json() const {
  ojson j;
  j["mode"] = to_string(mode);
  j["da"] = d_a;
  j["db"] = d_b;
  j["A"] = A;
  j["B"] = B;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["margin"] = margin;
  j["tolerances"] = {{"poly_tol", tol.poly_tol},
                     {"fn_tol", tol.fn_tol},
                     {"pinv_rel_tol", tol.pinv_rel_tol},
                     {"branch_eps", tol.branch_eps}};
  j["k_grid"] = k_grid;
  j["dims"] = dims;
  j["out"] = out;
  j["format"] = to_string(format);
  j["seed"] = seed;
  j["random_points"] = random_points;
  j["only"] = only;
  j["cases"] = cases;
  const ClassicalConfig& c = classical;
  j["classical"] = {{"profile", c.profile},       {"omega0", c.omega0},   {"c0", c.c0},
                    {"c1", c.c1},                 {"profile_csv", c.profile_csv},
                    {"t0", c.t0},                 {"t1", c.t1},           {"step", c.step},
                    {"gamma_re", c.gamma_re},     {"gamma_im", c.gamma_im},
                    {"coherent_d", c.coherent_d}, {"coherent_t", c.coherent_t}};
  return j;
}

namespace {

template <class T>
void read(const nlohmann::json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key)) throw Error("unknown field '" + key + "' in " + where);
  }
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j, RunConfig base) {
  if (!j.is_object()) throw Error("config must be a JSON object");
  reject_unknown(j,
                 {"mode", "da", "db", "A", "B", "alpha", "beta", "margin", "tolerances", "k_grid", "dims", "out",
                  "format", "seed", "random_points", "only", "cases", "classical"},
                 "config");
  RunConfig c = std::move(base);
  try {
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    read(j, "da", c.d_a);
    read(j, "db", c.d_b);
    read(j, "A", c.A);
    read(j, "B", c.B);
    read(j, "alpha", c.alpha);
    read(j, "beta", c.beta);
    read(j, "margin", c.margin);
    read(j, "k_grid", c.k_grid);
    read(j, "dims", c.dims);
    read(j, "out", c.out);
    if (j.contains("format")) c.format = parse_format(j.at("format").get<std::string>());
    read(j, "seed", c.seed);
    read(j, "random_points", c.random_points);
    read(j, "only", c.only);
    read(j, "cases", c.cases);
    if (j.contains("tolerances")) {
      const auto& t = j.at("tolerances");
      if (!t.is_object()) throw Error("tolerances must be an object");
      reject_unknown(t, {"poly_tol", "fn_tol", "pinv_rel_tol", "branch_eps"}, "tolerances");
      read(t, "poly_tol", c.tol.poly_tol);
      read(t, "fn_tol", c.tol.fn_tol);
      read(t, "pinv_rel_tol", c.tol.pinv_rel_tol);
      read(t, "branch_eps", c.tol.branch_eps);
    }
    if (j.contains("classical")) {
      const auto& k = j.at("classical");
      if (!k.is_object()) throw Error("classical must be an object");
      reject_unknown(k,
                     {"profile", "omega0", "c0", "c1", "profile_csv", "t0", "t1", "step", "gamma_re", "gamma_im",
                      "coherent_d", "coherent_t"},
                     "classical");
      ClassicalConfig& cc = c.classical;
      read(k, "profile", cc.profile);
      read(k, "omega0", cc.omega0);
      read(k, "c0", cc.c0);
      read(k, "c1", cc.c1);
      read(k, "profile_csv", cc.profile_csv);
      read(k, "t0", cc.t0);
      read(k, "t1", cc.t1);
      read(k, "step", cc.step);
      read(k, "gamma_re", cc.gamma_re);
      read(k, "gamma_im", cc.gamma_im);
      read(k, "coherent_d", cc.coherent_d);
      read(k, "coherent_t", cc.coherent_t);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("config " + path + ": " + e.what());
  }
  return RunConfig::from_json(j, std::move(base));
}

// Rendering -----------------------------------------------------------------

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

using Cell = std::variant<std::monostate, double, long long, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string cell_text(const Cell& c) {
  if (std::holds_alternative<std::monostate>(c)) return "";
  if (const double* d = std::get_if<double>(&c)) return num(*d);
  if (const long long* i = std::get_if<long long>(&c)) return std::to_string(*i);
  if (const bool* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
  return std::get<std::string>(c);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string render_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + csv_field(t.columns[i]);
  out += "\r\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_field(cell_text(row[i]));
    out += "\r\n";
  }
  return out;
}

std::string md_field(std::string s) {
  std::string out;
  for (char ch : s) {
    if (ch == '|') out += "\\|";
    else if (ch == '\n') out += ' ';
    else out += ch;
  }
  return out;
}

std::string render_markdown_table(const Table& t) {
  std::string out = "|";
  for (const auto& c : t.columns) out += " " + md_field(c) + " |";
  out += "\n|";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += " --- |";
  out += "\n";
  for (const auto& row : t.rows) {
    out += "|";
    for (const auto& c : row) out += " " + md_field(cell_text(c)) + " |";
    out += "\n";
  }
  return out;
}

ojson cell_json(const Cell& c) {
  if (std::holds_alternative<std::monostate>(c)) return nullptr;
  if (const double* d = std::get_if<double>(&c)) return *d;
  if (const long long* i = std::get_if<long long>(&c)) return *i;
  if (const bool* b = std::get_if<bool>(&c)) return *b;
  return std::get<std::string>(c);
}

ojson table_json(const Table& t) {
  ojson rows = ojson::array();
  for (const auto& row : t.rows) {
    ojson o;
    for (std::size_t i = 0; i < row.size(); ++i) o[t.columns[i]] = cell_json(row[i]);
    rows.push_back(std::move(o));
  }
  return rows;
}

Cell opt_cell(const std::optional<double>& x) { return x ? Cell(*x) : Cell(); }
ojson opt_json(const std::optional<double>& x) { return x ? ojson(*x) : ojson(nullptr); }

ojson header(const RunConfig& config) {
  ojson j;
  j["tool"] = "hetlab";
  j["version"] = kToolVersion;
  j["mode"] = to_string(config.mode);
  j["config"] = config.to_json();
  return j;
}

void stamp(ojson& j, double seconds) { j["volatile"] = {{"wall_time_s", seconds}}; }

int emit(const RunConfig& config, const std::string& text, std::ostream& out, std::ostream& diag) {
  if (config.out.empty()) {
    out << text;
    out.flush();
    return out ? 0 : 1;
  }
  std::ofstream f(config.out, std::ios::binary | std::ios::trunc);
  if (!f) {
    diag << "hetlab: cannot write " << config.out << "\n";
    return 1;
  }
  f << text;
  f.close();
  if (!f) {
    diag << "hetlab: error while writing " << config.out << "\n";
    return 1;
  }
  return 0;
}

std::string markdown_deviations() {
  std::string out = "\n## Deviation notes\n\n";
  for (const auto& [key, text] : deviation_notes()) out += "- **" + key + "**: " + text + "\n";
  return out;
}

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

const std::vector<std::pair<std::string, std::string>>& deviation_notes() {
  static const std::vector<std::pair<std::string, std::string>> notes = {
      {"L3", "the ladder operators are printed as J1 +- i J+-; they are built as J+- = J1 +- i J2, the only "
             "reading compatible with the ladder commutators."},
      {"Z10/Z11", "cos/sin theta are printed once as [psi psi^dag]^(1/2) times the quadrature and once as the "
                  "quadrature divided by [psi psi^dag]^(1/2); the dividing form is checked."},
      {"C25", "the operator ordering of the printed right-hand side of [S, N] is ambiguous; left-to-right "
              "composition is compared with the direct commutator and reported without a threshold. The "
              "enforced claims are the mu -> 1 limit and first-order scaling in k."},
      {"HH8", "y = sigma (theta + delta) is printed without a trigonometric function; y = sigma cos(theta + delta) "
              "is fitted by least squares as a diagnostic only."},
      {"II9/II14", "b~ = b~1 + i b~2 is used so that psi = sqrt(A) e^{i alpha} a + sqrt(B) e^{i beta} b^dag; with "
                   "this convention the image quadrature enters y2 with a minus sign."},
      {"truncation", "on a rectangular Fock truncation psi, T and Z each lower the number difference by one and "
                     "are nilpotent. Their logarithms, square roots and inverses do not exist there, so theta, "
                     "the literal square-root form of R and every construction of S fail with the reason "
                     "recorded. Polar-factor quantities (D_SW, R) exist but keep an O(1/d) unitarity defect on "
                     "a fixed interior."},
  };
  return notes;
}

std::vector<std::string> default_convergence_ids() {
  std::vector<std::string> ids;
  for (const IdentityCase& c : builtin_catalog())
    if (c.kind == CaseKind::MatrixFunction || c.kind == CaseKind::ExactFullSpace) ids.push_back(c.id);
  return ids;
}

// verify --------------------------------------------------------------------

namespace {

RunSummary summarize(const std::vector<IdentityReport>& reports) {
  RunSummary s;
  std::map<std::string, double> maxima;
  std::vector<std::string> order;
  for (const IdentityReport& r : reports) {
    ++s.total;
    switch (r.status) {
      case CaseStatus::Pass: ++s.pass; break;
      case CaseStatus::Fail: ++s.fail; break;
      case CaseStatus::Skip: ++s.skip; break;
      case CaseStatus::ReportOnly: ++s.report_only; break;
    }
    if (r.residual) {
      const std::string k = to_string(r.kind);
      auto it = maxima.find(k);
      if (it == maxima.end()) {
        maxima[k] = *r.residual;
      } else {
        it->second = std::max(it->second, *r.residual);
      }
    }
  }
  for (const auto& kv : maxima) s.max_residual.push_back(kv);
  return s;
}

ojson summary_json(const RunSummary& s) {
  ojson j;
  j["total"] = s.total;
  j["pass"] = s.pass;
  j["fail"] = s.fail;
  j["skip"] = s.skip;
  j["report_only"] = s.report_only;
  ojson m = ojson::object();
  for (const auto& [k, v] : s.max_residual) m[k] = v;
  j["max_residual"] = m;
  return j;
}

ojson report_json(const IdentityReport& r) {
  ojson j;
  j["id"] = r.id;
  j["kind"] = to_string(r.kind);
  j["paper_ref"] = r.paper_ref;
  j["params"] = {{"A", r.params.A},         {"B", r.params.B},         {"alpha", r.params.alpha},
                 {"beta", r.params.beta},   {"d_a", r.params.d_a},     {"d_b", r.params.d_b},
                 {"margin", r.params.margin}, {"interior", r.params.interior}};
  j["residual"] = opt_json(r.residual);
  j["tolerance"] = r.tolerance;
  j["status"] = to_string(r.status);
  j["note"] = r.note;
  return j;
}

Table verify_table(const std::vector<IdentityReport>& reports) {
  Table t{{"id", "kind", "status", "residual", "tolerance", "A", "B", "alpha", "beta", "d_a", "d_b", "margin",
           "interior", "paper_ref", "note"},
          {}};
  for (const IdentityReport& r : reports) {
    t.rows.push_back({r.id, std::string(to_string(r.kind)), std::string(to_string(r.status)), opt_cell(r.residual),
                      r.tolerance, r.params.A, r.params.B, r.params.alpha, r.params.beta,
                      static_cast<long long>(r.params.d_a), static_cast<long long>(r.params.d_b),
                      static_cast<long long>(r.params.margin), r.params.interior, r.paper_ref, r.note});
  }
  return t;
}

std::vector<IdentityCase> selected_cases(const RunConfig& config) {
  std::vector<IdentityCase> out;
  const std::set<std::string> kinds(config.only.begin(), config.only.end());
  const std::set<std::string> ids(config.cases.begin(), config.cases.end());
  for (const IdentityCase& c : builtin_catalog()) {
    if (!kinds.empty() && !kinds.count(to_string(c.kind))) continue;
    if (!ids.empty() && !ids.count(c.id)) continue;
    out.push_back(c);
  }
  return out;
}

}  // namespace

int cmd_verify(const RunConfig& config, std::ostream& stdout_stream, std::ostream& diag) {
  const auto t0 = Clock::now();
  std::vector<IdentityReport> reports;
  std::vector<SweepPoint> sweep;
  try {
    config.validate();
    const HeterodyneParams params(config.A, config.B, config.alpha, config.beta);
    const TwoModeBasis basis(config.d_a, config.d_b);
    const std::vector<IdentityCase> cases = selected_cases(config);
    reports = run_catalog(cases, params, basis, config.tol, config.margin);
    if (config.random_points > 0) {
      sweep = randomized_sweep(config.seed, config.random_points, basis, config.tol, config.margin);
      const std::set<std::string> keep = [&] {
        std::set<std::string> s;
        for (const IdentityCase& c : cases) s.insert(c.id);
        return s;
      }();
      for (SweepPoint& pt : sweep) {
        std::erase_if(pt.reports, [&](const IdentityReport& r) { return !keep.count(r.id); });
      }
    }
  } catch (const std::exception& e) {
    diag << "hetlab verify: " << e.what() << "\n";
    return 1;
  }

  const RunSummary summary = summarize(reports);
  int sweep_failures = 0;
  ojson sweep_json = ojson::array();
  for (const SweepPoint& pt : sweep) {
    const RunSummary s = summarize(pt.reports);
    sweep_failures += s.fail;
    ojson failed = ojson::array();
    for (const IdentityReport& r : pt.reports)
      if (r.status == CaseStatus::Fail) failed.push_back(r.id);
    double worst = 0.0;
    for (const auto& kv : s.max_residual) worst = std::max(worst, kv.second);
    sweep_json.push_back({{"A", pt.params.A()},
                          {"B", pt.params.B()},
                          {"alpha", pt.params.alpha()},
                          {"beta", pt.params.beta()},
                          {"pass", s.pass},
                          {"fail", s.fail},
                          {"skip", s.skip},
                          {"max_residual", worst},
                          {"failed", failed}});
  }

  std::string text;
  switch (config.format) {
    case OutputFormat::Json: {
      ojson j = header(config);
      j["summary"] = summary_json(summary);
      ojson cases = ojson::array();
      for (const IdentityReport& r : reports) cases.push_back(report_json(r));
      j["cases"] = cases;
      if (!sweep.empty()) j["random_sweep"] = {{"seed", config.seed}, {"points", sweep_json}};
      ojson dev = ojson::array();
      for (const auto& [k, v] : deviation_notes()) dev.push_back({{"id", k}, {"note", v}});
      j["deviations"] = dev;
      stamp(j, since(t0));
      text = j.dump(2) + "\n";
      break;
    }
    case OutputFormat::Csv: text = render_csv(verify_table(reports)); break;
    case OutputFormat::Markdown: {
      std::ostringstream os;
      os << "# hetlab verify\n\n";
      os << "Basis " << config.d_a << "x" << config.d_b << ", A=" << num(config.A) << ", B=" << num(config.B)
         << ", alpha=" << num(config.alpha) << ", beta=" << num(config.beta) << ", margin=" << config.margin
         << ".\n\n";
      os << "Pass " << summary.pass << ", fail " << summary.fail << ", skip " << summary.skip << ", report-only "
         << summary.report_only << " (total " << summary.total << ").\n\n";
      Table t{{"id", "kind", "status", "residual", "tolerance", "interior", "note"}, {}};
      for (const IdentityReport& r : reports) {
        t.rows.push_back({r.id, std::string(to_string(r.kind)), std::string(to_string(r.status)),
                          opt_cell(r.residual), r.tolerance, r.params.interior, r.note});
      }
      os << render_markdown_table(t);
      if (!sweep.empty()) {
        os << "\n## Randomized sweep (seed " << config.seed << ")\n\n";
        Table st{{"A", "B", "alpha", "beta", "pass", "fail", "max_residual"}, {}};
        for (const auto& p : sweep_json) {
          st.rows.push_back({p["A"].get<double>(), p["B"].get<double>(), p["alpha"].get<double>(),
                             p["beta"].get<double>(), p["pass"].get<long long>(), p["fail"].get<long long>(),
                             p["max_residual"].get<double>()});
        }
        os << render_markdown_table(st);
      }
      os << markdown_deviations();
      text = os.str();
      break;
    }
  }
  if (emit(config, text, stdout_stream, diag) != 0) return 1;
  return summary.fail + sweep_failures > 0 ? 2 : 0;
}

// sweep ---------------------------------------------------------------------

int cmd_sweep(const RunConfig& config, std::ostream& stdout_stream, std::ostream& diag) {
  const auto t0 = Clock::now();
  Table t{{"r", "k_exact", "k_first_order", "k_bound_ok", "deficit_SSdag", "deficit_SdagS", "sn_residual", "error"},
          {}};
  bool failed = false;
  try {
    config.validate();
    std::vector<double> grid = config.k_grid;
    std::sort(grid.begin(), grid.end(), std::greater<>());
    const TwoModeBasis basis(config.d_a, config.d_b);
    const SubspaceProjector interior = photon_projector(basis, kFixedInteriorPhotons);
    for (double r : grid) {
      const KExpansion k = k_expansion(r);
      const bool bound_ok = std::abs(k.k_exact - k.k_first_order) <= 2.0 * r * r * r;
      std::vector<Cell> row{r, k.k_exact, k.k_first_order, bound_ok, {}, {}, {}, {}};
      failed = failed || !bound_ok;
      try {
        const HeterodyneParams p = HeterodyneParams::from_frequency_ratio(r, config.alpha, config.beta);
        const CavesOperators ops = build_caves_operators(p, basis, config.tol);
        const UnitarityProducts u = unitarity_products(ops, config.tol, interior);
        const SnCommutatorReport sn = sn_commutator(ops, number_diff(basis), config.tol, interior);
        row[4] = u.deficit_SSdag;
        row[5] = u.deficit_SdagS;
        row[6] = sn.sw_limit_residual;
      } catch (const std::exception& e) {
        row[7] = std::string(e.what());
        failed = true;
      }
      t.rows.push_back(std::move(row));
    }
  } catch (const std::exception& e) {
    diag << "hetlab sweep: " << e.what() << "\n";
    return 1;
  }

  std::string text;
  switch (config.format) {
    case OutputFormat::Csv: text = render_csv(t); break;
    case OutputFormat::Markdown:
      text = "# hetlab sweep\n\nBasis " + std::to_string(config.d_a) + "x" + std::to_string(config.d_b) +
             ", interior p+q<=" + std::to_string(kFixedInteriorPhotons) + ".\n\n" + render_markdown_table(t) +
             markdown_deviations();
      break;
    case OutputFormat::Json: {
      ojson j = header(config);
      j["interior"] = "p+q<=" + std::to_string(kFixedInteriorPhotons);
      j["rows"] = table_json(t);
      stamp(j, since(t0));
      text = j.dump(2) + "\n";
      break;
    }
  }
  if (emit(config, text, stdout_stream, diag) != 0) return 1;
  return failed ? 2 : 0;
}

// converge ------------------------------------------------------------------

int cmd_converge(const RunConfig& config, std::ostream& stdout_stream, std::ostream& diag) {
  const auto t0 = Clock::now();
  std::vector<ConvergenceCase> study;
  try {
    config.validate();
    const HeterodyneParams params(config.A, config.B, config.alpha, config.beta);
    const std::vector<std::string> ids = config.cases.empty() ? default_convergence_ids() : config.cases;
    study = convergence_study(ids, params, config.dims, config.tol);
  } catch (const std::exception& e) {
    diag << "hetlab converge: " << e.what() << "\n";
    return 1;
  }

  bool failed = false;
  Table t{{"case", "d", "residual", "verdict", "error"}, {}};
  for (const ConvergenceCase& c : study) {
    failed = failed || (c.verdict != "exact" && c.verdict != "decreasing");
    for (const ConvergenceRow& r : c.rows) {
      t.rows.push_back({c.id, static_cast<long long>(r.d), opt_cell(r.residual), c.verdict,
                        r.error.empty() ? Cell() : Cell(r.error)});
    }
  }

  std::string text;
  switch (config.format) {
    case OutputFormat::Csv: text = render_csv(t); break;
    case OutputFormat::Markdown:
      text = "# hetlab converge\n\nFixed interior p+q<=" + std::to_string(kFixedInteriorPhotons) +
             ", A=" + num(config.A) + ", B=" + num(config.B) + ".\n\n" + render_markdown_table(t) +
             markdown_deviations();
      break;
    case OutputFormat::Json: {
      ojson j = header(config);
      j["interior"] = "p+q<=" + std::to_string(kFixedInteriorPhotons);
      ojson cases = ojson::array();
      for (const ConvergenceCase& c : study) {
        ojson rows = ojson::array();
        for (const ConvergenceRow& r : c.rows) {
          rows.push_back({{"d", r.d},
                          {"residual", opt_json(r.residual)},
                          {"error", r.error.empty() ? ojson(nullptr) : ojson(r.error)}});
        }
        cases.push_back({{"id", c.id}, {"verdict", c.verdict}, {"rows", rows}});
      }
      j["cases"] = cases;
      stamp(j, since(t0));
      text = j.dump(2) + "\n";
      break;
    }
  }
  if (emit(config, text, stdout_stream, diag) != 0) return 1;
  return failed ? 2 : 0;
}

// classical -----------------------------------------------------------------

namespace {

struct Check {
  std::string name;
  std::optional<double> value;
  double tolerance;
  bool pass;
};

OscillatorSpec oscillator_spec(const ClassicalConfig& c) {
  if (c.profile == "constant") return OscillatorSpec::harmonic(c.omega0, c.t0, c.t1, c.step);
  OscillatorSpec s;
  s.omega_squared = c.profile == "linear" ? OmegaSquaredProfile::linear(c.c0, c.c1) : load_profile_csv(c.profile_csv);
  s.t0 = c.t0;
  s.t1 = c.t1;
  s.step = c.step;
  return s;
}

}  // namespace

int cmd_classical(const RunConfig& config, std::ostream& stdout_stream, std::ostream& diag) {
  const auto t0 = Clock::now();
  OscillatorSpec spec;
  try {
    config.validate();
    spec = oscillator_spec(config.classical);
    spec.validate();
  } catch (const std::exception& e) {
    diag << "hetlab classical: " << e.what() << "\n";
    return 1;
  }

  const ClassicalConfig& cc = config.classical;
  ClassicalReport rep;
  CoherentExpectations coh;
  std::string run_error;
  try {
    rep = run_classical(spec);
  } catch (const std::exception& e) {
    run_error = e.what();
  }
  const Complex gamma{cc.gamma_re, cc.gamma_im};
  const double omega_c = cc.profile == "constant" ? cc.omega0 : 1.0;
  double coherent_error = 0.0;
  try {
    coh = coherent_expectations(gamma, omega_c, cc.coherent_t, cc.coherent_d);
    coherent_error = std::max({std::abs(coh.a_t - std::conj(gamma) * std::polar(1.0, omega_c * cc.coherent_t)),
                               std::abs(coh.b_dag_t - gamma * std::polar(1.0, -omega_c * cc.coherent_t)),
                               std::abs(coh.product - std::norm(gamma))});
  } catch (const std::exception& e) {
    diag << "hetlab classical: " << e.what() << "\n";
    return 1;
  }

  std::vector<Check> checks;
  if (run_error.empty()) {
    checks.push_back({"wronskian_drift", rep.wronskian_drift, 1e-8, rep.wronskian_drift <= 1e-8});
    checks.push_back({"emp_residual", rep.emp_residual, 1e-6, rep.emp_residual <= 1e-6});
    checks.push_back({"route_discrepancy", rep.route_discrepancy, 1e-6, rep.route_discrepancy <= 1e-6});
    checks.push_back({"theta_increasing", std::nullopt, 0.0, rep.theta_increasing});
    if (rep.constant_omega_error) {
      checks.push_back({"constant_omega_error", *rep.constant_omega_error, 1e-8, *rep.constant_omega_error <= 1e-8});
    }
  } else {
    checks.push_back({"integration", std::nullopt, 0.0, false});
  }
  checks.push_back({"coherent_expectations", coherent_error, 1e-8, coherent_error <= 1e-8 && coh.tail_ok});
  const bool failed = std::any_of(checks.begin(), checks.end(), [](const Check& c) { return !c.pass; });

  Table t{{"check", "value", "tolerance", "status"}, {}};
  for (const Check& c : checks) {
    t.rows.push_back({c.name, opt_cell(c.value), c.tolerance, std::string(c.pass ? "pass" : "fail")});
  }

  auto cplx = [](Complex z) { return ojson::array({z.real(), z.imag()}); };
  std::string text;
  switch (config.format) {
    case OutputFormat::Csv: text = render_csv(t); break;
    case OutputFormat::Markdown: {
      std::ostringstream os;
      os << "# hetlab classical\n\nProfile " << spec.omega_squared.describe() << " on [" << num(spec.t0) << ", "
         << num(spec.t1) << "], step " << num(spec.step) << ".\n\n";
      if (!run_error.empty()) os << "Integration failed: " << run_error << "\n\n";
      else os << "theta_cl(t1) = " << num(rep.theta_end) << ", W0 = " << num(rep.W0) << ".\n\n";
      os << render_markdown_table(t) << markdown_deviations();
      text = os.str();
      break;
    }
    case OutputFormat::Json: {
      ojson j = header(config);
      j["profile"] = spec.omega_squared.describe();
      ojson res;
      if (run_error.empty()) {
        res["W0"] = rep.W0;
        res["wronskian_drift"] = rep.wronskian_drift;
        res["halving_change"] = rep.halving_change;
        res["emp_residual"] = rep.emp_residual;
        res["emp_fd_residual"] = rep.emp_fd_residual;
        res["route_discrepancy"] = rep.route_discrepancy;
        res["theta_end"] = rep.theta_end;
        res["elapsed"] = rep.elapsed;
        res["constant_omega_error"] = opt_json(rep.constant_omega_error);
        res["theta_increasing"] = rep.theta_increasing;
        res["amplitude_phase_misfit"] = rep.amplitude_phase_misfit;
      } else {
        res["error"] = run_error;
      }
      res["coherent"] = {{"gamma", cplx(gamma)},          {"omega0", omega_c},
                         {"t", cc.coherent_t},            {"d", cc.coherent_d},
                         {"a_t", cplx(coh.a_t)},          {"b_dag_t", cplx(coh.b_dag_t)},
                         {"product", cplx(coh.product)},  {"max_error", coherent_error},
                         {"tail_bound", coh.tail_bound}};
      j["results"] = res;
      ojson cj = ojson::array();
      for (const Check& c : checks) {
        cj.push_back({{"name", c.name},
                      {"value", opt_json(c.value)},
                      {"tolerance", c.tolerance},
                      {"status", c.pass ? "pass" : "fail"}});
      }
      j["checks"] = cj;
      j["notes"] = {{"amplitude_phase_misfit", "report-only; see the HH8 deviation note"}};
      stamp(j, since(t0));
      text = j.dump(2) + "\n";
      break;
    }
  }
  if (emit(config, text, stdout_stream, diag) != 0) return 1;
  if (!run_error.empty()) diag << "hetlab classical: " << run_error << "\n";
  return failed ? 2 : 0;
}

int run(const RunConfig& config, std::ostream& stdout_stream, std::ostream& diag) {
  switch (config.mode) {
    case RunMode::Verify: return cmd_verify(config, stdout_stream, diag);
    case RunMode::Sweep: return cmd_sweep(config, stdout_stream, diag);
    case RunMode::Converge: return cmd_converge(config, stdout_stream, diag);
    case RunMode::Classical: return cmd_classical(config, stdout_stream, diag);
  }
  return 1;
}

}  // namespace hetlab
