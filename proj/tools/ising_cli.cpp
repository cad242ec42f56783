// Command-line front end: build propagator spectra, export observable fields,
// evaluate fermion/spin correlations, construct Poincare-Steklov operators,
// check domain gluing, and run the cross-formalism verification suites.
//
// Exit codes: 0 success, 1 verification/computation failure, 2 usage error.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ising/observables.hpp"
#include "ising/propagator.hpp"
#include "ising/rps.hpp"
#include "ising/shol.hpp"
#include "ising/transfer.hpp"

using namespace ising;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double parse_beta(const std::string& s) {
  if (s == "crit") return beta_critical();
  try {
    size_t used = 0;
    double b = std::stod(s, &used);
    if (used != s.size()) throw UsageError("bad beta: " + s);
    return b;
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception&) {
    throw UsageError("bad beta: " + s);
  }
}

std::vector<double> parse_beta_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_beta(item));
  if (out.empty()) throw UsageError("empty beta list");
  return out;
}

Coord2 parse_coord(const std::string& s) {
  int x = 0, y = 0;
  char comma = 0;
  std::istringstream ss(s);
  if (!(ss >> x >> comma >> y) || comma != ',' || !(ss >> std::ws).eof())
    throw UsageError("bad coordinate (want \"x2,y2\"): " + s);
  return {x, y};
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct DomainSpec {
  Domain dom;
  std::optional<std::pair<int, int>> rect;  // width, height if rectangular
};

DomainSpec parse_domain(const std::string& arg) {
  json j;
  try {
    if (!arg.empty() && arg.front() == '{') {
      j = json::parse(arg);
    } else {
      std::ifstream in(arg);
      if (!in) throw UsageError("cannot open domain file: " + arg);
      in >> j;
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad domain JSON: ") + e.what());
  }
  try {
    std::string type = j.at("type");
    if (type == "rectangle") {
      int w = j.at("width"), h = j.at("height");
      return {build_rectangle(w, h), std::pair{w, h}};
    }
    if (type == "faces") {
      std::vector<Coord2> faces;
      for (const auto& f : j.at("faces")) faces.push_back({f.at(0), f.at(1)});
      return {build_from_faces(faces), std::nullopt};
    }
    throw UsageError("unknown domain type: " + type);
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad domain JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("bad domain: ") + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << text;
}

std::string field_csv(const Domain& dom, const ComplexField& f,
                      std::optional<Coord2> skip = std::nullopt) {
  std::string out = "x2,y2,re,im\n";
  for (Coord2 e : dom.edges) {
    if (skip && e == *skip) continue;
    auto it = f.find(e);
    if (it == f.end()) continue;
    out += std::to_string(e.x) + "," + std::to_string(e.y) + "," +
           fmt17(it->second.real()) + "," + fmt17(it->second.imag()) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// propagator

int cmd_propagator(int width, const std::string& beta_s, const std::string& out) {
  if (width < 3) throw UsageError("propagator: need width >= 3");
  double beta = parse_beta(beta_s);
  int n = width - 1;
  IsingCoupling k(beta);
  auto P = propagator_matrix(n, k);
  bool pairing_ok = true;
  std::vector<double> lambdas;
  try {
    auto split = spectral_split(P);
    for (double l : split.lam) lambdas.push_back(l);
    for (auto it = split.lam.rbegin(); it != split.lam.rend(); ++it)
      lambdas.push_back(1.0 / *it);
  } catch (const std::exception&) {
    pairing_ok = false;
    auto eig = sym_eig(P.m);
    for (long i = eig.values.size() - 1; i >= 0; --i) lambdas.push_back(eig.values(i));
  }
  json j{{"n", n}, {"beta", beta}, {"lambdas", lambdas}, {"pairing_ok", pairing_ok}};
  write_text(out, j.dump(2) + "\n");
  return pairing_ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// observable

ComplexField observable_transfer(const DomainSpec& ds, Coord2 a, int stub,
                                 const IsingCoupling& k) {
  if (!ds.rect)
    throw UsageError("observable: method=transfer needs a rectangle domain");
  if (!a.is_hedge() || a.y != 0)
    throw UsageError(
        "observable: method=transfer needs a bottom-row horizontal source");
  RectangleSpec box{ds.rect->first, ds.rect->second};
  TransferSystem sys(box, k);
  auto [psi_a, psibar_a] = sys.fermion_pair(a);
  ComplexField f;
  for (Coord2 z : ds.dom.edges) {
    if (z == a) continue;
    auto [psi_z, psibar_z] = sys.fermion_pair(z);
    cd mixed = sys.vacuum_ratio(psi_z * psibar_a);  // f_up + i f_down
    cd same = sys.vacuum_ratio(psi_z * psi_a);      // -f_up + i f_down
    f[z] = stub > 0 ? (mixed - same) / 2.0 : (mixed + same) / (2.0 * cd(0, 1));
  }
  return f;
}

ComplexField observable_rbvp(const DomainSpec& ds, Coord2 a, int stub,
                             const IsingCoupling& k) {
  auto conv = BoundaryLineConvention::calibrated();
  if (!a.is_hedge()) throw UsageError("observable: source must be a horizontal edge");
  bool boundary = ds.dom.is_boundary_edge(a);
  std::vector<RbvpConstraint> cs;
  if (boundary) {
    if (stub < 0)
      throw UsageError("observable: rbvp down-observable needs an interior source");
    cs = boundary_line_constraints(ds.dom, conv, {a});
    cs.push_back({RbvpConstraint::Kind::fixed_value, a, cd(1, 0), 0});
  } else {
    cs = boundary_line_constraints(ds.dom, conv);
    cd res = stub > 0 ? cd(0, 1) / (2 * pi) : cd(-1 / (2 * pi), 0);
    cs.push_back({RbvpConstraint::Kind::residue, a, res, 0});
  }
  ComplexField f = solve_rbvp(ds.dom, k, cs).field;
  f.erase(a);
  return f;
}

int cmd_observable(const std::string& domain_s, const std::string& kind,
                   const std::string& source_s, const std::string& sources_s,
                   const std::string& method, const std::string& beta_s,
                   const std::string& out) {
  DomainSpec ds = parse_domain(domain_s);
  IsingCoupling k(parse_beta(beta_s));
  if (kind == "multi") {
    if (method != "contour")
      throw UsageError("observable: kind=multi supports method=contour only");
    if (sources_s.empty()) throw UsageError("observable: kind=multi needs --sources");
    MultiSourceSpec spec;
    std::stringstream ss(sources_s);
    std::string item;
    const cd lam = lambda_pow(1), lam3 = lambda_pow(3);
    while (std::getline(ss, item, ';')) {
      auto colon = item.rfind(':');
      if (colon == std::string::npos)
        throw UsageError("observable: bad source (want \"x2,y2:up|down\"): " + item);
      Coord2 z = parse_coord(item.substr(0, colon));
      std::string arrow = item.substr(colon + 1);
      if (arrow == "up")
        spec.sources.push_back({z, {0, 1}, lam});
      else if (arrow == "down")
        spec.sources.push_back({z, {0, -1}, lam3});
      else
        throw UsageError("observable: bad arrow: " + arrow);
    }
    cd v = multipoint_observable(ds.dom, spec, k);
    write_text(out, fmt17(v.real()) + "," + fmt17(v.imag()) + "\n");
    return 0;
  }
  if (kind != "up" && kind != "down") throw UsageError("observable: bad kind " + kind);
  if (source_s.empty()) throw UsageError("observable: need --source");
  Coord2 a = parse_coord(source_s);
  int stub = kind == "up" ? +1 : -1;
  ComplexField f;
  if (method == "contour")
    f = two_point_observable(ds.dom, {a, stub}, k);
  else if (method == "rbvp")
    f = observable_rbvp(ds, a, stub, k);
  else if (method == "transfer")
    f = observable_transfer(ds, a, stub, k);
  else
    throw UsageError("observable: bad method " + method);
  write_text(out, field_csv(ds.dom, f, a));
  return 0;
}

// ---------------------------------------------------------------------------
// diff

int cmd_diff(const std::string& a_path, const std::string& b_path, double tol) {
  auto read_csv = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open: " + path);
    std::map<std::pair<int, int>, cd> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      int x, y;
      double re, im;
      if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &x, &y, &re, &im) != 4)
        throw UsageError("bad CSV row in " + path + ": " + line);
      rows[{x, y}] = cd(re, im);
    }
    return rows;
  };
  auto a = read_csv(a_path), b = read_csv(b_path);
  if (a.size() != b.size()) {
    std::cerr << "row sets differ: " << a.size() << " vs " << b.size() << "\n";
    return 1;
  }
  double worst = 0;
  for (const auto& [key, va] : a) {
    auto it = b.find(key);
    if (it == b.end()) {
      std::cerr << "missing row " << key.first << "," << key.second << "\n";
      return 1;
    }
    worst = std::max(worst, std::abs(va - it->second));
  }
  std::cout << "max_abs_diff," << fmt17(worst) << "\n";
  return worst < tol ? 0 : 1;
}

// ---------------------------------------------------------------------------
// correlation

int cmd_correlation(int width, int height, const std::string& beta_s,
                    const std::string& insertions_s, const std::string& spins_s) {
  IsingCoupling k(parse_beta(beta_s));
  RectangleSpec box{width, height};
  if (!spins_s.empty()) {
    std::vector<Coord2> vs;
    std::stringstream ss(spins_s);
    std::string item;
    while (std::getline(ss, item, ';')) vs.push_back(parse_coord(item));
    double v = spin_correlation(box, vs, k);
    std::cout << fmt17(v) << ",0\n";
    return 0;
  }
  if (insertions_s.empty())
    throw UsageError("correlation: need --insertions or --spins");
  std::vector<FermionInsertion> ins;
  std::stringstream ss(insertions_s);
  std::string item;
  using K = FermionInsertion::Kind;
  while (std::getline(ss, item, ';')) {
    auto colon = item.find(':');
    if (colon == std::string::npos)
      throw UsageError("correlation: bad insertion (want \"kind:x2,y2\"): " + item);
    std::string kind = item.substr(0, colon);
    Coord2 z = parse_coord(item.substr(colon + 1));
    if (kind == "psi")
      ins.push_back({K::psi, z});
    else if (kind == "psibar")
      ins.push_back({K::psibar, z});
    else if (kind == "up")
      ins.push_back({K::psi_up, z});
    else if (kind == "down")
      ins.push_back({K::psi_down, z});
    else
      throw UsageError("correlation: bad kind " + kind);
  }
  cd v = fermion_correlation(box, ins, k);
  std::cout << fmt17(v.real()) << "," << fmt17(v.imag()) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// rps

int cmd_rps(const std::string& domain_s, int row, const std::string& method,
            const std::string& beta_s, const std::string& out) {
  DomainSpec ds = parse_domain(domain_s);
  IsingCoupling k(parse_beta(beta_s));
  RPSOperator u;
  if (method == "direct")
    u = build_rps_direct(ds.dom, cut_row(ds.dom, row), k);
  else if (method == "kernel")
    u = build_rps_kernel(ds.dom, cut_row(ds.dom, row), k);
  else if (method == "blocks") {
    if (!ds.rect || row != 0)
      throw UsageError("rps: method=blocks needs a rectangle domain and --row 0");
    u = build_rps_blocks(ds.rect->first, ds.rect->second, k);
  } else {
    throw UsageError("rps: bad method " + method);
  }
  Eigen::JacobiSVD<RealMatrix> svd(u.m);
  double smin = svd.singularValues()(svd.singularValues().size() - 1);
  double smax = svd.singularValues()(0);
  json jb = json::array();
  for (Coord2 e : u.b) jb.push_back(std::to_string(e.x) + "," + std::to_string(e.y));
  json jm = json::array();
  for (long i = 0; i < u.m.rows(); ++i) {
    json r = json::array();
    for (long c = 0; c < u.m.cols(); ++c) r.push_back(u.m(i, c));
    jm.push_back(r);
  }
  json j{{"b", jb}, {"matrix", jm}, {"method", u.method}};
  if (smin > 0 && std::isfinite(smax / smin))
    j["cond"] = smax / smin;
  else
    j["cond"] = nullptr;
  write_text(out, j.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// glue-check

int cmd_glue_check(int width, int height, int cut, const std::string& betas_s,
                   double tol, const std::string& out) {
  json checks = json::array();
  bool all_ok = true;
  for (double beta : parse_beta_list(betas_s)) {
    IsingCoupling k(beta);
    Domain dom = build_rectangle(width, height);
    auto [d1, d2] = split_domain(dom, cut);
    auto b = cut_row(dom, cut);
    auto u1 = build_rps_direct(d1, b, k);
    auto u2 = build_rps_direct(d2, b, k);
    GlueOperator q = glue(u1, u2);
    double w_across = 0, w_cut = 0, w_same = 0;
    for (Coord2 x : cut_row(dom, 0)) {
      ComplexField oracle = two_point_observable(dom, {x, +1}, k);
      ComplexField across = pair_across_field(d1, d2, u2, q, x, +1, k);
      for (Coord2 y : d2.edges)
        w_across = std::max(w_across, std::abs(across.at(y) - oracle.at(y)));
      ComplexField f1 = two_point_observable(d1, {x, +1}, k);
      std::vector<cd> f1b;
      for (Coord2 e : b) f1b.push_back(f1.at(e));
      auto cutvals = observable_on_cut(u2, q, f1b);
      for (size_t i = 0; i < b.size(); ++i)
        w_cut = std::max(w_cut, std::abs(cutvals[i] - oracle.at(b[i])));
      ComplexField same = pair_same_side_field(d1, u1, u2, x, +1, k);
      for (Coord2 y : d1.edges)
        if (y != x) w_same = std::max(w_same, std::abs(same.at(y) - oracle.at(y)));
    }
    for (auto [name, err] : {std::pair<const char*, double>{"pair_across", w_across},
                             {"observable_on_cut", w_cut},
                             {"pair_same_side", w_same}}) {
      bool ok = err < tol;
      all_ok = all_ok && ok;
      checks.push_back({{"name", name},
                        {"beta", beta},
                        {"max_abs_err", err},
                        {"tol", tol},
                        {"pass", ok}});
    }
  }
  json j{{"width", width}, {"height", height}, {"cut", cut}, {"checks", checks},
         {"pass", all_ok}};
  write_text(out, j.dump(2) + "\n");
  return all_ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// verify

struct Check {
  std::string name;
  double max_abs_err = 0;
  double tol = 0;
  bool pass = false;
  double seconds = 0;
};

template <typename F>
Check run_check(const std::string& name, double tol, F&& body) {
  Check c{name, 0, tol, false, 0};
  auto t0 = std::chrono::steady_clock::now();
  try {
    c.max_abs_err = body();
    c.pass = c.max_abs_err < tol;
  } catch (const std::exception& e) {
    c.max_abs_err = std::numeric_limits<double>::infinity();
    c.pass = false;
    std::cerr << name << ": " << e.what() << "\n";
  }
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return c;
}

double suite_propagator(const std::vector<double>& betas, int max_width) {
  double worst = 0;
  for (double beta : betas) {
    IsingCoupling k(beta);
    for (int n = 2; n <= max_width - 1; ++n) {
      auto P = propagator_matrix(n, k);
      double scale = P.m.cwiseAbs().maxCoeff();
      worst = std::max(worst, (P.m - P.m.transpose()).cwiseAbs().maxCoeff() / scale);
      RealMatrix J = RealMatrix::Zero(2 * n, 2 * n);
      J.topRightCorner(n, n).setIdentity();
      J.bottomLeftCorner(n, n).setIdentity();
      worst = std::max(
          worst, (P.m.inverse() - J * P.m * J).cwiseAbs().maxCoeff() / scale);
      auto split = spectral_split(P);  // throws on pairing failure
      (void)split;
    }
  }
  return worst;
}

double suite_induced_rotation(const std::vector<double>& betas, int max_width) {
  double worst = 0;
  for (double beta : betas) {
    IsingCoupling k(beta);
    for (int w = 3; w <= std::min(max_width, 6); ++w) {
      int n = w - 1;
      SpinBasis basis(0, w - 1);
      auto V = build_transfer(basis, k);
      ComplexMatrix brute = induced_rotation_bruteforce(V, basis);
      ComplexMatrix closed = induced_rotation_closed_form(n, k);
      worst = std::max(worst, (brute - closed).cwiseAbs().maxCoeff());
      ComplexMatrix prop = complexified_propagator(n, k).m;
      worst = std::max(worst, (closed - prop).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

double suite_spectrum(const std::vector<double>& betas, int max_width) {
  double worst = 0;
  for (double beta : betas) {
    IsingCoupling k(beta);
    for (int w = 3; w <= std::min(max_width, 6); ++w) {
      SpinBasis basis(0, w - 1);
      auto V = build_transfer(basis, k);
      auto spec = tm_spectrum(V);
      auto gamma = gamma_spectrum(spectral_split(propagator_matrix(basis.n, k)), spec[0]);
      for (size_t i = 0; i < spec.size(); ++i)
        worst = std::max(worst, std::abs(spec[i] - gamma[i]) / gamma[i]);
    }
  }
  return worst;
}

double suite_correlations(const std::vector<double>& betas, int max_width) {
  double worst = 0;
  int w = std::min(max_width, 4);
  Domain dom = build_rectangle(w, 4);
  RectangleSpec box{w, 4};
  for (double beta : betas) {
    IsingCoupling k(beta);
    Coord2 a{3, 0};
    auto up = two_point_observable(dom, {a, +1}, k);
    auto down = two_point_observable(dom, {a, -1}, k);
    TransferSystem sys(box, k);
    auto [psi_a, psibar_a] = sys.fermion_pair(a);
    for (Coord2 z : dom.edges) {
      if (z == a) continue;
      auto [psi_z, psibar_z] = sys.fermion_pair(z);
      cd fu = up.at(z), fd = down.at(z);
      worst = std::max(worst,
                       std::abs(sys.vacuum_ratio(psi_z * psibar_a) - (fu + cd(0, 1) * fd)));
      worst = std::max(worst,
                       std::abs(sys.vacuum_ratio(psi_z * psi_a) - (-fu + cd(0, 1) * fd)));
    }
  }
  return worst;
}

double suite_pfaffian(const std::vector<double>& betas, int /*max_width*/) {
  double worst = 0;
  using K = FermionInsertion::Kind;
  RectangleSpec box{5, 3};
  std::vector<FermionInsertion> fi{
      {K::psi, {1, 0}}, {K::psibar, {3, 0}}, {K::psi, {5, 2}}, {K::psibar, {7, 4}}};
  for (double beta : betas) {
    IsingCoupling k(beta);
    cd four = fermion_correlation(box, fi, k);
    ComplexMatrix M = ComplexMatrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        M(i, j) = fermion_correlation(box, {fi[size_t(i)], fi[size_t(j)]}, k);
        M(j, i) = -M(i, j);
      }
    worst = std::max(worst, std::abs(four - pfaffian_complex(M)));
  }
  return worst;
}

double suite_rps(const std::vector<double>& betas, int max_width) {
  double worst = 0;
  for (double beta : betas) {
    IsingCoupling k(beta);
    for (int w = 3; w <= std::min(max_width, 5); ++w)
      for (int h = 2; h <= 4; ++h) {
        Domain dom = build_rectangle(w, h);
        auto b = cut_row(dom, 0);
        auto direct = build_rps_direct(dom, b, k);
        auto blocks = build_rps_blocks(w, h, k);
        worst = std::max(worst, (direct.m - blocks.m).cwiseAbs().maxCoeff());
        auto kernel = build_rps_kernel(dom, b, k);
        worst = std::max(worst, (direct.m - kernel.m).cwiseAbs().maxCoeff());
      }
    // One gluing consistency check.
    Domain dom = build_rectangle(4, 5);
    auto [d1, d2] = split_domain(dom, 2);
    auto b = cut_row(dom, 2);
    auto u1 = build_rps_direct(d1, b, k);
    auto u2 = build_rps_direct(d2, b, k);
    GlueOperator q = glue(u1, u2);
    Coord2 x{1, 0};
    ComplexField oracle = two_point_observable(dom, {x, +1}, k);
    ComplexField across = pair_across_field(d1, d2, u2, q, x, +1, k);
    for (Coord2 y : d2.edges)
      worst = std::max(worst, std::abs(across.at(y) - oracle.at(y)));
  }
  return worst;
}

int cmd_verify(const std::string& suite, int max_width, const std::string& betas_s,
               double tol, const std::string& report_path) {
  auto betas = parse_beta_list(betas_s);
  using SuiteFn = double (*)(const std::vector<double>&, int);
  std::vector<std::pair<std::string, SuiteFn>> suites{
      {"propagator", suite_propagator},   {"induced-rotation", suite_induced_rotation},
      {"spectrum", suite_spectrum},       {"correlations", suite_correlations},
      {"pfaffian", suite_pfaffian},       {"rps", suite_rps}};
  std::vector<std::pair<std::string, SuiteFn>> to_run;
  if (suite == "all") {
    to_run = suites;
  } else {
    for (auto& s : suites)
      if (s.first == suite) to_run.push_back(s);
    if (to_run.empty()) throw UsageError("verify: unknown suite " + suite);
  }
  json checks = json::array();
  bool all_ok = true;
  for (auto& [name, fn] : to_run) {
    Check c = run_check(name, tol, [&] { return fn(betas, max_width); });
    all_ok = all_ok && c.pass;
    checks.push_back({{"name", c.name},
                      {"max_abs_err", c.max_abs_err},
                      {"tol", c.tol},
                      {"pass", c.pass},
                      {"seconds", c.seconds}});
  }
  json j{{"suite", suite},   {"max_width", max_width}, {"betas", betas},
         {"tol", tol},       {"checks", checks},       {"pass", all_ok}};
  write_text(report_path, j.dump(2) + "\n");
  if (report_path != "" && report_path != "-") std::cout << (all_ok ? "pass" : "fail") << "\n";
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact 2D Ising model: transfer matrix and discrete analysis"};
  app.require_subcommand(1);

  // propagator
  auto* sp = app.add_subcommand("propagator", "spectrum of the row propagation matrix");
  int p_width = 0;
  std::string p_beta, p_out = "-";
  bool p_crit = false;
  sp->add_option("--width", p_width, "number of vertex columns")->required();
  sp->add_option("--beta", p_beta, "coupling, or 'crit'");
  sp->add_flag("--critical", p_crit, "use the critical coupling");
  sp->add_option("--out", p_out, "output file (default stdout)");

  // observable
  auto* so = app.add_subcommand("observable", "two-point / multipoint observable fields");
  std::string o_domain, o_kind = "up", o_source, o_sources, o_method = "contour",
              o_beta = "crit", o_out = "-";
  so->add_option("--domain", o_domain, "domain JSON (inline or file)")->required();
  so->add_option("--kind", o_kind, "up | down | multi");
  so->add_option("--source", o_source, "source edge \"x2,y2\"");
  so->add_option("--sources", o_sources, "multi sources \"x2,y2:up;x2,y2:down\"");
  so->add_option("--method", o_method, "contour | rbvp | transfer");
  so->add_option("--beta", o_beta, "coupling, or 'crit'");
  so->add_option("--out", o_out, "output file (default stdout)");

  // diff
  auto* sd = app.add_subcommand("diff", "compare two field CSV files");
  std::string d_a, d_b;
  double d_tol = 1e-9;
  sd->add_option("a", d_a, "first CSV")->required();
  sd->add_option("b", d_b, "second CSV")->required();
  sd->add_option("--tol", d_tol, "max allowed |difference|");

  // correlation
  auto* sc = app.add_subcommand("correlation", "fermion or spin correlations");
  int c_width = 0, c_height = 0;
  std::string c_beta = "crit", c_ins, c_spins;
  sc->add_option("--width", c_width, "box width")->required();
  sc->add_option("--height", c_height, "box height")->required();
  sc->add_option("--beta", c_beta, "coupling, or 'crit'");
  sc->add_option("--insertions", c_ins, "\"psi:x,y;psibar:x,y;up:x,y;down:x,y\"");
  sc->add_option("--spins", c_spins, "\"x,y;x,y\" vertex list");

  // rps
  auto* sr = app.add_subcommand("rps", "Poincare-Steklov operator on a cut row");
  std::string r_domain, r_method = "direct", r_beta = "crit", r_out = "-";
  int r_row = 0;
  sr->add_option("--domain", r_domain, "domain JSON (inline or file)")->required();
  sr->add_option("--row", r_row, "vertex row of the run");
  sr->add_option("--method", r_method, "direct | kernel | blocks");
  sr->add_option("--beta", r_beta, "coupling, or 'crit'");
  sr->add_option("--out", r_out, "output file (default stdout)");

  // glue-check
  auto* sg = app.add_subcommand("glue-check", "verify gluing against the whole domain");
  int g_width = 4, g_height = 5, g_cut = 2;
  std::string g_betas = "crit,0.55", g_out = "-";
  double g_tol = 1e-9;
  sg->add_option("--width", g_width, "box width");
  sg->add_option("--height", g_height, "box height");
  sg->add_option("--cut", g_cut, "vertex row of the cut");
  sg->add_option("--betas", g_betas, "comma list, 'crit' allowed");
  sg->add_option("--tol", g_tol, "tolerance");
  sg->add_option("--out", g_out, "output file (default stdout)");

  // verify
  auto* sv = app.add_subcommand("verify", "cross-formalism verification suites");
  std::string v_suite = "all", v_betas = "crit,0.4,0.8", v_report = "-";
  int v_max_width = 5;
  double v_tol = 1e-8;
  sv->add_option("--suite", v_suite,
                 "propagator | induced-rotation | spectrum | correlations | pfaffian "
                 "| rps | all");
  sv->add_option("--max-width", v_max_width, "largest box width");
  sv->add_option("--betas", v_betas, "comma list, 'crit' allowed");
  sv->add_option("--tol", v_tol, "tolerance");
  sv->add_option("--report", v_report, "report JSON file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sp->parsed()) {
      if (p_crit && !p_beta.empty()) throw UsageError("give --beta or --critical, not both");
      if (!p_crit && p_beta.empty()) throw UsageError("need --beta or --critical");
      return cmd_propagator(p_width, p_crit ? "crit" : p_beta, p_out);
    }
    if (so->parsed())
      return cmd_observable(o_domain, o_kind, o_source, o_sources, o_method, o_beta, o_out);
    if (sd->parsed()) return cmd_diff(d_a, d_b, d_tol);
    if (sc->parsed()) return cmd_correlation(c_width, c_height, c_beta, c_ins, c_spins);
    if (sr->parsed()) return cmd_rps(r_domain, r_row, r_method, r_beta, r_out);
    if (sg->parsed()) return cmd_glue_check(g_width, g_height, g_cut, g_betas, g_tol, g_out);
    if (sv->parsed()) return cmd_verify(v_suite, v_max_width, v_betas, v_tol, v_report);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  }
}
