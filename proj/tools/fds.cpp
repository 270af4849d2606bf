#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fds/bench.hpp"
#include "fds/bie2d.hpp"
#include "fds/bvp1d.hpp"
#include "fds/errors.hpp"
#include "fds/sparse_nd.hpp"
#include "fds/spectrum.hpp"

using namespace fds;

namespace {

enum Exit { ok = 0, bad_flags = 2, numerical = 3, precondition = 4 };

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
public:
  void meta(const std::string& key, const std::string& value) { out_ << "# " << key << "=" << value << '\n'; }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

private:
  std::ostringstream out_;
};

void write_spectrum(Csv& csv, const SpectrumResult& s) {
  csv.meta("label", s.label);
  for (const auto& [k, v] : s.metadata)
    if (k.rfind("rank@", 0) != 0) csv.meta(k, v);
  csv.meta("knee", std::to_string(s.knee()));
  csv.row({"j", "sigma_rel"});
  for (std::size_t j = 0; j < s.sigmas.size(); ++j) csv.row({std::to_string(j + 1), num(s.sigmas[j])});
  for (double eps : report_tolerances) csv.row({rank_key(eps), std::to_string(s.rank(eps))});
}

struct Options {
  std::string out;
  std::optional<std::uint64_t> seed;

  std::string bvp_case = "nonosc";
  index_t n_min = 64, n_max = 2048;

  std::string kernel = "laplace", geometry = "directional";
  double kappa = 0;
  index_t grid_k = 12;

  index_t pts_per_box = 100;

  std::string shape = "ellipse", backend = "hbs";
  index_t n = 400;
  double tol = 1e-12;

  int dim = 2;
  bool schur = false;

  std::string target = "hbs-inv";
  double bench_tol = 1e-10;
  std::vector<index_t> sizes;
};

void run_bvp1d(const Options& o, Csv& csv) {
  if (o.n_min > o.n_max) throw InvalidArgument("--n-min exceeds --n-max");
  std::vector<index_t> Ns;
  for (index_t N = o.n_min; N <= o.n_max; N *= 2) Ns.push_back(N);
  const auto rows = condition_study(Ns, o.bvp_case == "osc" ? BvpCase::osc : BvpCase::non_osc);
  csv.meta("case", o.bvp_case);
  csv.row({"N", "cond_fd", "cond_ie", "err_fd", "err_ie"});
  for (const auto& r : rows) csv.row({std::to_string(r.N), num(r.cond_fd), num(r.cond_ie), num(r.err_fd), num(r.err_ie)});
}

void run_spectrum(const Options& o, Csv& csv) {
  const auto kernel = o.kernel == "laplace" ? PotentialKernel::laplace : PotentialKernel::helmholtz;
  const auto geometry = o.geometry == "global" ? PotentialGeometry::global : PotentialGeometry::directional;
  write_spectrum(csv, spectrum_potential(kernel, o.grid_k, geometry, o.kappa));
}

void run_admissibility(const Options& o, Csv& csv) {
  const std::uint64_t seed = o.seed.value_or(0x5eed0601);
  const auto [weak, strong] = weak_vs_strong_spectrum(6, o.pts_per_box, seed);
  csv.meta("pts_per_box", std::to_string(o.pts_per_box));
  csv.meta("seed", std::to_string(seed));
  csv.meta("weak_rank@1e-10", std::to_string(weak.rank(1e-10)));
  csv.meta("strong_rank@1e-10", std::to_string(strong.rank(1e-10)));
  csv.row({"j", "weak_sigma", "strong_sigma"});
  const std::size_t len = std::max(weak.sigmas.size(), strong.sigmas.size());
  for (std::size_t j = 0; j < len; ++j)
    csv.row({std::to_string(j + 1), j < weak.sigmas.size() ? num(weak.sigmas[j]) : "",
             j < strong.sigmas.size() ? num(strong.sigmas[j]) : ""});
}

void run_bie(const Options& o, Csv& csv) {
  CurveSpec spec;
  if (o.shape == "circle") spec = {CurveKind::circle, 1.0, 1.0, 5};
  else if (o.shape == "ellipse") spec = {CurveKind::ellipse, 2.0, 1.0, 5};
  else spec = {CurveKind::starfish, 0.3, 1.0, 5};
  const Curve c = make_curve(spec, o.n);
  const Point2 charge{3.0, 2.0};
  std::vector<double> f(static_cast<std::size_t>(c.N));
  for (index_t i = 0; i < c.N; ++i) f[static_cast<std::size_t>(i)] = laplace_potential(c.x[static_cast<std::size_t>(i)], charge);
  const auto backend = o.backend == "dense" ? BieBackend::dense : o.backend == "hodlr" ? BieBackend::hodlr : BieBackend::hbs;
  const auto sigma = solve_interior_dirichlet(c, f, backend, o.tol);

  // 16 targets on the curve shrunk by 0.4 toward the origin, plus the origin.
  std::vector<Point2> targets{{0.0, 0.0}};
  const Curve ring = make_curve(spec, 16);
  for (const auto& p : ring.x) targets.push_back({0.4 * p[0], 0.4 * p[1]});
  const auto ev = eval_double_layer(c, sigma, targets);
  double max_rel = 0, scale = 0;
  for (const auto& t : targets) scale = std::max(scale, std::abs(laplace_potential(t, charge)));
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    max_rel = std::max(max_rel, std::abs(ev.u[i] - laplace_potential(targets[i], charge)) / scale);
    flagged += ev.too_close[i] ? 1 : 0;
  }
  csv.meta("shape", o.shape);
  csv.meta("n", std::to_string(o.n));
  csv.meta("backend", o.backend);
  csv.meta("tol", num(o.tol));
  csv.meta("charge", num(charge[0]) + " " + num(charge[1]));
  csv.meta("max_rel_err", num(max_rel));
  csv.meta("targets_too_close", std::to_string(flagged));
  csv.row({"target_x", "target_y", "u_computed", "u_exact", "abs_err"});
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double exact = laplace_potential(targets[i], charge);
    csv.row({num(targets[i][0]), num(targets[i][1]), num(ev.u[i]), num(exact), num(std::abs(ev.u[i] - exact))});
  }
}

void run_nd(const Options& o, Csv& csv) {
  if (o.schur) {
    const auto op = o.kappa > 0 ? SchurOperator::helmholtz : SchurOperator::laplace;
    write_spectrum(csv, schur_offdiag_spectrum(o.dim, o.n, op, o.kappa));
    return;
  }
  const index_t cap = o.dim == 2 ? 512 : 32;
  if (o.n < 3 || o.n > cap) throw InvalidArgument("--n must lie in [3, " + std::to_string(cap) + "] for dim " + std::to_string(o.dim));
  const auto S = assemble_stencil(o.dim, o.n, -o.kappa * o.kappa);
  const auto F = nd_factor(S, nd_partition(o.dim, o.n, 4));
  const std::uint64_t seed = o.seed.value_or(0x5eed0702);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> b(static_cast<std::size_t>(S.size()));
  for (double& v : b) v = g(rng);
  const auto x = F.solve(b);
  const auto Ax = S.A.apply(x);
  double num2 = 0, den2 = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    num2 += (Ax[i] - b[i]) * (Ax[i] - b[i]);
    den2 += b[i] * b[i];
  }
  csv.meta("dim", std::to_string(o.dim));
  csv.meta("n", std::to_string(o.n));
  csv.meta("kappa", num(o.kappa));
  csv.meta("seed", std::to_string(seed));
  csv.row({"metric", "value"});
  csv.row({"N", std::to_string(S.size())});
  csv.row({"flops", num(F.flops())});
  csv.row({"stored_scalars", std::to_string(F.stored_scalars())});
  csv.row({"residual", num(std::sqrt(num2 / den2))});
}

void run_bench(const Options& o, Csv& csv) {
  const auto target = parse_bench_target(o.target);
  const std::uint64_t seed = o.seed.value_or(0x5eed0701);
  const auto rows = scaling_bench(target, o.sizes, o.bench_tol, seed);
  csv.meta("target", o.target);
  csv.meta("tol", num(o.bench_tol));
  csv.meta("seed", std::to_string(seed));
  csv.row({"N", "build_s", "apply_s", "stored_scalars", "residual"});
  for (const auto& r : rows)
    csv.row({std::to_string(r.N), num(r.build_s), num(r.apply_s), std::to_string(r.stored_scalars), num(r.residual)});
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fast direct solver experiments; every subcommand writes CSV"};
  app.require_subcommand(1);
  Options o;
  const auto common = [&o](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output path (stdout when omitted)");
    sub->add_option("--seed", o.seed, "Random seed");
  };
  const auto positive = CLI::PositiveNumber;

  auto* bvp = app.add_subcommand("bvp1d", "Conditioning of FD versus integral-equation discretizations");
  bvp->add_option("--case", o.bvp_case)->check(CLI::IsMember({"osc", "nonosc"}));
  bvp->add_option("--n-min", o.n_min)->check(CLI::Range(index_t{8}, index_t{4096}));
  bvp->add_option("--n-max", o.n_max)->check(CLI::Range(index_t{8}, index_t{4096}));

  auto* spec = app.add_subcommand("spectrum", "Singular values of a potential interaction");
  spec->add_option("--kernel", o.kernel)->check(CLI::IsMember({"laplace", "helmholtz"}));
  spec->add_option("--kappa", o.kappa)->check(positive);
  spec->add_option("--grid-k", o.grid_k)->check(CLI::Range(index_t{4}, index_t{80}));
  spec->add_option("--geometry", o.geometry)->check(CLI::IsMember({"directional", "global"}));

  auto* adm = app.add_subcommand("admissibility", "Weak versus strong admissibility spectra");
  adm->add_option("--pts-per-box", o.pts_per_box)->check(CLI::Range(index_t{16}, index_t{400}));

  auto* bie = app.add_subcommand("bie", "Interior Dirichlet point-charge test");
  bie->add_option("--shape", o.shape)->check(CLI::IsMember({"circle", "ellipse", "starfish"}));
  bie->add_option("--n", o.n)->check(CLI::Range(index_t{16}, index_t{8192}));
  bie->add_option("--backend", o.backend)->check(CLI::IsMember({"dense", "hodlr", "hbs"}));
  bie->add_option("--tol", o.tol)->check(CLI::Range(1e-15, 1e-2));

  auto* nd = app.add_subcommand("nd", "Nested dissection factorization or separator Schur spectrum");
  nd->add_option("--dim", o.dim)->check(CLI::IsMember({2, 3}));
  nd->add_option("--n", o.n)->check(CLI::Range(index_t{3}, index_t{512}));
  nd->add_option("--kappa", o.kappa)->check(CLI::NonNegativeNumber);
  nd->add_flag("--schur", o.schur, "Emit the off-diagonal Schur complement spectrum");

  auto* bench = app.add_subcommand("bench", "Build, solve and storage scaling");
  bench->add_option("--target", o.target)->check(CLI::IsMember({"hodlr-inv", "hbs-inv", "nd-factor", "bie-solve"}));
  bench->add_option("--sizes", o.sizes)->delimiter(',')->required();
  bench->add_option("--tol", o.bench_tol)->check(CLI::Range(1e-15, 1e-2));

  for (auto* sub : {bvp, spec, adm, bie, nd, bench}) common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : bad_flags;
  }
  if (spec->parsed() && o.kernel == "helmholtz" && !(o.kappa > 0)) {
    std::cerr << "fds: --kappa must be positive for the helmholtz kernel\n";
    return bad_flags;
  }

  Csv csv;
  try {
    if (bvp->parsed()) run_bvp1d(o, csv);
    else if (spec->parsed()) run_spectrum(o, csv);
    else if (adm->parsed()) run_admissibility(o, csv);
    else if (bie->parsed()) run_bie(o, csv);
    else if (nd->parsed()) run_nd(o, csv);
    else run_bench(o, csv);
  } catch (const InvalidArgument& e) {
    std::cerr << "fds: " << e.what() << '\n';
    return bad_flags;
  } catch (const PreconditionError& e) {
    std::cerr << "fds: precondition: " << e.what() << '\n';
    return precondition;
  } catch (const std::exception& e) {
    std::cerr << "fds: " << e.what() << '\n';
    return numerical;
  }

  if (o.out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream f(o.out, std::ios::binary);
    f << csv.str();
    if (!f) {
      std::cerr << "fds: cannot write " << o.out << '\n';
      return numerical;
    }
  }
  return ok;
}
