#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "sympfold/displacement.hpp"
#include "sympfold/folding.hpp"
#include "sympfold/hausdorff.hpp"
#include "sympfold/json_util.hpp"
#include "sympfold/map_checks.hpp"
#include "sympfold/plot.hpp"
#include "sympfold/set_model.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace sympfold::cli {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse:
    case ErrorCode::Precondition:
    case ErrorCode::BadDimension:
    case ErrorCode::BadAreas:
    case ErrorCode::DomainViolation:
      return 2;
    case ErrorCode::EmptySet:
    case ErrorCode::InsufficientScales:
    case ErrorCode::ScaleTooSmall:
    case ErrorCode::MaskRejectionExhausted:
    case ErrorCode::PairBudgetExceeded:
      return 3;
    case ErrorCode::NoDirectionFound:
    case ErrorCode::NoAdmissibleTime:
    case ErrorCode::IntegrationFailure:
      return 4;
    case ErrorCode::CertificationFailed:
    case ErrorCode::EmbeddingCertificationFailed:
    case ErrorCode::NotSymplectic:
      return 5;
  }
  return 5;
}

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Parse, "cannot open '" + path + "'");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, "'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json(const std::string& path, const json& j) {
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::Precondition, "cannot write '" + path + "'");
  f << j.dump(2) << '\n';
}

std::string svg_dir_for(const std::string& requested, const std::string& out) {
  if (!requested.empty()) return requested;
  if (out.empty()) return "";
  const auto parent = fs::path(out).parent_path();
  return parent.empty() ? "." : parent.string();
}

void emit_svg(const std::string& dir, const std::string& name, const Snapshot& snap) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  write_svg((fs::path(dir) / (name + ".svg")).string(), snap);
}

std::vector<Rect> read_targets(const std::string& path) {
  const json j = read_json(path);
  const json& list = j.is_object() ? j.at("targets") : j;
  if (!list.is_array()) throw Error(ErrorCode::Parse, "targets must be a list of [q0,q1,p0,p1]");
  std::vector<Rect> out;
  for (const auto& r : list) out.push_back(rect_from_json(r));
  return out;
}

ContainmentReport contained(const std::vector<Vec>& images, const std::vector<Rect>& factors) {
  ContainmentReport r;
  r.points = images.size();
  r.min_margin = images.empty() ? 0 : INFINITY;
  for (const auto& y : images) {
    double m = INFINITY;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      const Rect& f = factors[i];
      m = std::min({m, y[2 * i] - f.q0, f.q1 - y[2 * i], y[2 * i + 1] - f.p0, f.p1 - y[2 * i + 1]});
    }
    r.min_margin = std::min(r.min_margin, m);
    if (m > 0) ++r.inside;
  }
  return r;
}

std::vector<Rect> rect_and_box(const Rect& R, const Box& U) {
  std::vector<Rect> out{R};
  for (int c = 0; c + 1 < U.dim(); c += 2) out.push_back({U.lo[c], U.hi[c], U.lo[c + 1], U.hi[c + 1]});
  return out;
}

// ---------------------------------------------------------------- commands

struct DimArgs {
  std::string set, out, svg, csv;
  std::vector<double> scales;
  std::size_t cloud = 200000;
  std::uint64_t seed = 0;
};

int cmd_dim(const DimArgs& a, std::ostream& out) {
  const auto set = RectifiableSet::load(a.set);
  auto scales = a.scales;
  if (scales.empty()) {
    const double diam = sampled_bounds(set, 20000, split_seed(a.seed, 1)).diameter();
    scales = log_scales(diam / 4, diam / 400, 7);
  }
  const auto est = box_dimension(set, scales, a.seed, a.cloud);
  json j = {{"kind", "dim"}, {"set", a.set}, {"seed", a.seed}, {"estimate", est.to_json()}};
  write_json(a.out, j);
  if (!a.csv.empty()) {
    std::ofstream f(a.csv);
    est.write_csv(f);
  }
  const std::string svg = !a.svg.empty() ? a.svg : a.out.empty() ? "" : (fs::path(a.out).replace_extension(".svg")).string();
  if (!svg.empty()) {
    Snapshot snap{"log10 count against log10 1/scale", {}, {}};
    for (std::size_t i = 0; i < est.scales.size(); ++i)
      snap.points.push_back({std::log10(1 / est.scales[i]), std::log10(est.counts[i])});
    if (snap.points.size() >= 2) {
      // Fitted line through the centroid with the estimated slope.
      double mx = 0, my = 0;
      for (const auto& p : snap.points) mx += p[0], my += p[1];
      mx /= snap.points.size();
      my /= snap.points.size();
      const double x0 = snap.points.front()[0], x1 = snap.points.back()[0];
      snap.outlines.push_back({{x0, my + est.slope * (x0 - mx)}, {x1, my + est.slope * (x1 - mx)}});
    }
    write_svg(svg, snap);
  }
  out << "dimension estimate " << est.slope << " (rms " << est.residual << ")\n";
  return 0;
}

struct DisplaceArgs {
  std::string a, b, out;
  int directions = 64;
  double t_max = 1.0;
  int t_samples = 1000;
  std::size_t a_samples = 500, b_samples = 500;
  double clearance_tol = 0;
  int certify = 10;
  std::vector<double> witness_scales;
  std::uint64_t seed = 0;
};

int cmd_displace(const DisplaceArgs& a, std::ostream& out, std::ostream& err) {
  const auto A = RectifiableSet::load(a.a);
  const auto B = RectifiableSet::load(a.b);
  json j = {{"kind", "displace"}, {"seed", a.seed}, {"set_a", A.to_json()}, {"set_b", B.to_json()}};
  j["config"] = {{"directions", a.directions}, {"t_max", a.t_max}, {"t_samples", a.t_samples},
                 {"a_samples", a.a_samples},   {"b_samples", a.b_samples}, {"clearance_tol", a.clearance_tol}};
  if (A.is_empty() || B.is_empty()) {
    j["vacuous"] = true;
    j["certificates"] = json::array();
    j["pass"] = true;
    write_json(a.out, j);
    out << "one of the sets is empty; every translation displaces it\n";
    return 0;
  }
  DisplacementProblem dp(A, B);
  dp.a_samples = a.a_samples;
  dp.b_samples = a.b_samples;
  dp.seed = a.seed;
  dp.clearance_tol = a.clearance_tol;
  dp.witness_scales = a.witness_scales;
  const auto result = find_generic_direction(dp, a.directions, a.t_max, a.t_samples);
  j["vacuous"] = false;
  j["result"] = result.to_json();

  // Certify a spread of admissible times, smallest and largest included.
  const auto& times = result.admissible_times;
  std::vector<std::size_t> picks;
  const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(std::max(a.certify, 0)), times.size());
  for (std::size_t k = 0; k < want; ++k) {
    const std::size_t idx = want == 1 ? 0 : k * (times.size() - 1) / (want - 1);
    if (picks.empty() || picks.back() != idx) picks.push_back(idx);
  }
  json certs = json::array();
  bool pass = true;
  std::string failure;
  for (auto idx : picks) {
    try {
      certs.push_back(displace_certify(dp, result, times[idx].t).to_json());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CertificationFailed) throw;
      pass = false;
      failure = e.what();
      certs.push_back({{"t", times[idx].t}, {"pass", false}, {"message", e.what()}});
    }
  }
  j["certificates"] = certs;
  j["pass"] = pass;
  write_json(a.out, j);
  out << "v0 = [" << result.v0.transpose() << "], bad-time fraction " << result.bad_time_fraction << ", "
      << certs.size() << " certified times\n";
  if (!pass) {
    err << "certification failed: " << failure << '\n';
    return 5;
  }
  return 0;
}

struct FoldArgs {
  std::string set, Q, R, K, U, out, svg_dir;
  std::size_t scan = 300, cert = 100000, symplectic = 10000;
  double eps_cap = 0.25;
  std::vector<double> witness_scales;
  bool no_svg = false;
  std::uint64_t seed = 0;
};

int cmd_fold(const FoldArgs& a, std::ostream& out, std::ostream& err) {
  const auto A = RectifiableSet::load(a.set);
  FoldProblem fp(rect_from_string(a.Q), rect_from_string(a.R), box_from_string(a.K), box_from_string(a.U), A);
  fp.scan_samples = a.scan;
  fp.cert_samples = a.cert;
  fp.symplectic_samples = a.symplectic;
  fp.seed = a.seed;
  FoldConfig cfg;
  cfg.eps_cap = a.eps_cap;
  cfg.witness_scales = a.witness_scales;
  cfg.strict = false;
  cfg.snapshots = !a.no_svg;
  const auto rep = fold_once(fp, cfg);
  json j = {{"kind", "fold"}, {"seed", a.seed}, {"set", A.to_json()}};
  j["problem"] = {{"Q", rect_to_json(fp.Q)},        {"R", rect_to_json(fp.R)},
                  {"K", box_to_json(fp.K)},          {"U", box_to_json(fp.U)},
                  {"scan_samples", fp.scan_samples}, {"cert_samples", fp.cert_samples},
                  {"symplectic_samples", fp.symplectic_samples}};
  j["tolerances"] = {{"symplectic", cfg.symplectic_tol}, {"glue", cfg.glue_tol},
                     {"preimage_sep", cfg.preimage_sep},  {"identity", cfg.identity_tol}};
  j["report"] = rep.to_json();
  write_json(a.out, j);
  const auto dir = a.no_svg ? std::string() : svg_dir_for(a.svg_dir, a.out);
  for (const auto& s : rep.snapshots) emit_svg(dir, "fold_" + s.name, s);
  if (!rep.pass) {
    err << "stage " << rep.failed_stage << " failed\n";
    return 5;
  }
  out << "fold certified: t = " << rep.plan.params.t << ", eps = " << rep.plan.params.eps << ", delta = "
      << rep.plan.params.delta << '\n';
  return 0;
}

struct SqueezeArgs {
  std::string set, targets, out, svg_dir;
  double fold_ratio = 1.95;
  std::size_t cert = 10000;
  std::vector<double> witness_scales;
  bool no_witness = false, no_svg = false;
  std::uint64_t seed = 0;
};

int cmd_squeeze(const SqueezeArgs& a, std::ostream& out, std::ostream& err) {
  const auto A = RectifiableSet::load(a.set);
  const auto targets = read_targets(a.targets);
  SqueezeConfig cfg;
  cfg.fold_ratio = a.fold_ratio;
  cfg.cert_samples = a.cert;
  cfg.witness_scales = a.witness_scales;
  cfg.require_witness = !a.no_witness;
  cfg.fold.snapshots = !a.no_svg;
  json j = {{"kind", "squeeze"}, {"seed", a.seed}, {"set", A.to_json()}};
  json tj = json::array();
  for (const auto& t : targets) tj.push_back(rect_to_json(t));
  j["targets"] = tj;
  j["config"] = {{"fold_ratio", cfg.fold_ratio}, {"cert_samples", cfg.cert_samples}};
  j["tolerances"] = {{"symplectic", cfg.fold.symplectic_tol}, {"preimage_sep", cfg.fold.preimage_sep}};
  try {
    const auto rep = squeeze(A, targets, a.seed, cfg);
    j["report"] = rep.to_json();
    write_json(a.out, j);
    const auto dir = a.no_svg ? std::string() : svg_dir_for(a.svg_dir, a.out);
    for (std::size_t k = 0; k < rep.steps.size(); ++k)
      for (const auto& s : rep.steps[k].report.snapshots)
        emit_svg(dir, "squeeze_step" + std::to_string(k) + "_" + s.name, s);
    if (!dir.empty() && !a.no_svg)
      emit_svg(dir, "squeeze_final", {"final", first_factor(rep.final_cloud.points), {rect_outline(targets[0])}});
    out << "squeezed with folds per factor:";
    for (int f : rep.folds_per_factor) out << ' ' << f;
    out << '\n';
    return rep.pass ? 0 : 5;
  } catch (const Error& e) {
    j["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
    write_json(a.out, j);
    if (std::string(e.what()).find("negligibility-witness") != std::string::npos)
      err << "note: the decay test does not support negligibility at exponent n; a set of positive 2n-volume "
             "(or a factor of positive area) cannot be squeezed below its volume\n";
    throw;
  }
}

struct VerifyArgs {
  std::string report, out;
  std::uint64_t seed = 1;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  const json j = read_json(a.report);
  const std::string kind = j.value("kind", "");
  json v = {{"kind", "verify"}, {"report", a.report}, {"seed", a.seed}, {"of", kind}};
  std::vector<std::string> failed;
  try {
    if (kind == "fold" || kind == "squeeze") {
      if (j.contains("error")) throw Error(ErrorCode::Parse, "report records a failed run");
      const auto A = RectifiableSet::from_json(j.at("set"));
      const auto map = MapExpr::from_json(j.at("report").at("map"));
      const auto& tol = j.at("tolerances");
      std::vector<Rect> boxes;
      std::size_t cert = 0, sym = 0;
      if (kind == "fold") {
        const auto& p = j.at("problem");
        boxes = rect_and_box(rect_from_json(p.at("R")), box_from_json(p.at("U")));
        cert = p.at("cert_samples").get<std::size_t>();
        sym = p.at("symplectic_samples").get<std::size_t>();
      } else {
        for (const auto& t : j.at("targets")) boxes.push_back(rect_from_json(t));
        cert = sym = j.at("config").at("cert_samples").get<std::size_t>();
      }
      if (A.is_empty()) {
        v["pass"] = true;
      } else {
        const auto cloud = sample(A, cert, split_seed(a.seed, 101));
        const auto s = check_symplectic(map, sample(A, sym, split_seed(a.seed, 102)), tol.at("symplectic").get<double>());
        const auto images = map_cloud(map, cloud);
        const auto c = contained(images.points, boxes);
        const auto inj = check_injective(map, cloud, tol.at("preimage_sep").get<double>());
        v["symplectic"] = s.to_json();
        v["containment"] = c.to_json();
        v["injectivity"] = inj.to_json();
        if (!s.pass) failed.push_back("symplecticity");
        if (!c.pass()) failed.push_back("containment");
        if (!inj.pass) failed.push_back("injectivity");
      }
    } else if (kind == "displace") {
      if (!j.value("vacuous", false)) {
        DisplacementProblem dp(RectifiableSet::from_json(j.at("set_a")), RectifiableSet::from_json(j.at("set_b")));
        const auto& cfg = j.at("config");
        dp.a_samples = cfg.at("a_samples").get<std::size_t>();
        dp.b_samples = cfg.at("b_samples").get<std::size_t>();
        dp.seed = split_seed(a.seed, 103);
        const Vec v0 = vec_from_json(j.at("result").at("v0"));
        const auto ac = dp.a_cloud(10), bc = dp.b_cloud(10);
        json certs = json::array();
        for (const auto& c : j.at("certificates")) {
          const auto cert =
              check_translation(ac, bc, v0, c.at("t").get<double>(), j.at("result").at("clearance_tol").get<double>());
          certs.push_back(cert.to_json());
          if (!cert.pass) failed.push_back("clearance at t = " + std::to_string(cert.t));
        }
        v["certificates"] = certs;
      }
    } else {
      throw Error(ErrorCode::Parse, "unknown report kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed report: ") + e.what());
  }
  v["failed"] = failed;
  v["pass"] = failed.empty();
  write_json(a.out, v);
  if (!failed.empty()) {
    err << "verification failed: " << failed.front() << '\n';
    return 5;
  }
  out << "verified " << kind << " report\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sympfold: symplectic displacement, folding and squeezing of negligible sets"};
  app.require_subcommand(1);

  DimArgs dim;
  auto* d = app.add_subcommand("dim", "box-counting dimension of a set");
  d->add_option("--set", dim.set, "set JSON")->required();
  d->add_option("--scales", dim.scales, "decreasing grid scales")->delimiter(',');
  d->add_option("--cloud", dim.cloud, "sample size");
  d->add_option("--seed", dim.seed);
  d->add_option("--out", dim.out, "report JSON");
  d->add_option("--svg", dim.svg, "log-log plot");
  d->add_option("--csv", dim.csv, "scale,count table");

  DisplaceArgs dis;
  auto* s = app.add_subcommand("displace", "find a translation displacing set A from set B");
  s->add_option("--set-a", dis.a)->required();
  s->add_option("--set-b", dis.b)->required();
  s->add_option("--directions", dis.directions);
  s->add_option("--t-max", dis.t_max);
  s->add_option("--t-samples", dis.t_samples);
  s->add_option("--a-samples", dis.a_samples);
  s->add_option("--b-samples", dis.b_samples);
  s->add_option("--clearance-tol", dis.clearance_tol);
  s->add_option("--certify", dis.certify, "number of admissible times to re-certify");
  s->add_option("--witness-scales", dis.witness_scales)->delimiter(',');
  s->add_option("--seed", dis.seed);
  s->add_option("--out", dis.out);

  FoldArgs fold;
  auto* f = app.add_subcommand("fold", "fold a set in Q x K into R x U");
  f->add_option("--set", fold.set)->required();
  f->add_option("--Q", fold.Q, "q0,q1,p0,p1")->required();
  f->add_option("--R", fold.R, "q0,q1,p0,p1")->required();
  f->add_option("--K", fold.K, "lo,hi per remaining coordinate");
  f->add_option("--U", fold.U, "lo,hi per remaining coordinate");
  f->add_option("--scan-samples", fold.scan);
  f->add_option("--cert-samples", fold.cert);
  f->add_option("--symplectic-samples", fold.symplectic);
  f->add_option("--eps-cap", fold.eps_cap);
  f->add_option("--witness-scales", fold.witness_scales)->delimiter(',');
  f->add_option("--seed", fold.seed);
  f->add_option("--out", fold.out);
  f->add_option("--svg-dir", fold.svg_dir);
  f->add_flag("--no-svg", fold.no_svg);

  SqueezeArgs sq;
  auto* q = app.add_subcommand("squeeze", "fold every factor into its target rectangle");
  q->add_option("--set", sq.set)->required();
  q->add_option("--targets", sq.targets, "JSON list of [q0,q1,p0,p1]")->required();
  q->add_option("--fold-ratio", sq.fold_ratio);
  q->add_option("--cert-samples", sq.cert);
  q->add_option("--witness-scales", sq.witness_scales)->delimiter(',');
  q->add_flag("--no-witness", sq.no_witness);
  q->add_option("--seed", sq.seed);
  q->add_option("--out", sq.out);
  q->add_option("--svg-dir", sq.svg_dir);
  q->add_flag("--no-svg", sq.no_svg);

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "re-run the certifications of a stored report on fresh samples");
  v->add_option("--report", ver.report)->required();
  v->add_option("--seed", ver.seed);
  v->add_option("--out", ver.out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return 2;
  }

  try {
    if (*d) return cmd_dim(dim, out);
    if (*s) return cmd_displace(dis, out, err);
    if (*f) return cmd_fold(fold, out, err);
    if (*q) return cmd_squeeze(sq, out, err);
    if (*v) return cmd_verify(ver, out, err);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace sympfold::cli
