#include "dwlab/cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "dwlab/counting.hpp"
#include "dwlab/dwcore.hpp"
#include "dwlab/flowavg.hpp"
#include "dwlab/thermo.hpp"

namespace dwlab::cli {

using nlohmann::json;

namespace {

// -- parameter schemas ---------------------------------------------------------

json default_parameters(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Spectrum:
      return {{"profile", {{"mean", 0.5}}}, {"K", 64}, {"weyl_lambda", 0.0}, {"hbar", 0.0}};
    case ExperimentKind::Thermo:
      return {{"model", "coin"},     {"beta_min", -40.0}, {"beta_max", 40.0}, {"n_beta", 801},
              {"n_alpha", 401},      {"ld_T", 0},         {"ld_lo", 0.6},     {"ld_hi", 1.0},
              {"ld_samples", 100000}};
    case ExperimentKind::Flowavg:
      return {{"observables", {0, 1, 2}},
              {"T", 8.0},
              {"fd_step", 1e-4},
              {"step", 1e-3},
              {"point", {{1.2, 0.3}, {0.4, 0.9}}},
              {"phi_amplitude", 0.0},
              {"samples", 200}};
    case ExperimentKind::Arith:
      return {{"A", 2},           {"p", 5},
              {"m_max", 40},      {"box", 8},
              {"weight_mode", "zero-form"},
              {"conjugator_max_y0", 3},
              {"cache", ""}};
    case ExperimentKind::Trace:
      return {{"A", 2},         {"p", 5},          {"m_max", 60},   {"box", 12},
              {"weight_mode", "zero-form"},        {"T", 2.0},      {"M", 10.0},   {"r_box", 4},
              {"sigma", 1.0},   {"area", 4.0 * std::numbers::pi},   {"beta", 0.8},
              {"moment_T", {20.0, 50.0, 100.0, 200.0}}};
    case ExperimentKind::Count:
      return {{"instances", 100}, {"degree_max", 10}, {"radius", 1.0},     {"R_big", 2.0},
              {"a0", 0.5},        {"K", 64},          {"hbars", {0.25, 0.125, 0.0625, 0.03125}},
              {"c", 1.0}};
  }
  throw DomainError("unknown experiment kind");
}

json resolve(ExperimentKind kind, const json& given) {
  if (!given.is_object()) throw DomainError("parameters must be a JSON object");
  json out = default_parameters(kind);
  for (const auto& [key, value] : given.items()) {
    if (!out.contains(key))
      throw DomainError("unknown parameter '" + key + "' for kind " + to_string(kind));
    const json& def = out[key];
    const bool ok = (def.is_number() && value.is_number()) ||
                    (def.is_string() && value.is_string()) ||
                    (def.is_array() && value.is_array()) ||
                    (def.is_object() && (value.is_object() || value.is_string()));
    if (!ok) throw DomainError("parameter '" + key + "' has the wrong type");
    out[key] = value;
  }
  return out;
}

// -- output helpers --------------------------------------------------------------

struct Writer {
  std::filesystem::path dir;
  RunReport& report;

  void file(const std::string& name, const std::string& content) {
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw DomainError("cannot write " + (dir / name).string());
    os << content;
    report.files.push_back({name, git_blob_hash(content)});
  }

  void check(const std::string& name, double measured, double tolerance, bool pass) {
    report.assertions.push_back({name, pass, measured, tolerance});
  }

  void at_most(const std::string& name, double measured, double tolerance) {
    check(name, measured, tolerance, measured <= tolerance);
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// -- pipelines -------------------------------------------------------------------

void run_spectrum(const json& prm, Writer& w) {
  if (!prm["profile"].is_object()) throw DomainError("profile must be an object");
  const auto profile = dwcore::DampingProfile::from_json(prm["profile"]);
  const int K = prm["K"].get<int>();
  const auto spec = dwcore::damped_wave_spectrum(profile, K);
  w.file("spectrum.csv", dwcore::spectrum_to_csv(spec));

  w.at_most("reflection_symmetry", dwcore::reflection_asymmetry(spec), 1e-8);
  const double lo = profile.min_value(), hi = profile.max_value();
  double band = 0.0;
  for (const cplx& t : spec.values) {
    if (std::abs(t.real()) < 1.0) continue;
    band = std::max({band, lo - t.imag(), t.imag() - hi});
  }
  w.at_most("band", std::max(band, 0.0), 1e-6);
  w.at_most("eigen_residual", spec.max_residual, 1e-8);

  const auto pencil = dwcore::assemble_pencil(profile, K);
  const auto pairs = dwcore::pencil_eigenpairs(pencil);
  double defect = 0.0;
  for (std::size_t j = 0; j < pairs.values.size(); ++j)
    defect = std::max(defect, dwcore::rayleigh_defect(pencil, pairs.values[j], pairs.modes.col(j)));
  w.at_most("rayleigh_defect", defect, 1e-8);

  if (profile.degree() == 0 && profile.twist == 0.0) {
    const auto ref = dwcore::constant_damping_reference(profile.mean, K);
    double worst = 0.0;
    for (const cplx& t : spec.values) {
      double best = INFINITY;
      for (const cplx& r : ref.values) best = std::min(best, std::abs(t - r));
      worst = std::max(worst, best);
    }
    w.at_most("constant_reference", worst, 1e-8);
  }
  const double lambda = prm["weyl_lambda"].get<double>();
  if (lambda > 0.0) {
    const auto wc = dwcore::weyl_window_count(spec, lambda);
    w.at_most("weyl_count", std::abs(wc.count - wc.predicted), 3.0);
    if (wc.beyond_trust_horizon) w.report.notes.push_back("weyl_lambda beyond K/2");
  }
  const double hbar = prm["hbar"].get<double>();
  if (hbar > 0.0) {
    const auto sc = dwcore::to_semiclassical(spec, hbar);
    std::ostringstream os;
    os << std::setprecision(17) << "re_z,im_z,im_over_hbar\n";
    for (const auto& p : sc.points) os << p.z.real() << ',' << p.z.imag() << ',' << p.im_over_hbar << '\n';
    w.file("semiclassical.csv", os.str());
  }
}

thermo::MarkovModel thermo_model(const json& m) {
  if (m.is_object()) return thermo::MarkovModel::from_json(m);
  const auto name = m.get<std::string>();
  if (name == "coin") return thermo::MarkovModel::full_shift_by_target({0.0, 1.0});
  if (name == "golden-mean") return thermo::MarkovModel::golden_mean();
  throw DomainError("unknown model '" + name + "' (expected coin, golden-mean or an object)");
}

void run_thermo(const json& prm, Writer& w, std::uint64_t seed, int threads) {
  const auto model = thermo_model(prm["model"]);
  const int n = prm["n_beta"].get<int>();
  const double b0 = prm["beta_min"].get<double>(), b1 = prm["beta_max"].get<double>();
  if (n < 5 || !(b1 > b0)) throw DomainError("need n_beta >= 5 and beta_max > beta_min");
  std::vector<double> betas(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) betas[i] = b0 + (b1 - b0) * i / (n - 1);
  const auto curve = thermo::pressure_curve(model, betas, threads);
  w.file("pressure.csv", thermo::curve_to_csv(curve.betas, curve.values));
  w.check("pressure_convexity", curve.min_second_difference(), -1e-8,
          curve.min_second_difference() >= -1e-8);

  const auto rate = thermo::legendre_rate(curve, prm["n_alpha"].get<int>());
  w.file("rate.csv", thermo::curve_to_csv(rate.alphas, rate.values));
  w.at_most("rate_concavity", rate.max_second_difference(), 1e-8);
  double round_trip = 0.0;
  for (double b : {-2.0, -1.0, 0.0, 1.0, 2.0})
    round_trip = std::max(round_trip, std::abs(thermo::legendre_dual(rate, b) -
                                               thermo::pressure_transfer(model, b)));
  w.at_most("legendre_round_trip", round_trip, 1e-6);
  const auto [qmin, qmax] = thermo::q_extremes(model);
  w.at_most("extremes", std::max(std::abs(qmin - rate.q_minus), std::abs(qmax - rate.q_plus)), 1e-6);
  w.at_most("abramov", thermo::abramov_timechange(model).ratio_check, 1e-8);

  const int T = prm["ld_T"].get<int>();
  if (T > 0) {
    const auto ld = thermo::birkhoff_ld_montecarlo(
        model, T, {prm["ld_lo"].get<double>(), prm["ld_hi"].get<double>()},
        prm["ld_samples"].get<long>(), seed, threads);
    std::ostringstream os;
    os << std::setprecision(17) << "T,rate,std_error,hits,nsamples,predicted\n"
       << T << ',' << ld.rate << ',' << ld.std_error << ',' << ld.hits << ',' << ld.nsamples
       << ',' << ld.predicted << '\n';
    w.file("large_deviation.csv", os.str());
    const double tol = std::max(0.005, 3.0 * ld.std_error);
    w.at_most("ld_rate", std::abs(ld.rate - ld.predicted), tol);
  }
}

void run_flowavg(const json& prm, Writer& w) {
  const auto& pt = prm["point"];
  flowavg::Mat2 g;
  g << pt.at(0).at(0).get<double>(), pt.at(0).at(1).get<double>(), pt.at(1).at(0).get<double>(),
      pt.at(1).at(1).get<double>();
  const auto p = flowavg::FlowPoint::from_matrix(g);
  const double T = prm["T"].get<double>(), h = prm["fd_step"].get<double>();
  const double step = prm["step"].get<double>();
  const double amp = prm["phi_amplitude"].get<double>();
  std::ostringstream res;
  res << std::setprecision(17) << "observable,fd_step,residual\n";
  for (const auto& idx : prm["observables"]) {
    const int which = idx.get<int>();
    const auto q = flowavg::test_observable(which);
    const std::string tag = "obs" + std::to_string(which);
    w.file("trajectory_" + tag + ".csv",
           flowavg::trajectory_csv(q, p, -T / 2.0, T / 2.0, prm["samples"].get<int>()));
    double r[3];
    for (int k = 0; k < 3; ++k) {
      const double hk = h * std::pow(2.0, 2 - k);
      r[k] = flowavg::cohomology_residual(q, p, T, hk, step);
      res << which << ',' << hk << ',' << r[k] << '\n';
    }
    w.at_most("residual_" + tag, r[2], 1e-4);
    const double ratio = r[1] / r[2];
    w.at_most("step_halving_" + tag, std::abs(ratio - 4.0), 1.0);
    if (amp > 0.0) {
      flowavg::Observable phi{[amp](const flowavg::Mat2& m) {
                                return 1.0 + amp * std::sin(m(0, 0) * m(1, 0) / (1.0 + m(1, 0) * m(1, 0)));
                              },
                              "1 + a sin(...)"};
      const auto vr = flowavg::variable_cohomology_residual(q, phi, p, T, 1.0, h, step);
      res << which << ",variable," << vr.residual << '\n';
      w.at_most("variable_exact_" + tag, vr.exact_residual, 1e-6);
    }
  }
  w.file("residuals.csv", res.str());
}

arith::WeightedLengthSpectrum spectrum_for(const json& prm, Writer& w, std::uint64_t seed,
                                           int threads) {
  const auto A = prm["A"].get<std::int64_t>(), p = prm["p"].get<std::int64_t>();
  const auto box = prm["box"].get<std::int64_t>(), m_max = prm["m_max"].get<std::int64_t>();
  const auto mode = arith::weight_mode_from_string(prm["weight_mode"].get<std::string>());
  if (mode == arith::WeightMode::External)
    throw DomainError("external weights cannot be given in a config");
  const std::int64_t conj = prm.contains("conjugator_max_y0") ? prm["conjugator_max_y0"].get<std::int64_t>() : 3;
  const std::string cache = prm.contains("cache") ? prm["cache"].get<std::string>() : "";
  if (!cache.empty() && std::filesystem::exists(cache)) {
    auto wls = load_cache(cache, CacheKey{A, p, box});
    if (wls.m_max() >= m_max && wls.weight_mode == mode && wls.seed == seed) {
      std::erase_if(wls.entries, [&](const arith::LengthEntry& e) { return e.m > m_max; });
      w.report.notes.push_back("cache hit: " + cache);
      return wls;
    }
    w.report.notes.push_back("cache present but not usable: " + cache);
  }
  auto wls = arith::build_length_spectrum(A, p, m_max, box, mode, {}, seed, threads, conj);
  if (!cache.empty()) {
    cache_length_spectrum(wls, cache);
    w.report.notes.push_back("cache written: " + cache);
  }
  return wls;
}

void run_arith(const json& prm, Writer& w, std::uint64_t seed, int threads) {
  const auto wls = spectrum_for(prm, w, seed, threads);
  std::ostringstream os;
  os << std::setprecision(17) << "m,x,l,classes,mu,incomplete\n";
  double ident = 0.0;
  std::int64_t norm = 0;
  for (const auto& e : wls.entries) {
    os << e.m << ',' << e.x << ',' << e.l << ',' << e.classes.size() << ',' << e.mu() << ','
       << (e.incomplete ? 1 : 0) << '\n';
    ident = std::max(ident, std::abs(e.l - 2.0 * std::acosh(static_cast<double>(e.m))));
    for (const auto& c : e.classes)
      norm = std::max<std::int64_t>(norm, std::abs(arith::norm_form_residual(c.representative.y, wls.A, wls.p)));
  }
  w.file("lengths.csv", os.str());
  w.at_most("length_identity", ident, 1e-12);
  w.at_most("norm_form", static_cast<double>(norm), 0.0);
  double cs = -INFINITY;
  for (double alpha = 1.0; std::exp(alpha + 0.5) <= wls.entries.back().x; alpha += 0.25) {
    const auto ws = arith::window_sums(wls, alpha, 0.5);
    if (ws.count == 0) continue;
    const double lhs = ws.mu_sum * ws.mu_sum, rhs = static_cast<double>(ws.count) * ws.mu2_sum;
    cs = std::max(cs, (lhs - rhs) / std::max(rhs, 1e-300));
  }
  if (std::isfinite(cs)) w.at_most("cauchy_schwarz", cs, 1e-12);
}

void run_trace(const json& prm, Writer& w, std::uint64_t seed, int threads) {
  const auto wls = spectrum_for(prm, w, seed, threads);
  const double T = prm["T"].get<double>(), M = prm["M"].get<double>();
  // r_search takes the lengths <= 5T found in the smaller box r_box
  const auto m_cut = static_cast<std::int64_t>(std::floor(std::cosh(5.0 * T / 2.0)));
  const auto small = arith::build_length_spectrum(wls.A, wls.p, std::max<std::int64_t>(m_cut, 2),
                                                  prm["r_box"].get<std::int64_t>(), wls.weight_mode,
                                                  {}, seed, threads);
  std::vector<double> lengths;
  for (const auto& e : small.entries)
    if (!e.classes.empty() && e.l <= 5.0 * T) lengths.push_back(e.l);
  const auto rs = arith::r_search(lengths, M, T);
  const double R = static_cast<double>(rs.R);
  w.check("r_verified", rs.min_cos, 0.5, rs.min_cos >= 0.5);
  // R in [M, M e^{e^{5T}}] reads log log(R/M) <= 5T
  const double log_span = R > M ? std::log(std::log(R / M)) : (R == M ? kNegInf : INFINITY);
  w.check("r_interval", log_span, 5.0 * T, log_span <= 5.0 * T);

  arith::TraceWindowParams tp;
  tp.sigma = prm["sigma"].get<double>();
  tp.R = R;
  tp.T = T;
  tp.beta = prm["beta"].get<double>();
  const auto sides = arith::gaussian_trace_sides(tp, wls, prm["area"].get<double>(), true);
  {
    std::ostringstream os;
    os << std::setprecision(17)
       << "R,plancherel_re,plancherel_im,geodesic_re,geodesic_im,modulus_lower_bound,truncated\n"
       << R << ',' << sides.plancherel_term.real() << ',' << sides.plancherel_term.imag() << ','
       << sides.geodesic_sum.real() << ',' << sides.geodesic_sum.imag() << ','
       << sides.modulus_lower_bound << ',' << (sides.truncated ? 1 : 0) << '\n';
    w.file("trace_sides.csv", os.str());
  }
  w.check("modulus_comparison", std::abs(sides.geodesic_sum), sides.modulus_lower_bound,
          sides.comparison_holds);
  if (sides.truncated) w.report.notes.push_back("length spectrum does not cover T +- 5 sigma");

  std::ostringstream os;
  os << std::setprecision(17) << "T,alpha,I,I1,I2,terms,in_regime,split_holds,c_split\n";
  const double beta = tp.beta;
  for (const auto& tv : prm["moment_T"]) {
    const double Tm = tv.get<double>();
    const double alpha = 2.0 * beta * std::log(Tm) - arith::kCSplit;
    const auto sm = arith::windowed_second_moment(wls, alpha, beta, Tm);
    os << Tm << ',' << alpha << ',' << sm.I << ',' << sm.I1 << ',' << sm.I2 << ',' << sm.terms
       << ',' << sm.in_regime << ',' << sm.split_holds << ',' << sm.c_split << '\n';
    const std::string tag = "T" + fmt(Tm);
    const double rel = std::abs(sm.I - sm.I1 - sm.I2) / std::max(std::abs(sm.I), 1e-300);
    w.at_most("moment_quadrature_" + tag, rel, 1e-6);
    if (sm.in_regime) w.check("moment_split_" + tag, std::abs(sm.I2), sm.I1 / 100.0, sm.split_holds);
  }
  w.file("second_moment.csv", os.str());
}

void run_count(const json& prm, Writer& w, std::uint64_t seed) {
  const int instances = prm["instances"].get<int>(), dmax = prm["degree_max"].get<int>();
  const double r = prm["radius"].get<double>(), Rb = prm["R_big"].get<double>();
  if (instances < 1 || dmax < 1) throw DomainError("instances and degree_max must be >= 1");
  long violations = 0;
  std::ostringstream jo;
  jo << std::setprecision(17) << "instance,degree,zeros,jensen_bound\n";
  for (int i = 0; i < instances; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    const int degree = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(dmax));
    std::vector<cplx> roots;
    while (static_cast<int>(roots.size()) < degree) {
      const cplx z(1.5 * Rb * (2.0 * rng.uniform() - 1.0), 1.5 * Rb * (2.0 * rng.uniform() - 1.0));
      if (std::abs(z) < 0.05 || std::abs(std::abs(z) - r) < 1e-3) continue;
      roots.push_back(z);
    }
    counting::HolomorphicSampler f{[roots](cplx z) {
                                     cplx v = 1.0;
                                     for (const cplx& q : roots) v *= z - q;
                                     return v;
                                   },
                                   counting::ComplexWindow::disk({0.0, 0.0}, 1e300)};
    const int zeros = counting::argument_principle_zeros(f, counting::ComplexWindow::disk({0.0, 0.0}, r));
    const double bound = counting::jensen_disk_bound(f, {0.0, 0.0}, r, Rb);
    if (bound < zeros) ++violations;
    jo << i << ',' << degree << ',' << zeros << ',' << bound << '\n';
  }
  w.file("jensen.csv", jo.str());
  w.at_most("jensen_dominance", static_cast<double>(violations), 0.0);

  const double a0 = prm["a0"].get<double>(), c = prm["c"].get<double>();
  const auto spec = dwcore::damped_wave_spectrum(dwcore::DampingProfile::constant(a0), prm["K"].get<int>());
  std::vector<counting::CountRow> rows;
  std::vector<counting::LadderPoint> ladder;
  long above_max = 0;
  for (const auto& hv : prm["hbars"]) {
    const double hbar = hv.get<double>();
    const auto sc = dwcore::to_semiclassical(spec, hbar);
    const long full = counting::window_count(sc, hbar, c, a0 - 0.1, counting::Side::Above);
    const long none = counting::window_count(sc, hbar, c, a0 + 0.1, counting::Side::Above);
    rows.push_back({hbar, c, a0 - 0.1, counting::Side::Above, full});
    rows.push_back({hbar, c, a0 + 0.1, counting::Side::Above, none});
    ladder.push_back({hbar, static_cast<double>(full)});
    above_max = std::max(above_max, none);
  }
  w.at_most("count_above_a0", static_cast<double>(above_max), 0.0);
  if (ladder.size() >= 4) {
    const auto fit = counting::deviation_exponent(ladder);
    w.file("count.csv", counting::count_csv(rows, &fit));
  } else {
    w.file("count.csv", counting::count_csv(rows));
  }
}

}  // namespace

// -- config --------------------------------------------------------------------------

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Spectrum: return "spectrum";
    case ExperimentKind::Thermo: return "thermo";
    case ExperimentKind::Flowavg: return "flowavg";
    case ExperimentKind::Arith: return "arith";
    case ExperimentKind::Trace: return "trace";
    case ExperimentKind::Count: return "count";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  static const std::map<std::string, ExperimentKind> names{
      {"spectrum", ExperimentKind::Spectrum}, {"thermo", ExperimentKind::Thermo},
      {"flowavg", ExperimentKind::Flowavg},   {"arith", ExperimentKind::Arith},
      {"trace", ExperimentKind::Trace},       {"count", ExperimentKind::Count}};
  const auto it = names.find(s);
  if (it == names.end()) throw DomainError("unknown experiment kind '" + s + "'");
  return it->second;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw DomainError("config must be a JSON object");
  static const std::set<std::string> keys{"kind", "parameters", "seed", "output_dir", "threads"};
  for (const auto& [key, value] : j.items())
    if (!keys.count(key)) throw DomainError("unknown config key '" + key + "'");
  if (!j.contains("kind") || !j["kind"].is_string()) throw DomainError("config needs a string 'kind'");
  ExperimentConfig c;
  c.kind = experiment_kind_from_string(j["kind"].get<std::string>());
  if (j.contains("parameters")) c.parameters = j["parameters"];
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || (!j["seed"].is_number_unsigned() && j["seed"].get<std::int64_t>() < 0))
      throw DomainError("seed must be a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw DomainError("output_dir must be a string");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("threads")) {
    if (!j["threads"].is_number_integer() || j["threads"].get<int>() < 1)
      throw DomainError("threads must be a positive integer");
    c.threads = j["threads"].get<int>();
  }
  c.resolved_parameters();
  return c;
}

json ExperimentConfig::to_json() const {
  return {{"kind", to_string(kind)},
          {"parameters", parameters},
          {"seed", seed},
          {"output_dir", output_dir},
          {"threads", threads}};
}

json ExperimentConfig::resolved_parameters() const { return resolve(kind, parameters); }

bool RunReport::all_passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

json RunReport::to_json() const {
  json out;
  out["config"] = config;
  out["input_hash"] = input_hash;
  out["wall_seconds"] = wall_seconds;
  out["files"] = json::array();
  for (const auto& f : files) out["files"].push_back({{"name", f.name}, {"sha1", f.sha1}});
  out["assertions"] = json::array();
  for (const auto& a : assertions)
    out["assertions"].push_back(
        {{"name", a.name}, {"pass", a.pass}, {"measured", a.measured}, {"tolerance", a.tolerance}});
  out["notes"] = notes;
  out["all_passed"] = all_passed();
  return out;
}

std::string git_blob_hash(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw Error("SHA-1 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

RunReport run_experiment(const ExperimentConfig& config) {
  const json prm = config.resolved_parameters();
  RunReport report;
  // config echo without output_dir or threads, so the hash names the inputs only
  report.config = {{"kind", to_string(config.kind)}, {"parameters", prm}, {"seed", config.seed}};
  report.input_hash = git_blob_hash(report.config.dump());

  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  Writer w{dir, report};
  try {
    switch (config.kind) {
      case ExperimentKind::Spectrum: run_spectrum(prm, w); break;
      case ExperimentKind::Thermo: run_thermo(prm, w, config.seed, config.threads); break;
      case ExperimentKind::Flowavg: run_flowavg(prm, w); break;
      case ExperimentKind::Arith: run_arith(prm, w, config.seed, config.threads); break;
      case ExperimentKind::Trace: run_trace(prm, w, config.seed, config.threads); break;
      case ExperimentKind::Count: run_count(prm, w, config.seed); break;
    }
  } catch (const DomainError& e) {
    throw DomainError(to_string(config.kind) + " experiment: " + e.what());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(to_string(config.kind) + " experiment: " + e.what());
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream os(dir / "report.json");
  os << report.to_json().dump(2) << '\n';
  return report;
}

// -- length-spectrum cache ---------------------------------------------------------------

void cache_length_spectrum(const arith::WeightedLengthSpectrum& wls,
                           const std::filesystem::path& path) {
  std::ostringstream os;
  os << std::setprecision(17) << "# dwlab length-spectrum cache\n"
     << "# A=" << wls.A << ",p=" << wls.p << ",box=" << wls.box << ",seed=" << wls.seed
     << ",weight_mode=" << arith::to_string(wls.weight_mode) << ",m_max=" << wls.m_max() << '\n'
     << "m,y0,y1,y2,y3,class_id,primitive_length,omega_integral\n";
  long records = 0;
  for (const auto& e : wls.entries) {
    for (const auto& c : e.classes) {
      const auto& y = c.representative.y;
      os << e.m << ',' << y[0] << ',' << y[1] << ',' << y[2] << ',' << y[3] << ',' << records << ','
         << c.primitive_length << ',' << c.omega_integral << '\n';
      ++records;
    }
  }
  os << "# end records=" << records << '\n';
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write cache " + path.string());
  out << os.str();
}

namespace {

[[noreturn]] void cache_error(const std::filesystem::path& path, long line, const std::string& what) {
  throw DomainError("load_cache " + path.string() + ": line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

arith::WeightedLengthSpectrum load_cache(const std::filesystem::path& path,
                                         std::optional<CacheKey> expect) {
  std::ifstream in(path);
  if (!in) throw DomainError("load_cache: cannot open " + path.string());
  std::string line;
  long ln = 0;
  auto next = [&]() {
    if (!std::getline(in, line)) return false;
    ++ln;
    return true;
  };
  if (!next() || line != "# dwlab length-spectrum cache") cache_error(path, ln + (ln == 0), "bad magic line");
  if (!next() || line.rfind("# ", 0) != 0) cache_error(path, ln, "missing parameter header");
  std::map<std::string, std::string> hdr;
  for (const auto& kv : split(line.substr(2), ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) cache_error(path, ln, "malformed header field '" + kv + "'");
    hdr[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  arith::WeightedLengthSpectrum wls;
  std::int64_t m_max = 0;
  try {
    wls.A = std::stoll(hdr.at("A"));
    wls.p = std::stoll(hdr.at("p"));
    wls.box = std::stoll(hdr.at("box"));
    wls.seed = std::stoull(hdr.at("seed"));
    wls.weight_mode = arith::weight_mode_from_string(hdr.at("weight_mode"));
    m_max = std::stoll(hdr.at("m_max"));
  } catch (const std::exception& e) {
    cache_error(path, ln, std::string("corrupted header: ") + e.what());
  }
  if (expect && (expect->A != wls.A || expect->p != wls.p || expect->box != wls.box))
    cache_error(path, ln, "cache (A, p, box) does not match the requested parameters");
  if (!next() || line != "m,y0,y1,y2,y3,class_id,primitive_length,omega_integral")
    cache_error(path, ln, "missing column header");

  for (std::int64_t m = 2; m <= m_max; ++m) {
    arith::LengthEntry e;
    e.m = m;
    const auto x = arith::xm(m);
    e.x = x.x;
    e.l = x.l;
    wls.entries.push_back(e);
  }
  long records = 0;
  bool ended = false;
  while (next()) {
    if (line.rfind("# end records=", 0) == 0) {
      long n = -1;
      try {
        n = std::stol(line.substr(14));
      } catch (const std::exception&) {
        cache_error(path, ln, "malformed trailer");
      }
      if (n != records) cache_error(path, ln, "trailer count does not match the records read");
      ended = true;
      break;
    }
    const auto f = split(line, ',');
    if (f.size() != 8) cache_error(path, ln, "expected 8 fields, found " + std::to_string(f.size()));
    try {
      const std::int64_t m = std::stoll(f[0]);
      if (m < 2 || m > m_max) cache_error(path, ln, "m out of range");
      arith::Quad y{std::stoll(f[1]), std::stoll(f[2]), std::stoll(f[3]), std::stoll(f[4])};
      if (y[0] != m) cache_error(path, ln, "y0 does not equal m");
      if (std::stol(f[5]) != records) cache_error(path, ln, "class ids must be consecutive");
      arith::ClassInfo c;
      c.representative = arith::GroupElement::make(y, wls.A, wls.p);
      c.members = 0;
      c.primitive_length = std::stod(f[6]);
      c.omega_integral = std::stod(f[7]);
      auto& e = wls.entries[static_cast<std::size_t>(m - 2)];
      if (!(c.primitive_length > 0.0)) cache_error(path, ln, "primitive length must be positive");
      c.power = static_cast<int>(std::lround(e.l / c.primitive_length));
      c.root_m = std::llround(std::cosh(c.primitive_length / 2.0));
      e.classes.push_back(c);
    } catch (const DomainError& ex) {
      if (std::string(ex.what()).rfind("load_cache", 0) == 0) throw;
      cache_error(path, ln, ex.what());
    } catch (const std::exception& ex) {
      cache_error(path, ln, std::string("bad record: ") + ex.what());
    }
    ++records;
  }
  if (!ended) cache_error(path, ln + 1, "missing end trailer (file truncated)");
  for (auto& e : wls.entries) e.incomplete = e.classes.empty();
  return wls;
}

}  // namespace dwlab::cli
