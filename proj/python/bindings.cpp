#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dwlab/arith.hpp"
#include "dwlab/cli.hpp"
#include "dwlab/counting.hpp"
#include "dwlab/dwcore.hpp"
#include "dwlab/flowavg.hpp"
#include "dwlab/thermo.hpp"

namespace py = pybind11;
using namespace dwlab;

PYBIND11_MODULE(_dwlab, m) {
  m.doc() = "Damped wave spectra, pressure, geodesic averages and arithmetic length spectra";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  // dwcore
  py::class_<dwcore::DampingProfile>(m, "DampingProfile")
      .def(py::init([](double mean, std::vector<double> cos, std::vector<double> sin, double twist) {
             dwcore::DampingProfile p;
             p.mean = mean;
             p.cosine_coeffs = std::move(cos);
             p.sine_coeffs = std::move(sin);
             p.twist = twist;
             return p;
           }),
           py::arg("mean") = 0.0, py::arg("cos") = std::vector<double>{},
           py::arg("sin") = std::vector<double>{}, py::arg("twist") = 0.0)
      .def("__call__", &dwcore::DampingProfile::operator())
      .def("min_value", &dwcore::DampingProfile::min_value)
      .def("max_value", &dwcore::DampingProfile::max_value)
      .def_readwrite("mean", &dwcore::DampingProfile::mean)
      .def_readwrite("twist", &dwcore::DampingProfile::twist);

  m.def("damped_wave_spectrum",
        [](const dwcore::DampingProfile& p, int K) { return dwcore::damped_wave_spectrum(p, K).values; },
        py::arg("profile"), py::arg("K"));
  m.def("constant_damping_reference",
        [](double a0, int nmax) { return dwcore::constant_damping_reference(a0, nmax).values; });
  m.def("weyl_count", [](const dwcore::DampingProfile& p, int K, double lambda) {
    const auto wc = dwcore::weyl_window_count(dwcore::damped_wave_spectrum(p, K), lambda);
    return py::make_tuple(wc.count, wc.predicted);
  });
  m.def("lebeau_prediction", [](const dwcore::DampingProfile& p, int K) {
    return dwcore::lebeau_quantities(dwcore::damped_wave_spectrum(p, K), p).rho_pred;
  });
  m.def("energy_decay_rate",
        [](const dwcore::DampingProfile& p, int K, double Tmax, std::uint64_t seed) {
          return dwcore::energy_decay_rate(p, K, dwcore::InitialData::generic(K, K / 4, seed), Tmax).rate;
        },
        py::arg("profile"), py::arg("K"), py::arg("Tmax"), py::arg("seed") = 0);

  // thermo
  py::class_<thermo::MarkovModel>(m, "MarkovModel")
      .def_static("full_shift", &thermo::MarkovModel::full_shift)
      .def_static("full_shift_by_target", &thermo::MarkovModel::full_shift_by_target)
      .def_static("golden_mean", &thermo::MarkovModel::golden_mean)
      .def_static("from_json", [](const std::string& s) {
        return thermo::MarkovModel::from_json(nlohmann::json::parse(s));
      })
      .def("to_json", [](const thermo::MarkovModel& mm) { return mm.to_json().dump(); })
      .def_property_readonly("states", &thermo::MarkovModel::states);
  m.def("pressure", &thermo::pressure_transfer, py::arg("model"), py::arg("beta"));
  m.def("rate_function", [](const thermo::MarkovModel& model, int n_alpha) {
    const auto rate = thermo::legendre_rate(thermo::pressure_curve(model, thermo::default_beta_grid()), n_alpha);
    return py::make_tuple(rate.alphas, rate.values);
  }, py::arg("model"), py::arg("n_alpha") = 401);
  m.def("q_extremes", &thermo::q_extremes);
  m.def("abramov_check", [](const thermo::MarkovModel& model, double beta) {
    return thermo::abramov_timechange(model, beta).ratio_check;
  }, py::arg("model"), py::arg("beta") = 0.0);

  // flowavg
  m.def("cohomology_residual",
        [](int which, double T, double fd_step, std::array<std::array<double, 2>, 2> g) {
          flowavg::Mat2 mat;
          mat << g[0][0], g[0][1], g[1][0], g[1][1];
          return flowavg::cohomology_residual(flowavg::test_observable(which),
                                              flowavg::FlowPoint::from_matrix(mat), T, fd_step);
        },
        py::arg("which"), py::arg("T"), py::arg("fd_step"),
        py::arg("g") = std::array<std::array<double, 2>, 2>{{{1.2, 0.3}, {0.4, 0.9}}});

  // arith
  m.def("xm", [](std::int64_t mm) {
    const auto r = arith::xm(mm);
    return py::make_tuple(r.x, r.l);
  });
  m.def("lengths", [](std::int64_t A, std::int64_t p, std::int64_t m_max, std::int64_t box) {
    const auto wls = arith::build_length_spectrum(A, p, m_max, box, arith::WeightMode::ZeroForm, {}, 0);
    std::vector<std::pair<std::int64_t, double>> out;
    for (const auto& e : wls.entries)
      if (!e.classes.empty()) out.emplace_back(e.m, e.l);
    return out;
  });
  m.def("r_search", [](const std::vector<double>& lengths, double M, double T) {
    const auto r = arith::r_search(lengths, M, T);
    return py::make_tuple(static_cast<double>(r.R), r.min_cos);
  });
  m.def("oscillatory_window", [](double lambda, double T, double beta) {
    const auto w = arith::oscillatory_window(lambda, T, beta);
    return py::make_tuple(w.value, w.bound_ok);
  });
  m.def("second_moment", [](double T, double beta, std::int64_t m_max, std::int64_t box) {
    const auto wls = arith::build_length_spectrum(2, 5, m_max, box, arith::WeightMode::ZeroForm, {}, 0);
    const auto sm = arith::windowed_second_moment(wls, 2.0 * beta * std::log(T) - arith::kCSplit, beta, T);
    return py::make_tuple(sm.I, sm.I1, sm.I2);
  }, py::arg("T"), py::arg("beta") = 0.8, py::arg("m_max") = 80, py::arg("box") = 12);
  m.attr("C_SPLIT") = arith::kCSplit;

  // counting
  m.def("polynomial_zeros", [](std::vector<cplx> coeffs, cplx center, double hw, double hh) {
    return counting::argument_principle_zeros(counting::polynomial_sampler(std::move(coeffs)),
                                              counting::ComplexWindow::rectangle(center, hw, hh));
  });
  m.def("polynomial_jensen_bound", [](std::vector<cplx> coeffs, cplx z0, double r, double R_big) {
    return counting::jensen_disk_bound(counting::polynomial_sampler(std::move(coeffs)), z0, r, R_big);
  });
  m.def("deviation_exponent", [](const std::vector<std::pair<double, double>>& ladder) {
    std::vector<counting::LadderPoint> pts;
    for (const auto& [h, c] : ladder) pts.push_back({h, c});
    const auto fit = counting::deviation_exponent(pts);
    return py::make_tuple(fit.slope, fit.residual);
  });

  // harness
  m.def("run_experiment", [](const std::string& config_json) {
    const auto config = cli::ExperimentConfig::from_json(nlohmann::json::parse(config_json));
    return cli::run_experiment(config).to_json().dump();
  }, py::arg("config_json"));
}
