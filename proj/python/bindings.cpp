#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "treerange/errors.hpp"
#include "treerange/gw_trees.hpp"
#include "treerange/harness.hpp"
#include "treerange/indexed_walk.hpp"
#include "treerange/lattice.hpp"
#include "treerange/limits.hpp"
#include "treerange/snake.hpp"
#include "treerange/stats.hpp"

namespace py = pybind11;
using namespace treerange;

namespace {

template <class T>
py::array_t<T> to_array(std::span<const T> v) {
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

template <class T>
py::array_t<T> to_array(const std::vector<T>& v) {
  return to_array(std::span<const T>(v));
}

Site to_site(const std::vector<std::int32_t>& v) {
  if (v.empty() || v.size() > static_cast<std::size_t>(kMaxDim)) throw std::invalid_argument("site needs 1 to 4 coordinates");
  Site s;
  std::copy(v.begin(), v.end(), s.x.begin());
  return s;
}

TrialPlan make_plan(const std::string& label, std::size_t trials, std::uint64_t seed, unsigned workers) {
  return TrialPlan{seed, experiment_tag(label), trials, workers == 0 ? default_workers() : workers};
}

py::dict check_dict(const Check& c) {
  py::dict d;
  d["id"] = c.id;
  d["estimate"] = c.estimate;
  d["se"] = c.se;
  d["statistic"] = c.statistic;
  d["threshold"] = c.threshold;
  d["comparator"] = c.comparator;
  d["pass"] = c.pass;
  d["gating"] = c.gating;
  d["note"] = c.note;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tree-indexed random walks: samplers, limit objects and the verification harness";

  py::register_exception<InvalidDistribution>(m, "InvalidDistribution", PyExc_ValueError);
  py::register_exception<UnreachableSize>(m, "UnreachableSize", PyExc_ValueError);
  py::register_exception<PeriodicOffspring>(m, "PeriodicOffspring", PyExc_ValueError);
  py::register_exception<PeriodicJump>(m, "PeriodicJump", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<OffspringDist>(m, "OffspringDist")
      .def(py::init<std::vector<double>>(), py::arg("pmf"))
      .def_static("geometric_half", &OffspringDist::geometric_half)
      .def_static("binary", &OffspringDist::binary)
      .def_static("poisson_one", &OffspringDist::poisson_one)
      .def_property_readonly("pmf", [](const OffspringDist& mu) { return to_array(mu.pmf()); })
      .def_property_readonly("mean", &OffspringDist::mean)
      .def_property_readonly("rho2", &OffspringDist::rho2)
      .def_property_readonly("aperiodic", &OffspringDist::aperiodic);

  py::class_<JumpDist>(m, "JumpDist")
      .def_static("lazy_simple", &JumpDist::lazy_simple, py::arg("d"), py::arg("hold") = 0.5)
      .def_static("lazy_product", &JumpDist::lazy_product, py::arg("d"))
      .def_static("box_minus_center", &JumpDist::box_minus_center, py::arg("d"), py::arg("r") = 1)
      .def_static("parse", [](const std::string& text) {
        std::istringstream in(text);
        return JumpDist::parse(in);
      })
      .def_property_readonly("dim", &JumpDist::dim)
      .def_property_readonly("covariance", &JumpDist::covariance)
      .def_property_readonly("sigma", &JumpDist::sigma)
      .def_property_readonly("aperiodic", &JumpDist::aperiodic)
      .def("atoms", [](const JumpDist& theta) {
        py::list out;
        for (const auto& a : theta.atoms()) {
          out.append(py::make_tuple(std::vector<std::int32_t>(a.site.x.begin(), a.site.x.begin() + theta.dim()), a.prob));
        }
        return out;
      });

  m.def(
      "sample_tree",
      [](const OffspringDist& mu, std::size_t n, std::uint64_t seed, std::uint64_t stream) {
        Stream rng(seed, stream);
        const auto t = sample_gw_conditioned(mu, n, rng);
        return py::make_tuple(to_array(t.child_counts()), to_array(t.parents()), to_array(t.heights()));
      },
      py::arg("mu"), py::arg("n"), py::arg("seed"), py::arg("stream") = 0,
      "Conditioned tree of size n as (child_counts, parents, heights) in lexicographic order.");
  m.def("total_progeny_pmf", [](const OffspringDist& mu, std::size_t n_max) { return to_array(total_progeny_pmf(mu, n_max)); });
  m.def("kemperman_ratio", &kemperman_ratio);
  m.def(
      "distance_profile",
      [](const std::vector<std::uint32_t>& child_counts, std::size_t k_max) {
        return to_array(distance_profile(PlaneTree(child_counts), k_max));
      },
      py::arg("child_counts"), py::arg("k_max"));

  m.def(
      "conv_power",
      [](const JumpDist& theta, int k, int half_width) {
        const auto f = conv_power(theta, k, half_width);
        std::vector<py::ssize_t> shape(static_cast<std::size_t>(theta.dim()), static_cast<py::ssize_t>(2 * half_width + 1));
        py::array_t<double> out(shape);
        std::copy(f.values().begin(), f.values().end(), out.mutable_data());
        return out;
      },
      py::arg("theta"), py::arg("k"), py::arg("half_width"),
      "theta^{*k} on [-w, w]^d; axis 0 is the last coordinate, so out[..., j, i] is the site (i - w, j - w, ...).");
  m.def("llt_deviation", &llt_deviation, py::arg("theta"), py::arg("n"), py::arg("half_width") = -1);

  m.def(
      "range_sample",
      [](const OffspringDist& mu, const JumpDist& theta, std::size_t n, std::size_t trials, std::uint64_t seed, unsigned workers) {
        RangeSample r;
        {
          py::gil_scoped_release release;
          r = scaled_range_sample(mu, theta, n, make_plan("py.range", trials, seed, workers));
        }
        return to_array(r.range);
      },
      py::arg("mu"), py::arg("theta"), py::arg("n"), py::arg("trials"), py::arg("seed"), py::arg("workers") = 0,
      "Range of the tree-indexed walk for `trials` conditioned trees of size n.");
  m.def(
      "local_time_products",
      [](const OffspringDist& mu, const JumpDist& theta, std::size_t n, const std::vector<std::int32_t>& x,
         const std::vector<std::int32_t>& y, std::size_t trials, std::uint64_t seed, unsigned workers) {
        LocalTimeMoment r;
        {
          py::gil_scoped_release release;
          r = local_time_moment(mu, theta, n, to_site(x), to_site(y), make_plan("py.localtime", trials, seed, workers));
        }
        return to_array(r.products);
      },
      py::arg("mu"), py::arg("theta"), py::arg("n"), py::arg("x"), py::arg("y"), py::arg("trials"), py::arg("seed"),
      py::arg("workers") = 0);
  m.def(
      "hitting_probability",
      [](const OffspringDist& mu, const JumpDist& theta, const std::vector<std::int32_t>& a, std::size_t cap, std::size_t trials,
         std::uint64_t seed, unsigned workers) {
        HittingEstimate e;
        {
          py::gil_scoped_release release;
          e = estimate_hitting_prob(mu, theta, to_site(a), cap == 0 ? default_hitting_cap(to_site(a)) : cap,
                                    make_plan("py.hit", trials, seed, workers));
        }
        py::dict d;
        d["p_hat"] = e.p_hat;
        d["se"] = e.se;
        d["hits"] = e.hits;
        d["capped"] = e.capped;
        d["trials"] = e.trials;
        return d;
      },
      py::arg("mu"), py::arg("theta"), py::arg("a"), py::arg("cap") = 0, py::arg("trials") = 10000, py::arg("seed") = 1,
      py::arg("workers") = 0);

  m.def(
      "sample_excursion",
      [](std::size_t m_steps, std::uint64_t seed, std::uint64_t stream) {
        Stream rng(seed, stream);
        return to_array(sample_excursion(m_steps, rng).values());
      },
      py::arg("m"), py::arg("seed"), py::arg("stream") = 0);
  m.def(
      "sample_snake",
      [](std::size_t m_steps, int d, std::uint64_t seed, std::uint64_t stream) {
        Stream rng(seed, stream);
        const auto snake = evolve_head(sample_excursion(m_steps, rng), d, rng);
        py::array_t<double> heads({static_cast<py::ssize_t>(snake.points()), static_cast<py::ssize_t>(d)});
        std::copy(snake.heads().begin(), snake.heads().end(), heads.mutable_data());
        return py::make_tuple(to_array(snake.excursion().values()), heads);
      },
      py::arg("m"), py::arg("d"), py::arg("seed"), py::arg("stream") = 0,
      "(excursion values, heads of shape (m + 1, d)).");

  py::class_<LimitContext>(m, "LimitContext")
      .def(py::init<double, const Eigen::MatrixXd&>(), py::arg("rho2"), py::arg("covariance"))
      .def(py::init<const OffspringDist&, const JumpDist&>(), py::arg("mu"), py::arg("theta"))
      .def_property_readonly("dim", &LimitContext::dim)
      .def_property_readonly("sigma", &LimitContext::sigma)
      .def_property_readonly("c", &LimitContext::c);
  m.def(
      "phi",
      [](const LimitContext& ctx, const std::vector<double>& x, const std::vector<double>& y, double rel_tol) {
        const auto v = phi(ctx, x, y, rel_tol);
        return py::make_tuple(v.value, v.error);
      },
      py::arg("ctx"), py::arg("x"), py::arg("y"), py::arg("rel_tol") = 1e-6, "(value, error estimate)");
  m.def("inner_kernel", [](const LimitContext& ctx, const std::vector<double>& x, const std::vector<double>& y, double r1, double r2,
                           double r3) { return inner_kernel(ctx, x, y, r1, r2, r3); });
  m.def("triple_density_mass_below", &triple_density_mass_below);
  m.def("hitting_constant", [](int d, const std::vector<double>& x, const std::vector<double>& y) { return hitting_constant(d, x, y); });

  m.def("ks_two_sample", [](const std::vector<double>& a, const std::vector<double>& b) {
    const auto r = ks_two_sample(a, b);
    return py::make_tuple(r.statistic, r.p_value);
  });

  m.def(
      "run_experiment",
      [](const std::string& kind, const std::map<std::string, std::string>& config) {
        const auto k = parse_kind(kind);
        if (!k) throw ConfigError("unknown experiment '" + kind + "'");
        const auto cfg = ExperimentConfig::from_map(*k, config);
        Report report;
        {
          py::gil_scoped_release release;
          report = run(cfg);
        }
        py::list checks;
        for (const auto& c : report.checks) checks.append(check_dict(c));
        return checks;
      },
      py::arg("kind"), py::arg("config"),
      "Runs one experiment from string key-value settings, writes the report to 'out' and returns the checks.");
  m.attr("REPORT_SCHEMA") = std::string(kReportSchema);
}
