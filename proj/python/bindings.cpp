#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "testspace/embeddings.hpp"
#include "testspace/error.hpp"
#include "testspace/generators.hpp"
#include "testspace/io.hpp"
#include "testspace/l2_distortion.hpp"
#include "testspace/markov.hpp"
#include "testspace/metric_core.hpp"
#include "testspace/rnp.hpp"
#include "testspace/version.hpp"

namespace py = pybind11;
using namespace testspace;

namespace {

py::object fraction_type() {
  static py::object type = py::module_::import("fractions").attr("Fraction");
  return type;
}

py::object to_fraction(const Rational& value) { return fraction_type()(to_string(value)); }

Rational from_python(const py::handle& value) {
  if (py::isinstance<py::float_>(value)) return from_double(value.cast<double>());
  return parse_rational(py::str(value).cast<std::string>());
}

py::list fractions(const RationalVector& values) {
  py::list out;
  for (const auto& v : values) out.append(to_fraction(v));
  return out;
}

py::list distance_matrix(const MetricSpace& space) {
  py::list rows;
  for (std::size_t i = 0; i < space.size(); ++i) {
    py::list row;
    for (std::size_t j = 0; j < space.size(); ++j) row.append(to_fraction(space.dist(i, j)));
    rows.append(row);
  }
  return rows;
}

MetricSpace space_from_matrix(const py::sequence& rows) {
  const std::size_t n = rows.size();
  std::vector<Rational> table;
  table.reserve(n * n);
  for (const auto& row : rows) {
    const auto seq = row.cast<py::sequence>();
    if (seq.size() != n) throw Error(ErrorKind::validation, "distance matrix is not square");
    for (const auto& entry : seq) table.push_back(from_python(entry));
  }
  return MetricSpace::from_table(n, std::move(table));
}

std::vector<RationalVector> vectors_from_python(const py::sequence& rows) {
  std::vector<RationalVector> out;
  for (const auto& row : rows) {
    RationalVector v;
    for (const auto& entry : row.cast<py::sequence>()) v.push_back(from_python(entry));
    out.push_back(std::move(v));
  }
  return out;
}

Weighting parse_weighting(const std::string& name) {
  if (name == "unit") return Weighting::unit;
  if (name == "scaled") return Weighting::scaled;
  throw Error(ErrorKind::validation, "weighting must be 'unit' or 'scaled'");
}

py::dict distortion_dict(const DistortionReport& report) {
  py::dict out;
  out["exponent"] = report.exponent;
  out["lip_power"] = to_fraction(report.lip_power);
  out["colip_power"] = to_fraction(report.colip_power);
  out["distortion_power"] = to_fraction(report.distortion_power());
  out["distortion"] = report.distortion();
  out["lip_witness"] = py::make_tuple(report.lip_witness.i, report.lip_witness.j);
  out["colip_witness"] = py::make_tuple(report.colip_witness.i, report.colip_witness.j);
  return out;
}

py::dict estimate_dict(const ConvexityEstimate& e) {
  py::dict out;
  out["p"] = e.p;
  out["method"] = to_string(e.method);
  out["horizon"] = e.horizon;
  out["max_k"] = e.max_k;
  out["lhs"] = e.lhs_exact ? to_fraction(*e.lhs_exact) : py::cast(e.lhs);
  out["rhs"] = e.rhs_exact ? to_fraction(*e.rhs_exact) : py::cast(e.rhs);
  out["pi_lower"] = e.pi_lower ? py::cast(*e.pi_lower) : py::none();
  if (e.method == EstimateMethod::monte_carlo) {
    out["seed"] = e.seed;
    out["samples"] = e.samples;
    out["lhs_stderr"] = e.lhs_stderr;
    out["rhs_stderr"] = e.rhs_stderr;
  }
  return out;
}

WalkInstance make_walk(const std::string& walk, int n, const std::string& weighting) {
  if (walk == "tree") return downward_tree_walk(n);
  if (walk == "diamond") return downhill_walk(diamond(n, parse_weighting(weighting)), 0, 1, std::size_t{1} << n);
  if (walk == "laakso") return downhill_walk(laakso(n, parse_weighting(weighting)), 0, 1, std::size_t{1} << (2 * n));
  throw Error(ErrorKind::validation, "walk must be 'tree', 'diamond' or 'laakso'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exact test-space computations";
  m.attr("__version__") = std::string(kVersion);

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  static py::exception<Error> validation(m, "ValidationError", base.ptr());
  static py::exception<Error> cap(m, "CapExceeded", base.ptr());
  static py::exception<Error> undecided(m, "Undecided", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::validation: py::set_error(validation, e.what()); break;
        case ErrorKind::cap_exceeded: py::set_error(cap, e.what()); break;
        case ErrorKind::undecided: py::set_error(undecided, e.what()); break;
        default: py::set_error(base, e.what()); break;
      }
    }
  });

  py::class_<MetricSpace>(m, "MetricSpace")
      .def(py::init(&space_from_matrix), py::arg("distances"))
      .def(py::init([](const WeightedGraph& g) { return apsp(g); }), py::arg("graph"))
      .def("__len__", &MetricSpace::size)
      .def_property_readonly("size", &MetricSpace::size)
      .def("dist", [](const MetricSpace& s, std::size_t i, std::size_t j) {
        if (i >= s.size() || j >= s.size()) throw py::index_error("point index out of range");
        return to_fraction(s.dist(i, j));
      })
      .def("matrix", &distance_matrix)
      .def("labels", &MetricSpace::labels)
      .def("scaled", [](const MetricSpace& s, const py::handle& factor) { return s.scaled(from_python(factor)); })
      .def("subspace", [](const MetricSpace& s, const std::vector<std::size_t>& points) { return s.subspace(points); })
      .def("to_json", [](const MetricSpace& s) { return space_to_json(s).dump(); })
      .def_static("from_json", [](const std::string& text) { return space_from_json(Json::parse(text)); });

  py::class_<WeightedGraph>(m, "Graph")
      .def_property_readonly("num_vertices", &WeightedGraph::num_vertices)
      .def_property_readonly("num_edges", &WeightedGraph::num_edges)
      .def("edges", [](const WeightedGraph& g) {
        py::list out;
        for (const auto& e : g.edges()) out.append(py::make_tuple(e.u, e.v, to_fraction(e.length)));
        return out;
      })
      .def_property_readonly("terminals", &WeightedGraph::terminals)
      .def("labels", &WeightedGraph::labels)
      .def("to_json", [](const WeightedGraph& g) { return graph_to_json(g).dump(); });
  py::implicitly_convertible<WeightedGraph, MetricSpace>();

  m.def("binary_tree", [](int depth) { return binary_tree(depth); }, py::arg("depth"));
  m.def("binary_tree_metric", [](int depth) { return binary_tree_metric(depth); }, py::arg("depth"));
  m.def("fork", [] { return testspace::fork(); });
  m.def("diamond", [](int level, const std::string& w) { return diamond(level, parse_weighting(w)); }, py::arg("level"),
        py::arg("weighting") = "unit");
  m.def("laakso", [](int level, const std::string& w) { return laakso(level, parse_weighting(w)); }, py::arg("level"),
        py::arg("weighting") = "unit");
  m.def("cycle", &cycle, py::arg("size"));
  m.def("tree_product", [](const std::vector<int>& depths) { return tree_product(depths); }, py::arg("depths"));
  m.def("heisenberg_ball", [](int radius) {
        const auto ball = heisenberg_ball(radius);
        py::list elements;
        for (const auto& g : ball.elements) elements.append(py::make_tuple(g.x, g.y, g.z));
        return py::make_tuple(elements, ball.word_length, ball.space);
      }, py::arg("radius"));

  m.def("apsp", &apsp, py::arg("graph"));
  m.def("verify_metric", [](const MetricSpace& space) {
        py::list out;
        for (const auto& v : verify_metric(space).violations) out.append(py::make_tuple(to_string(v.kind), v.i, v.j, v.k));
        return out;
      }, py::arg("space"));
  m.def("geodesics", [](const WeightedGraph& g, std::size_t u, std::size_t v) {
        py::list out;
        for (const auto& p : enumerate_geodesic_paths(g, u, v)) out.append(p.vertices);
        return out;
      }, py::arg("graph"), py::arg("source"), py::arg("sink"));

  m.def("distortion", [](const MetricSpace& space, const py::sequence& vectors, const std::string& target) {
        return distortion_dict(distortion(embedding_from_vectors(space, parse_norm_kind(target), vectors_from_python(vectors))));
      }, py::arg("space"), py::arg("vectors"), py::arg("target") = "l1");
  m.def("bourgain_distortion", [](int depth) { return distortion_dict(distortion(bourgain_embed(depth))); },
        py::arg("depth"));
  m.def("james_alpha", [](std::size_t length, int bound) {
        const auto r = james_alpha(length, bound);
        return py::make_tuple(to_fraction(r.infimum), r.argmin_coefficients, r.argmin_split);
      }, py::arg("length"), py::arg("bound") = 3);
  m.def("cycle_tree_oracle", [](std::size_t cycle_size, std::size_t max_tree) {
        const auto r = cycle_tree_lower_oracle(cycle_size, max_tree);
        return py::make_tuple(r.min_distortion ? to_fraction(*r.min_distortion) : py::none(), r.trees_examined,
                              r.maps_examined);
      }, py::arg("cycle_size"), py::arg("max_tree_vertices"));

  m.def("min_distortion_l2", [](const MetricSpace& space, double tol, const std::string& method, bool reduce) {
        L2Options options;
        options.method = parse_l2_method(method);
        options.reduce_symmetry = reduce;
        const auto r = min_distortion_l2(space, tol, options);
        py::dict out;
        out["c_star"] = r.c_star;
        out["lower"] = r.lower;
        out["upper"] = r.upper;
        out["method"] = to_string(r.method);
        out["iterations"] = r.iterations;
        out["gram"] = r.certificate.gram;
        out["scale"] = r.certificate.scale;
        py::list vectors;
        for (const auto& v : r.embedding.vectors) vectors.append(fractions(v.to_dense(r.embedding.target.dim())));
        out["vectors"] = vectors;
        return out;
      }, py::arg("space"), py::arg("tol") = 1e-4, py::arg("method") = "interior-point", py::arg("reduce_symmetry") = true);
  m.def("fork_gap", [](double d, double q) {
        const auto g = fork_gap_estimate(d, q, euclidean_modulus());
        return py::make_tuple(g.gap, g.constant, g.forks_exist);
      }, py::arg("distortion"), py::arg("q") = 2.0);

  m.def("markov_convexity", [](const std::string& walk, int n, double p, const std::string& mode,
                               std::optional<std::uint64_t> seed, std::size_t samples, const std::string& weighting) {
        if (mode == "analytic") {
          if (walk != "tree") throw Error(ErrorKind::validation, "analytic mode is only available for the tree walk");
          return estimate_dict(tree_walk_analytic(n, p));
        }
        const auto instance = make_walk(walk, n, weighting);
        if (mode == "exact") return estimate_dict(exact_convexity(instance.chain, instance.map, instance.space, p));
        if (mode == "mc") {
          if (!seed) throw Error(ErrorKind::validation, "Monte Carlo mode needs an explicit seed");
          return estimate_dict(mc_convexity(instance.chain, instance.map, instance.space, p, *seed, samples));
        }
        throw Error(ErrorKind::validation, "mode must be 'exact', 'mc' or 'analytic'");
      }, py::arg("walk") = "tree", py::arg("n") = 1, py::arg("p") = 2.0, py::arg("mode") = "exact",
        py::arg("seed") = py::none(), py::arg("samples") = 100000, py::arg("weighting") = "unit");

  m.def("rademacher_tree_ok", [](int depth) { return verify_tree(rademacher_tree(depth)).ok(); }, py::arg("depth"));
  m.def("broken_lines", [](int depth) {
        const auto family = broken_line_family(tree_to_bush(rademacher_tree(depth)), depth);
        py::dict out;
        out["lines"] = family.lines.size();
        out["gauge_delta"] = to_fraction(family.gauge_delta);
        out["all_geodesic"] = family.all_geodesic;
        out["vertex_monotone"] = family.vertex_monotone;
        py::list deviations;
        for (const auto& d : family.deviations) deviations.append(to_fraction(d.deviation));
        out["deviations"] = deviations;
        return out;
      }, py::arg("depth"));
  m.def("diamond_thickness", [](int level, std::size_t budget) {
        return to_fraction(thickness_alpha(diamond_geodesic_family(level), budget).alpha);
      }, py::arg("level"), py::arg("control_budget") = 2);
  m.def("diamond_martingale", [](int level, std::size_t steps, std::size_t budget) {
        const auto family = diamond_geodesic_family(level);
        const auto alpha = thickness_alpha(family, budget).alpha;
        const auto built = martingale_from_embedding(family, diamond_cut_embedding(level), steps, alpha);
        py::dict out;
        out["ell"] = to_fraction(built.ell);
        out["alpha"] = to_fraction(built.alpha);
        out["ok"] = built.report.ok();
        py::list differences;
        for (const auto& d : built.report.differences) differences.append(to_fraction(d));
        out["differences"] = differences;
        out["sup_norm"] = to_fraction(built.report.sup_norm);
        return out;
      }, py::arg("level"), py::arg("steps") = 2, py::arg("control_budget") = 2);
}
