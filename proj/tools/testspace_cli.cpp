// testspace command-line front end. Every command prints one JSON document
// {"result": ..., "meta": {...}} on stdout (or --output); failures print
// {"error": {...}} on stderr with exit code 2 (validation), 3 (cap exceeded),
// 4 (undecided) or 1 (I/O and internal errors).

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "testspace/embeddings.hpp"
#include "testspace/error.hpp"
#include "testspace/generators.hpp"
#include "testspace/io.hpp"
#include "testspace/l2_distortion.hpp"
#include "testspace/markov.hpp"
#include "testspace/rnp.hpp"
#include "testspace/version.hpp"

using namespace testspace;

namespace {

std::string output_path;
std::string format = "json";

Json rationals(const std::vector<Rational>& values) {
  Json out = Json::array();
  for (const auto& v : values) out.push_back(rational_json(v));
  return out;
}

Json double_or_null(double value) { return std::isfinite(value) ? Json(value) : Json(nullptr); }

Json distortion_json(const DistortionReport& report) {
  return {{"exponent", report.exponent},
          {"lip_power", rational_json(report.lip_power)},
          {"colip_power", rational_json(report.colip_power)},
          {"distortion_power", rational_json(report.distortion_power())},
          {"lip", report.lip()},
          {"colip", report.colip()},
          {"distortion", report.distortion()},
          {"lip_witness", {report.lip_witness.i, report.lip_witness.j}},
          {"colip_witness", {report.colip_witness.i, report.colip_witness.j}}};
}

Weighting parse_weighting(const std::string& name) {
  if (name == "unit") return Weighting::unit;
  if (name == "scaled") return Weighting::scaled;
  throw Error(ErrorKind::validation, "unknown weighting '" + name + "'");
}

/// Every option of the command, with its parsed or default value.
Json config_echo(const CLI::App& command) {
  Json config = Json::object();
  for (const CLI::App* app = &command; app != nullptr; app = app->get_parent()) {
    for (const CLI::Option* option : app->get_options()) {
      const std::string name = option->get_name();
      if (name.empty() || name == "--help" || name == "--version" || config.contains(name)) continue;
      if (option->count() > 0) {
        const auto& results = option->results();
        if (option->get_expected_max() > 1) {
          config[name] = results;
        } else if (option->get_type_size() == 0) {
          config[name] = true;
        } else {
          config[name] = results.empty() ? "" : results.back();
        }
      } else if (option->get_type_size() == 0) {
        config[name] = false;
      } else {
        const std::string fallback = option->get_default_str();
        config[name] = fallback.empty() ? Json(nullptr) : Json(fallback);
      }
    }
  }
  return config;
}

std::string command_path(const CLI::App& command) {
  std::string path;
  for (const CLI::App* app = &command; app != nullptr && app->get_parent() != nullptr; app = app->get_parent()) {
    path = path.empty() ? app->get_name() : app->get_name() + " " + path;
  }
  return path;
}

void emit(const std::string& text) {
  if (output_path.empty()) {
    std::cout << text;
  } else {
    write_text_file(output_path, text);
  }
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return 2;
    case ErrorKind::cap_exceeded: return 3;
    case ErrorKind::undecided: return 4;
    case ErrorKind::io:
    case ErrorKind::internal: return 1;
  }
  return 1;
}

void fail(const std::string& kind, const std::string& message, std::optional<Json> extra = std::nullopt) {
  Json error{{"kind", kind}, {"message", message}};
  if (extra) error.update(*extra);
  std::cerr << Json{{"error", error}}.dump() << '\n';
}

using Handler = std::function<Json()>;

struct Command {
  CLI::App* app;
  Handler handler;
  /// Commands that may print CSV instead of JSON.
  std::function<std::string()> csv;
};

// ------------------------------------------------------------------ gen

struct GenOptions {
  std::string family;
  int n = 1;
  std::string weighting = "unit";
  std::vector<int> depths;
};

Json run_gen(const GenOptions& o) {
  Json result{{"family", o.family}};
  auto with_graph = [&](const WeightedGraph& graph) {
    result["vertices"] = graph.num_vertices();
    result["edges"] = graph.num_edges();
    result["graph"] = graph_to_json(graph);
  };
  if (o.family == "tree") {
    with_graph(binary_tree(o.n));
  } else if (o.family == "diamond") {
    with_graph(diamond(o.n, parse_weighting(o.weighting)));
  } else if (o.family == "laakso") {
    with_graph(laakso(o.n, parse_weighting(o.weighting)));
  } else if (o.family == "cycle") {
    with_graph(cycle(static_cast<std::size_t>(o.n)));
  } else if (o.family == "fork") {
    with_graph(testspace::fork());
  } else if (o.family == "heisenberg") {
    const HeisenbergBall ball = heisenberg_ball(o.n);
    result["points"] = ball.elements.size();
    Json elements = Json::array();
    for (std::size_t i = 0; i < ball.elements.size(); ++i) {
      const auto& g = ball.elements[i];
      elements.push_back({{"x", g.x}, {"y", g.y}, {"z", g.z}, {"word_length", ball.word_length[i]}});
    }
    result["elements"] = std::move(elements);
    result["metric"] = space_to_json(ball.space);
  } else if (o.family == "tree-product") {
    if (o.depths.empty()) throw Error(ErrorKind::validation, "tree-product needs --depths");
    const MetricSpace space = tree_product(o.depths);
    result["points"] = space.size();
    result["metric"] = space_to_json(space.materialized());
  } else {
    throw Error(ErrorKind::validation, "unknown family '" + o.family + "'");
  }
  return result;
}

// ------------------------------------------------------------------ apsp

MetricSpace load_space(const std::string& path) { return space_from_json(read_json_file(path)); }

Json run_apsp(const std::string& graph_path) {
  const MetricSpace space = load_space(graph_path);
  const MetricReport report = verify_metric(space);
  return {{"points", space.size()}, {"is_metric", report.valid()}, {"metric", space_to_json(space)}};
}

// ------------------------------------------------------------------ distort

struct DistortOptions {
  std::string space;
  std::string vectors;
  std::string target = "l1";
  int bourgain = -1;
  bool frechet = false;
  std::string write_vectors;
};

Json run_distort(const DistortOptions& o) {
  Embedding embedding;
  if (o.bourgain >= 0) {
    embedding = bourgain_embed(o.bourgain);
  } else {
    if (o.space.empty()) throw Error(ErrorKind::validation, "distort needs --space or --bourgain");
    const MetricSpace space = load_space(o.space);
    if (o.frechet) {
      embedding = frechet_embed(space);
    } else {
      if (o.vectors.empty()) throw Error(ErrorKind::validation, "distort needs --vectors, --frechet or --bourgain");
      embedding = embedding_from_vectors(space, parse_norm_kind(o.target), read_vectors_csv_file(o.vectors));
    }
  }
  if (!o.write_vectors.empty()) write_text_file(o.write_vectors, vectors_to_csv(embedding));
  return {{"points", embedding.space.size()},
          {"target", to_string(embedding.target.kind())},
          {"dimension", embedding.target.dim()},
          {"report", distortion_json(distortion(embedding))}};
}

// ------------------------------------------------------------------ l2min

struct L2Cli {
  std::string space;
  int tree = -1;
  int cycle = -1;
  double tol = 1e-4;
  std::string method = "interior-point";
  bool no_reduce = false;
  bool fork_select = false;
  std::string write_vectors;
  std::string emit_gram;
};

/// Gram matrix of the embedding vectors in the original distance units.
std::string gram_csv(const Embedding& embedding) {
  const std::size_t dim = embedding.target.dim();
  std::vector<RationalVector> rows;
  for (const auto& v : embedding.vectors) rows.push_back(v.to_dense(dim));
  std::string out;
  for (const auto& a : rows) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      Rational dot = 0;
      for (std::size_t k = 0; k < dim; ++k) dot += a[k] * rows[j][k];
      if (j) out += ',';
      out += format_double(to_double(dot));
    }
    out += '\n';
  }
  return out;
}

Json run_l2min(const L2Cli& o) {
  MetricSpace space;
  if (o.tree >= 0) {
    space = binary_tree_metric(o.tree).materialized();
  } else if (o.cycle >= 0) {
    space = apsp(cycle(static_cast<std::size_t>(o.cycle)));
  } else if (!o.space.empty()) {
    space = load_space(o.space);
  } else {
    throw Error(ErrorKind::validation, "l2min needs --space, --tree or --cycle");
  }
  L2Options options;
  options.method = parse_l2_method(o.method);
  options.reduce_symmetry = !o.no_reduce;
  const L2MinResult solved = min_distortion_l2(space, o.tol, options);
  if (!o.write_vectors.empty()) write_text_file(o.write_vectors, vectors_to_csv(solved.embedding));
  if (!o.emit_gram.empty()) write_text_file(o.emit_gram, gram_csv(solved.embedding));
  Json result{{"points", space.size()},
              {"c_star", solved.c_star},
              {"lower", solved.lower},
              {"upper", solved.upper},
              {"method", to_string(solved.method)},
              {"iterations", solved.iterations},
              {"probes", solved.probes},
              {"variables", solved.variables},
              {"reduced", solved.reduced},
              {"embedding", distortion_json(solved.embedding_distortion)}};
  if (o.fork_select) {
    if (o.tree < 2) throw Error(ErrorKind::validation, "--fork-select needs --tree with depth >= 2");
    const ForkSelection selection = fork_select(o.tree, normalize_noncontractive(solved.embedding));
    const ForkGapParams gap = fork_gap_estimate(selection.lipschitz, 2.0, euclidean_modulus());
    const double predicted = gap.forks_exist ? gap.constant / selection.lipschitz : INFINITY;
    result["fork_select"] = {{"input_depth", selection.input_depth},
                             {"output_depth", selection.output_depth},
                             {"structure_exact", selection.structure_exact},
                             {"input_distortion", selection.input_distortion.distortion()},
                             {"output_distortion", selection.output_distortion.distortion()},
                             {"lipschitz", selection.lipschitz},
                             {"improvement", selection.improvement},
                             {"fork_gap", double_or_null(gap.gap)},
                             {"fork_constant", double_or_null(gap.constant)},
                             {"predicted_improvement", double_or_null(predicted)},
                             {"selected", selection.selected}};
  }
  return result;
}

// ------------------------------------------------------------------ markov

struct MarkovCli {
  std::string walk = "tree";
  int n = 1;
  double p = 2.0;
  std::string mode = "exact";
  std::optional<std::uint64_t> seed;
  std::size_t samples = 100'000;
  std::optional<std::size_t> horizon;
  std::string weighting = "unit";
};

Json estimate_json(const ConvexityEstimate& e) {
  Json out{{"p", e.p}, {"method", to_string(e.method)}, {"horizon", e.horizon}, {"max_k", e.max_k}};
  out["lhs"] = e.lhs_exact ? rational_json(*e.lhs_exact) : Json(e.lhs);
  out["rhs"] = e.rhs_exact ? rational_json(*e.rhs_exact) : Json(e.rhs);
  out["lhs_value"] = e.lhs;
  out["rhs_value"] = e.rhs;
  out["piLower"] = e.pi_lower ? Json(*e.pi_lower) : Json(nullptr);
  if (e.method == EstimateMethod::monte_carlo) {
    out["seed"] = e.seed;
    out["samples"] = e.samples;
    out["lhs_stderr"] = e.lhs_stderr;
    out["rhs_stderr"] = e.rhs_stderr;
  }
  return out;
}

Json run_markov(const MarkovCli& o) {
  if (o.mode != "exact" && o.mode != "mc" && o.mode != "analytic") {
    throw Error(ErrorKind::validation, "unknown mode '" + o.mode + "'");
  }
  if (o.mode == "mc" && !o.seed) throw Error(ErrorKind::validation, "Monte Carlo runs need an explicit --seed");
  if (o.walk == "tree" && o.mode == "analytic") return estimate_json(tree_walk_analytic(o.n, o.p));
  if (o.walk != "tree" && o.mode == "analytic") throw Error(ErrorKind::validation, "analytic mode is for --walk tree");

  WalkInstance walk;
  if (o.walk == "tree") {
    walk = downward_tree_walk(o.n);
  } else if (o.walk == "diamond" || o.walk == "laakso") {
    const WeightedGraph graph = o.walk == "diamond" ? diamond(o.n, parse_weighting(o.weighting))
                                                    : laakso(o.n, parse_weighting(o.weighting));
    const std::size_t hops = o.walk == "diamond" ? (std::size_t{1} << o.n) : (std::size_t{1} << (2 * o.n));
    walk = downhill_walk(graph, graph.terminals()->first, graph.terminals()->second, o.horizon.value_or(hops));
  } else {
    throw Error(ErrorKind::validation, "unknown walk '" + o.walk + "'");
  }
  if (o.horizon && o.walk == "tree") walk.chain.horizon = *o.horizon;
  const ConvexityEstimate estimate = o.mode == "exact"
                                         ? exact_convexity(walk.chain, walk.map, walk.space, o.p)
                                         : mc_convexity(walk.chain, walk.map, walk.space, o.p, *o.seed, o.samples);
  Json out = estimate_json(estimate);
  out["states"] = walk.chain.num_states();
  return out;
}

// ------------------------------------------------------------------ rnp

Json run_rnp_tree(int n) {
  const DeltaTree tree = rademacher_tree(n);
  const TreeReport report = verify_tree(tree);
  const DeltaBush bush = tree_to_bush(tree);
  const BushReport bush_report = verify_bush(bush);
  return {{"depth", n},
          {"atoms", tree.dim()},
          {"nodes", tree.nodes.size()},
          {"delta", rational_json(tree.delta)},
          {"midpoints_exact", report.midpoints_exact},
          {"unit_norms", report.unit_norms},
          {"min_separation", rational_json(report.min_separation)},
          {"max_separation", rational_json(report.max_separation)},
          {"bush_convex_combinations_exact", bush_report.convex_combinations_exact},
          {"bush_min_separation", rational_json(bush_report.min_separation)},
          {"bush_sup_norm", rational_json(bush_report.sup_norm)},
          {"ok", report.ok() && bush_report.ok(bush.delta)}};
}

Json run_rnp_lines(int depth, int tree_depth) {
  const DeltaBush bush = tree_to_bush(rademacher_tree(std::max(depth, tree_depth)));
  const BrokenLineFamily family = broken_line_family(bush, depth);
  Json lines = Json::array();
  for (const auto& line : family.lines) {
    lines.push_back({{"label", line.label}, {"segments", line.terms.size()}, {"gauge_sum", rational_json(line.gauge_sum)}});
  }
  Json deviations = Json::array();
  bool all_deviations = true;
  for (const auto& d : family.deviations) {
    deviations.push_back({{"label", d.label}, {"deviation", rational_json(d.deviation)}, {"meets_bound", d.meets_bound}});
    all_deviations = all_deviations && d.meets_bound;
  }
  Json out{{"depth", depth},
           {"gauge_delta", rational_json(family.gauge_delta)},
           {"deviation_bound", rational_json(family.gauge_delta / 2)},
           {"endpoint_gauge", rational_json(family.endpoint_gauge)},
           {"all_geodesic", family.all_geodesic},
           {"vertex_monotone", family.vertex_monotone},
           {"deviations_meet_bound", all_deviations},
           {"lines", std::move(lines)},
           {"deviations", std::move(deviations)}};
  if (family.monotonicity_failure) {
    out["monotonicity_failure"] = {family.monotonicity_failure->first, family.monotonicity_failure->second};
  }
  return out;
}

Json run_rnp_martingale(int level, std::size_t steps, std::size_t budget) {
  const GeodesicFamily family = diamond_geodesic_family(level);
  const ThicknessResult thickness = thickness_alpha(family, budget);
  if (!thickness.complete) throw Error(ErrorKind::cap_exceeded, "thickness search hit its evaluation cap");
  const MartingaleConstruction built =
      martingale_from_embedding(family, diamond_cut_embedding(level), steps, thickness.alpha);
  Json step_reports = Json::array();
  for (const auto& step : built.steps) {
    Json quads = Json::array();
    for (const auto& q : step.quadruples) {
      quads.push_back({{"lhs_z", rational_json(q.lhs_z)},
                       {"lhs_z_tilde", rational_json(q.lhs_z_tilde)},
                       {"picked_tilde", q.picked_tilde},
                       {"branch_bound", rational_json(q.branch_bound)},
                       {"branch_holds", q.branch_holds},
                       {"interval_integral", rational_json(q.interval_integral)},
                       {"interval_bound", rational_json(q.interval_bound)},
                       {"interval_holds", q.interval_holds}});
    }
    step_reports.push_back({{"geodesic", step.geodesic},
                            {"controls", step.controls},
                            {"response", step.response.member},
                            {"common_points", step.response.common},
                            {"deviation_total", rational_json(step.response.total)},
                            {"next_geodesic", step.next_geodesic},
                            {"quadruples", std::move(quads)}});
  }
  const MartingaleReport& report = built.report;
  return {{"diamond", level},
          {"steps", steps},
          {"geodesics", family.members.size()},
          {"ell", rational_json(built.ell)},
          {"alpha", rational_json(built.alpha)},
          {"alpha_configurations", thickness.configurations},
          {"difference_bound", rational_json(*built.martingale.even_difference_bound)},
          {"differences", rationals(report.differences)},
          {"sup_norm", rational_json(report.sup_norm)},
          {"refines", report.refines},
          {"conditional_expectation", report.conditional_expectation},
          {"bounded", report.bounded},
          {"differences_meet_bound", report.differences_meet_bound},
          {"ok", report.ok()},
          {"double_steps", std::move(step_reports)}};
}

// ------------------------------------------------------------------ oracle

Json run_cycle_tree(std::size_t cycle_size, std::size_t max_vertices) {
  const CycleTreeResult r = cycle_tree_lower_oracle(cycle_size, max_vertices);
  return {{"cycle", r.cycle_size},
          {"max_tree_vertices", r.max_tree_vertices},
          {"trees_examined", r.trees_examined},
          {"maps_examined", r.maps_examined},
          {"min_distortion", r.min_distortion ? rational_json(*r.min_distortion) : Json(nullptr)},
          {"lower_bound", rational_json(r.lower_bound)},
          {"bound_holds", r.bound_holds}};
}

Json run_james(std::size_t length, int bound) {
  const JamesSearchResult r = james_alpha(length, bound);
  return {{"length", r.length},
          {"coefficient_bound", r.coefficient_bound},
          {"infimum", rational_json(r.infimum)},
          {"argmin", r.argmin_coefficients},
          {"split", r.argmin_split},
          {"analytic_bound", rational_json(r.analytic_bound)},
          {"evaluated", r.evaluated}};
}

Json run_fork_gap(double d, double q) {
  const ForkGapParams r = fork_gap_estimate(d, q, euclidean_modulus());
  return {{"distortion", d},
          {"q", q},
          {"forks_exist", r.forks_exist},
          {"gap", double_or_null(r.gap)},
          {"constant", double_or_null(r.constant)},
          {"converged", r.converged},
          {"warning", r.warning}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact test-space computations for metric characterizations of Banach space properties", "testspace"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.add_option("-o,--output", output_path, "Write the result to this file instead of stdout");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  int workers = 1;
  app.add_option("--workers", workers, "Worker threads (computations are deterministic for any value)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::vector<Command> commands;

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a graph or metric family");
  gen_cmd->add_option("--family", gen.family, "tree | diamond | laakso | cycle | fork | heisenberg | tree-product")
      ->required();
  gen_cmd->add_option("--n", gen.n, "Depth, level, cycle length or ball radius")->capture_default_str();
  gen_cmd->add_option("--weighting", gen.weighting, "unit | scaled")->capture_default_str();
  gen_cmd->add_option("--depths", gen.depths, "Factor depths for tree-product");
  commands.push_back({gen_cmd, [&] { return run_gen(gen); }, nullptr});

  std::string apsp_graph;
  auto* apsp_cmd = app.add_subcommand("apsp", "All-pairs shortest-path metric of a graph");
  apsp_cmd->add_option("--graph", apsp_graph, "Graph JSON file")->required();
  commands.push_back({apsp_cmd, [&] { return run_apsp(apsp_graph); },
                      [&] { return space_to_csv(load_space(apsp_graph)); }});

  DistortOptions distort;
  auto* distort_cmd = app.add_subcommand("distort", "Exact distortion of an embedding");
  distort_cmd->add_option("--space", distort.space, "Graph or metric JSON file");
  distort_cmd->add_option("--vectors", distort.vectors, "CSV file, one row per point");
  distort_cmd->add_option("--target", distort.target, "l1 | l2 | linf | summing")->capture_default_str();
  distort_cmd->add_option("--bourgain", distort.bourgain, "Use the built-in embedding of T_n into the summing norm");
  distort_cmd->add_flag("--frechet", distort.frechet, "Use the Frechet embedding into l_inf");
  distort_cmd->add_option("--write-vectors", distort.write_vectors, "Also write the vectors as CSV");
  commands.push_back({distort_cmd, [&] { return run_distort(distort); }, nullptr});

  L2Cli l2;
  auto* l2_cmd = app.add_subcommand("l2min", "Minimum Euclidean distortion");
  l2_cmd->add_option("--space", l2.space, "Graph or metric JSON file");
  l2_cmd->add_option("--tree", l2.tree, "Use the binary tree T_n");
  l2_cmd->add_option("--cycle", l2.cycle, "Use the cycle C_n");
  l2_cmd->add_option("--tol", l2.tol, "Bracket width")->capture_default_str();
  l2_cmd->add_option("--method", l2.method, "interior-point | bisection")->capture_default_str();
  l2_cmd->add_flag("--no-reduce", l2.no_reduce, "Disable the symmetry reduction");
  l2_cmd->add_flag("--fork-select", l2.fork_select, "Run fork selection on the optimal tree embedding");
  l2_cmd->add_option("--write-vectors", l2.write_vectors, "Write the optimal embedding as CSV");
  l2_cmd->add_option("--emit-gram", l2.emit_gram, "Write the Gram matrix of the optimal embedding as CSV");
  commands.push_back({l2_cmd, [&] { return run_l2min(l2); }, nullptr});

  MarkovCli markov;
  auto* markov_cmd = app.add_subcommand("markov", "Markov p-convexity functional");
  markov_cmd->add_option("--walk", markov.walk, "tree | diamond | laakso")->capture_default_str();
  markov_cmd->add_option("--n", markov.n, "m for T_{2^m}, level for diamonds and Laakso graphs")->capture_default_str();
  markov_cmd->add_option("--p", markov.p, "Exponent")->capture_default_str();
  markov_cmd->add_option("--mode", markov.mode, "exact | mc | analytic")->capture_default_str();
  markov_cmd->add_option("--seed", markov.seed, "Seed (required for mc)");
  markov_cmd->add_option("--samples", markov.samples, "Monte Carlo samples per term")->capture_default_str();
  markov_cmd->add_option("--horizon", markov.horizon, "Override the horizon");
  markov_cmd->add_option("--weighting", markov.weighting, "unit | scaled")->capture_default_str();
  commands.push_back({markov_cmd, [&] { return run_markov(markov); }, nullptr});

  auto* rnp_cmd = app.add_subcommand("rnp", "Radon-Nikodym pipeline");
  rnp_cmd->require_subcommand(1);
  int rnp_tree_n = 3;
  auto* rnp_tree = rnp_cmd->add_subcommand("tree", "Rademacher delta-tree and its bush");
  rnp_tree->add_option("--n", rnp_tree_n, "Depth")->capture_default_str();
  commands.push_back({rnp_tree, [&] { return run_rnp_tree(rnp_tree_n); }, nullptr});
  int lines_depth = 3;
  int lines_tree = 0;
  auto* rnp_lines = rnp_cmd->add_subcommand("lines", "Broken lines under the gauge norm");
  rnp_lines->add_option("--depth", lines_depth, "Label depth")->capture_default_str();
  rnp_lines->add_option("--tree-depth", lines_tree, "Depth of the underlying tree (at least --depth)");
  commands.push_back({rnp_lines, [&] { return run_rnp_lines(lines_depth, lines_tree); }, nullptr});
  int mart_level = 3;
  std::size_t mart_steps = 2;
  std::size_t mart_budget = 3;
  auto* rnp_mart = rnp_cmd->add_subcommand("martingale", "Martingale from the diamond cut embedding");
  rnp_mart->add_option("--diamond", mart_level, "Diamond level")->capture_default_str();
  rnp_mart->add_option("--steps", mart_steps, "Double steps K")->capture_default_str();
  rnp_mart->add_option("--control-budget", mart_budget, "Control set size for the thickness search")
      ->capture_default_str();
  commands.push_back({rnp_mart, [&] { return run_rnp_martingale(mart_level, mart_steps, mart_budget); }, nullptr});

  auto* oracle_cmd = app.add_subcommand("oracle", "Exhaustive searches");
  oracle_cmd->require_subcommand(1);
  std::size_t cycle_size = 8;
  std::size_t tree_vertices = 6;
  auto* cycle_tree = oracle_cmd->add_subcommand("cycle-tree", "Cycles into trees");
  cycle_tree->add_option("--cycle", cycle_size, "Cycle length")->capture_default_str();
  cycle_tree->add_option("--max-tree", tree_vertices, "Largest tree size")->capture_default_str();
  commands.push_back({cycle_tree, [&] { return run_cycle_tree(cycle_size, tree_vertices); }, nullptr});
  std::size_t james_length = 3;
  int james_bound = 3;
  auto* james = oracle_cmd->add_subcommand("james", "James ratio grid search");
  james->add_option("--length", james_length, "Number of basis vectors")->capture_default_str();
  james->add_option("--bound", james_bound, "Coefficient bound")->capture_default_str();
  commands.push_back({james, [&] { return run_james(james_length, james_bound); }, nullptr});
  double gap_d = 2.0;
  double gap_q = 2.0;
  auto* fork_gap = oracle_cmd->add_subcommand("fork-gap", "Fork lemma gap in Euclidean space");
  fork_gap->add_option("--D", gap_d, "Lipschitz constant")->capture_default_str();
  fork_gap->add_option("--q", gap_q, "Convexity power")->capture_default_str();
  commands.push_back({fork_gap, [&] { return run_fork_gap(gap_d, gap_q); }, nullptr});

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("validation", e.what());
    return 2;
  }

  for (const auto& command : commands) {
    if (!command.app->parsed()) continue;
    try {
      if (format == "csv") {
        if (!command.csv) throw Error(ErrorKind::validation, "csv output is not available for this command");
        emit(command.csv());
        return 0;
      }
      const auto start = std::chrono::steady_clock::now();
      Json result = command.handler();
      const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
      Json meta{{"version", std::string(kVersion)},
                {"command", command_path(*command.app)},
                {"config", config_echo(*command.app)},
                {"timing_ms", elapsed.count()}};
      emit(Json{{"result", std::move(result)}, {"meta", std::move(meta)}}.dump(2) + "\n");
      return 0;
    } catch (const PairError& e) {
      fail(to_string(e.kind()), e.what(), Json{{"pair", {e.pair().first, e.pair().second}}});
      return exit_code(e.kind());
    } catch (const Error& e) {
      fail(to_string(e.kind()), e.what());
      return exit_code(e.kind());
    } catch (const std::exception& e) {
      fail("internal", e.what());
      return 1;
    }
  }
  fail("validation", "no command selected");
  return 2;
}
