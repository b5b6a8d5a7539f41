#include "testspace/io.hpp"

#include <fstream>
#include <sstream>

#include "testspace/error.hpp"

namespace testspace {

Json rational_json(const Rational& value) { return to_string(value); }

Rational rational_from_json(const Json& value) {
  if (value.is_string()) return parse_rational(value.get<std::string>());
  if (value.is_number_integer()) return Rational(value.get<long long>());
  throw Error(ErrorKind::validation, "expected a rational string, got " + value.dump());
}

Json graph_to_json(const WeightedGraph& graph) {
  Json doc;
  doc["type"] = "graph";
  Json vertices = Json::array();
  for (const auto& v : graph.vertices()) {
    Json entry{{"index", v.index}};
    entry["label"] = v.label ? Json(*v.label) : Json(nullptr);
    vertices.push_back(std::move(entry));
  }
  doc["vertices"] = std::move(vertices);
  Json edges = Json::array();
  for (const auto& e : graph.edges()) edges.push_back({{"u", e.u}, {"v", e.v}, {"length", rational_json(e.length)}});
  doc["edges"] = std::move(edges);
  if (graph.terminals()) doc["terminals"] = {graph.terminals()->first, graph.terminals()->second};
  return doc;
}

WeightedGraph graph_from_json(const Json& document) {
  try {
    std::vector<PointId> points;
    for (const auto& entry : document.at("vertices")) {
      PointId point;
      point.index = points.size();
      if (entry.contains("label") && !entry.at("label").is_null()) point.label = entry.at("label").get<std::string>();
      points.push_back(std::move(point));
    }
    std::vector<Edge> edges;
    for (const auto& entry : document.at("edges")) {
      const Rational length = entry.contains("length") ? rational_from_json(entry.at("length")) : Rational(1);
      edges.push_back({entry.at("u").get<std::size_t>(), entry.at("v").get<std::size_t>(), length});
    }
    WeightedGraph graph(std::move(points), std::move(edges));
    if (document.contains("terminals")) {
      const auto& t = document.at("terminals");
      graph.set_terminals(t.at(0).get<std::size_t>(), t.at(1).get<std::size_t>());
    }
    return graph;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::validation, std::string("malformed graph document: ") + e.what());
  }
}

Json space_to_json(const MetricSpace& space) {
  Json doc;
  doc["type"] = "metric";
  doc["size"] = space.size();
  Json labels = Json::array();
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto label = space.label(i);
    labels.push_back(label ? Json(*label) : Json(nullptr));
  }
  doc["labels"] = std::move(labels);
  Json rows = Json::array();
  for (std::size_t i = 0; i < space.size(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < space.size(); ++j) row.push_back(rational_json(space.dist(i, j)));
    rows.push_back(std::move(row));
  }
  doc["distances"] = std::move(rows);
  return doc;
}

MetricSpace space_from_json(const Json& document) {
  if (document.contains("result")) return space_from_json(document.at("result"));
  if (document.contains("graph")) return space_from_json(document.at("graph"));
  if (document.contains("metric")) return space_from_json(document.at("metric"));
  if (document.contains("edges")) return apsp(graph_from_json(document));
  try {
    const auto& rows = document.at("distances");
    const std::size_t n = rows.size();
    std::vector<Rational> table;
    table.reserve(n * n);
    for (const auto& row : rows) {
      if (row.size() != n) throw Error(ErrorKind::validation, "distance table is not square");
      for (const auto& entry : row) table.push_back(rational_from_json(entry));
    }
    std::vector<std::optional<std::string>> labels;
    if (document.contains("labels")) {
      for (const auto& entry : document.at("labels")) {
        labels.push_back(entry.is_null() ? std::nullopt : std::optional<std::string>(entry.get<std::string>()));
      }
    }
    return MetricSpace::from_table(n, std::move(table), std::move(labels));
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::validation, std::string("malformed metric document: ") + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::validation, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

std::vector<RationalVector> read_vectors_csv(std::istream& in) {
  std::vector<RationalVector> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    RationalVector row;
    std::stringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      const auto begin = cell.find_first_not_of(" \t");
      const auto end = cell.find_last_not_of(" \t");
      if (begin == std::string::npos) throw Error(ErrorKind::validation, "empty cell on line " + std::to_string(number));
      try {
        row.push_back(parse_rational(cell.substr(begin, end - begin + 1)));
      } catch (const Error& e) {
        throw Error(ErrorKind::validation, "line " + std::to_string(number) + ": " + e.what());
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RationalVector> read_vectors_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return read_vectors_csv(in);
}

std::string vectors_to_csv(const Embedding& embedding) {
  std::string out;
  for (const auto& v : embedding.vectors) {
    const RationalVector dense = v.to_dense(embedding.target.dim());
    for (std::size_t i = 0; i < dense.size(); ++i) {
      if (i) out += ',';
      out += to_string(dense[i]);
    }
    out += '\n';
  }
  return out;
}

std::string space_to_csv(const MetricSpace& space) {
  std::string out;
  for (std::size_t i = 0; i < space.size(); ++i) {
    for (std::size_t j = 0; j < space.size(); ++j) {
      if (j) out += ',';
      out += to_string(space.dist(i, j));
    }
    out += '\n';
  }
  return out;
}

Embedding embedding_from_vectors(const MetricSpace& space, NormKind kind, const std::vector<RationalVector>& rows) {
  if (rows.size() != space.size()) {
    throw Error(ErrorKind::validation, "expected " + std::to_string(space.size()) + " vectors, got " +
                                           std::to_string(rows.size()));
  }
  const std::size_t dim = rows.empty() ? 1 : rows.front().size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) throw Error(ErrorKind::validation, "row " + std::to_string(i) + " has the wrong length");
  }
  Embedding embedding{space, NormedTarget::l1(dim), {}};
  switch (kind) {
    case NormKind::l1: break;
    case NormKind::l2: embedding.target = NormedTarget::l2(dim); break;
    case NormKind::linf: embedding.target = NormedTarget::linf(dim); break;
    case NormKind::summing: embedding.target = NormedTarget::summing(dim); break;
    case NormKind::gauge: throw Error(ErrorKind::validation, "gauge targets cannot be loaded from CSV");
  }
  for (const auto& row : rows) embedding.vectors.push_back(SparseVector::from_dense(row));
  return embedding;
}

}  // namespace testspace
