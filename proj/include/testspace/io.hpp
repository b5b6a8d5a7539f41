#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "testspace/embeddings.hpp"
#include "testspace/metric_core.hpp"
#include "testspace/rational.hpp"

namespace testspace {

using Json = nlohmann::ordered_json;

/// Rationals travel as "p/q" strings; plain JSON integers are also accepted.
Json rational_json(const Rational& value);
Rational rational_from_json(const Json& value);

/// {"type":"graph","vertices":[{"index","label"}],"edges":[{"u","v","length"}],"terminals":[s,t]}
Json graph_to_json(const WeightedGraph& graph);
WeightedGraph graph_from_json(const Json& document);

/// {"type":"metric","size":n,"labels":[...],"distances":[["0","1",...],...]}
Json space_to_json(const MetricSpace& space);
/// Accepts a metric document, a graph document (closed under apsp), or a
/// command output wrapping either under "result".
MetricSpace space_from_json(const Json& document);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// One row per point, comma-separated rationals. Blank lines and lines
/// starting with '#' are skipped.
std::vector<RationalVector> read_vectors_csv(std::istream& in);
std::vector<RationalVector> read_vectors_csv_file(const std::filesystem::path& path);
std::string vectors_to_csv(const Embedding& embedding);

/// Distance table as CSV, one row per point.
std::string space_to_csv(const MetricSpace& space);

/// Embedding from explicit vectors; all rows must have the target dimension.
Embedding embedding_from_vectors(const MetricSpace& space, NormKind kind, const std::vector<RationalVector>& rows);

}  // namespace testspace
