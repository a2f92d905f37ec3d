#pragma once

// File formats: KTEN1 dense tensors, edge lists with a JSON sidecar, the
// JSON run configuration and the inference result document.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "kroninfer/kron_graph.hpp"
#include "kroninfer/pipeline.hpp"

namespace kroninfer::io {

/// "KTEN1\n", a JSON line {"row_dims":[..],"col_dims":[..]}, then the
/// entries as little-endian doubles in storage order.
void write_kten(const std::filesystem::path& path, const EvenTensor& t);
/// Throws FormatError on a bad magic, header or payload length.
EvenTensor read_kten(const std::filesystem::path& path);

struct EdgeListHeader {
  std::size_t d = 0;
  GraphShape shape;
  std::uint64_t seed = 0;
};

/// Streams edges to a text file. Quadruple lines "i alpha j beta" or, flat,
/// "u v"; all 1-based.
class EdgeListWriter {
 public:
  EdgeListWriter(const std::filesystem::path& path, const EdgeListHeader& header, bool flat);
  void add(std::size_t row, std::size_t col);
  /// Flushes and throws IoError if any write failed.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t n_;
  bool flat_;
};

/// Writes every nonzero of the adjacency in column-major order.
std::size_t write_edge_list(const std::filesystem::path& path, const EdgeListHeader& header,
                            const EvenTensor& adjacency, bool flat);

struct EdgeList {
  EdgeListHeader header;
  EvenTensor adjacency;
  std::size_t edges = 0;
};
/// Detects the line format per line. Throws FormatError.
EdgeList read_edge_list(const std::filesystem::path& path);

/// Seed, shape, 1-based permutation and (when present) the truth.
nlohmann::json sidecar_json(const GraphSample& sample, const GraphShape& shape);
void apply_sidecar(const nlohmann::json& doc, GraphSample& sample);

/// Fields absent from the document keep the values of `base`.
RunConfig run_config_from_json(const nlohmann::json& doc, const RunConfig& base = {});
nlohmann::json run_config_to_json(const RunConfig& config);

nlohmann::json result_json(const InferenceResult& result);

nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// 17 significant digits.
std::string format_double(double v);

}  // namespace kroninfer::io
