#include "kroninfer/io.hpp"

#include <bit>
#include <cstdio>
#include <iterator>
#include <sstream>
#include <vector>

#include "kroninfer/errors.hpp"

namespace kroninfer::io {
namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "KTEN1 payloads are written in native little-endian order");

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

Dims dims_from(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_array()) throw FormatError(std::string("KTEN1 header lacks ") + key);
  Dims out;
  for (const auto& v : doc[key]) {
    if (!v.is_number_unsigned() || v.get<std::size_t>() == 0)
      throw FormatError(std::string("KTEN1 ") + key + " must hold positive integers");
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

std::size_t parse_index(const std::string& token, std::size_t limit, const std::filesystem::path& path,
                        std::size_t line) {
  std::size_t pos = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(token, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != token.size() || token.empty() || token[0] == '-' || value == 0 || value > limit)
    throw FormatError(path.string() + ":" + std::to_string(line) + ": index '" + token + "' outside 1.." +
                      std::to_string(limit));
  return static_cast<std::size_t>(value - 1);
}

template <class T>
T field(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc[key].is_null()) return fallback;
  const json& v = doc[key];
  if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw FormatError(std::string("'") + key + "' must be a number");
    return v.get<double>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw FormatError(std::string("'") + key + "' must be a string");
    return v.get<std::string>();
  } else {
    if (!v.is_number_unsigned()) throw FormatError(std::string("'") + key + "' must be a non-negative integer");
    return v.get<T>();
  }
}

std::vector<double> number_list(const json& v, const char* key) {
  if (!v.is_array()) throw FormatError(std::string("'") + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw FormatError(std::string("'") + key + "' must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace

void write_kten(const std::filesystem::path& path, const EvenTensor& t) {
  std::ofstream out = open_out(path, std::ios::binary);
  const json header = {{"row_dims", t.row_dims()}, {"col_dims", t.col_dims()}};
  out << "KTEN1\n" << header.dump() << "\n";
  out.write(reinterpret_cast<const char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  out.close();
  if (!out) throw IoError("short write to " + path.string());
}

EvenTensor read_kten(const std::filesystem::path& path) {
  std::ifstream in = open_in(path, std::ios::binary);
  std::string magic;
  std::getline(in, magic);
  if (magic != "KTEN1") throw FormatError(path.string() + " is not a KTEN1 file");
  std::string header_line;
  if (!std::getline(in, header_line)) throw FormatError(path.string() + ": missing KTEN1 header");
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": bad KTEN1 header: " + e.what());
  }
  Dims rows = dims_from(header, "row_dims");
  Dims cols = dims_from(header, "col_dims");
  const std::size_t count = dims_product(rows) * dims_product(cols);
  std::vector<double> data(count);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double))
    throw FormatError(path.string() + ": payload shorter than " + std::to_string(count) + " values");
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError(path.string() + ": trailing bytes after payload");
  return EvenTensor(std::move(rows), std::move(cols), std::move(data));
}

EdgeListWriter::EdgeListWriter(const std::filesystem::path& path, const EdgeListHeader& header, bool flat)
    : path_(path), out_(open_out(path)), n_(header.shape.n()), flat_(flat) {
  out_ << "#kron d=" << header.d << " m=" << header.shape.m << " l=" << header.shape.l << " K=" << header.shape.K
       << " seed=" << header.seed << "\n";
}

void EdgeListWriter::add(std::size_t row, std::size_t col) {
  if (flat_) {
    out_ << row + 1 << ' ' << col + 1 << '\n';
  } else {
    out_ << row % n_ + 1 << ' ' << row / n_ + 1 << ' ' << col % n_ + 1 << ' ' << col / n_ + 1 << '\n';
  }
}

void EdgeListWriter::close() {
  out_.close();
  if (!out_) throw IoError("short write to " + path_.string());
}

std::size_t write_edge_list(const std::filesystem::path& path, const EdgeListHeader& header,
                            const EvenTensor& adjacency, bool flat) {
  EdgeListWriter writer(path, header, flat);
  std::size_t edges = 0;
  for (std::size_t v = 0; v < adjacency.cols(); ++v)
    for (std::size_t u = 0; u < adjacency.rows(); ++u)
      if (adjacency.at(u, v) != 0.0) {
        writer.add(u, v);
        ++edges;
      }
  writer.close();
  return edges;
}

EdgeList read_edge_list(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  EdgeList out;
  bool have_header = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream tokens(line);
    if (line[0] == '#') {
      std::string word;
      tokens >> word;
      if (word != "#kron") continue;
      std::size_t found = 0;
      while (tokens >> word) {
        const auto eq = word.find('=');
        if (eq == std::string::npos) throw FormatError(path.string() + ": bad header field '" + word + "'");
        const std::string key = word.substr(0, eq);
        const std::string value = word.substr(eq + 1);
        unsigned long long parsed = 0;
        try {
          std::size_t pos = 0;
          parsed = std::stoull(value, &pos);
          if (pos != value.size()) throw FormatError("");
        } catch (const std::exception&) {
          throw FormatError(path.string() + ": header field '" + word + "' is not an integer");
        }
        if (key == "d") out.header.d = parsed, ++found;
        else if (key == "m") out.header.shape.m = parsed, ++found;
        else if (key == "l") out.header.shape.l = parsed, ++found;
        else if (key == "K") out.header.shape.K = parsed, ++found;
        else if (key == "seed") out.header.seed = parsed;
      }
      if (found != 4) throw FormatError(path.string() + ": header needs d, m, l and K");
      try {
        out.header.shape.validate();
      } catch (const ParameterError& e) {
        throw FormatError(path.string() + ": " + e.what());
      }
      if (out.header.shape.d() != out.header.d)
        throw FormatError(path.string() + ": d=" + std::to_string(out.header.d) + " is not (m l)^K");
      require_dense(out.header.d, "edge list");
      const Dims dims = out.header.shape.power_dims();
      out.adjacency = EvenTensor(dims, dims);
      have_header = true;
      continue;
    }
    if (!have_header) throw FormatError(path.string() + ": edges before the #kron header");
    std::vector<std::string> fields{std::istream_iterator<std::string>(tokens), std::istream_iterator<std::string>()};
    const std::size_t d = out.header.d;
    const std::size_t n = out.header.shape.n();
    const std::size_t layers = out.header.shape.layers();
    std::size_t row = 0;
    std::size_t col = 0;
    if (fields.size() == 2) {
      row = parse_index(fields[0], d, path, lineno);
      col = parse_index(fields[1], d, path, lineno);
    } else if (fields.size() == 4) {
      row = parse_index(fields[0], n, path, lineno) + n * parse_index(fields[1], layers, path, lineno);
      col = parse_index(fields[2], n, path, lineno) + n * parse_index(fields[3], layers, path, lineno);
    } else {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 2 or 4 indices");
    }
    double& entry = out.adjacency.at(row, col);
    if (entry == 0.0) ++out.edges;
    entry = 1.0;
  }
  if (!have_header) throw FormatError(path.string() + ": missing #kron header");
  return out;
}

json sidecar_json(const GraphSample& sample, const GraphShape& shape) {
  json doc;
  doc["seed"] = sample.seed;
  doc["d"] = shape.d();
  doc["m"] = shape.m;
  doc["l"] = shape.l;
  doc["K"] = shape.K;
  json perm = json::array();
  for (std::size_t v : sample.permutation) perm.push_back(v + 1);
  doc["permutation"] = std::move(perm);
  if (sample.truth) {
    const auto x = sample.truth->x.data();
    doc["truth"] = {{"p", sample.truth->p},
                    {"x", std::vector<double>(x.begin(), x.end())},
                    {"m", sample.truth->shape.m},
                    {"l", sample.truth->shape.l},
                    {"K", sample.truth->shape.K}};
  }
  return doc;
}

void apply_sidecar(const json& doc, GraphSample& sample) {
  if (!doc.is_object()) throw FormatError("sidecar must be a JSON object");
  sample.seed = field<std::uint64_t>(doc, "seed", sample.seed);
  const std::size_t d = sample.adjacency.rows();
  if (doc.contains("permutation")) {
    Permutation perm;
    for (const auto& v : doc["permutation"]) {
      if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) throw FormatError("permutation entries are 1-based");
      perm.push_back(v.get<std::size_t>() - 1);
    }
    if (perm.size() != d || !is_permutation(perm)) throw FormatError("sidecar permutation is not a permutation of 1..d");
    sample.permutation = std::move(perm);
  }
  if (doc.contains("truth") && !doc["truth"].is_null()) {
    const json& t = doc["truth"];
    GraphShape shape{field<std::size_t>(t, "m", 0), field<std::size_t>(t, "l", 0), field<std::size_t>(t, "K", 0)};
    try {
      shape.validate();
      if (!t.contains("x")) throw FormatError("truth lacks x");
      const std::vector<double> x = number_list(t["x"], "x");
      sample.truth = InitiatorParams{field<double>(t, "p", 0.0), fluctuation_from_vec(shape, x), shape};
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("bad truth in sidecar: ") + e.what());
    }
    if (shape.d() != d) throw FormatError("truth shape does not match the adjacency");
  }
}

RunConfig run_config_from_json(const json& doc, const RunConfig& base) {
  if (!doc.is_object()) throw FormatError("run configuration must be a JSON object");
  RunConfig out = base;
  out.shape.m = field<std::size_t>(doc, "m", out.shape.m);
  out.shape.l = field<std::size_t>(doc, "l", out.shape.l);
  out.shape.K = field<std::size_t>(doc, "K", out.shape.K);
  out.p = field<double>(doc, "p", out.p);
  if (doc.contains("x")) out.x = number_list(doc["x"], "x");
  out.seed = field<std::uint64_t>(doc, "seed", out.seed);
  out.permutation_s = field<std::size_t>(doc, "permutation_s", out.permutation_s);
  if (doc.contains("rank_cap") && !doc["rank_cap"].is_null())
    out.rank_cap = field<std::size_t>(doc, "rank_cap", 0);
  const std::string rule = field<std::string>(doc, "rank_rule", out.rank_rule == RankRule::printed ? "printed" : "signal_bound");
  if (rule == "printed") out.rank_rule = RankRule::printed;
  else if (rule == "signal_bound") out.rank_rule = RankRule::signal_bound;
  else throw FormatError("rank_rule must be signal_bound or printed");
  if (doc.contains("solver")) {
    const json& s = doc["solver"];
    if (!s.is_object()) throw FormatError("'solver' must be an object");
    try {
      if (s.contains("method")) out.solver.method = parse_solve_method(field<std::string>(s, "method", "iht"));
    } catch (const ParameterError& e) {
      throw FormatError(e.what());
    }
    out.solver.eta = field<double>(s, "eta", out.solver.eta);
    out.solver.sparsity = field<std::size_t>(s, "sparsity", out.solver.sparsity);
    out.solver.gamma = field<double>(s, "gamma", out.solver.gamma);
    out.solver.max_iter = field<std::size_t>(s, "max_iter", out.solver.max_iter);
    out.solver.tol = field<double>(s, "tol", out.solver.tol);
  }
  if (out.x.size() != out.shape.q() * out.shape.q())
    throw FormatError("'x' needs (m l)^2 = " + std::to_string(out.shape.q() * out.shape.q()) + " values");
  return out;
}

json run_config_to_json(const RunConfig& config) {
  json doc;
  doc["m"] = config.shape.m;
  doc["l"] = config.shape.l;
  doc["K"] = config.shape.K;
  doc["p"] = config.p;
  doc["x"] = config.x;
  doc["seed"] = config.seed;
  doc["permutation_s"] = config.permutation_s;
  doc["solver"] = {{"method", to_string(config.solver.method)}, {"eta", config.solver.eta},
                   {"sparsity", config.solver.sparsity},        {"gamma", config.solver.gamma},
                   {"max_iter", config.solver.max_iter},        {"tol", config.solver.tol}};
  if (config.rank_cap) doc["rank_cap"] = *config.rank_cap;
  doc["rank_rule"] = config.rank_rule == RankRule::printed ? "printed" : "signal_bound";
  return doc;
}

json result_json(const InferenceResult& result) {
  json doc;
  doc["shape"] = {{"m", result.shape.m}, {"l", result.shape.l}, {"K", result.shape.K}, {"d", result.shape.d()}};
  doc["pk_hat"] = result.pk_hat;
  doc["p_hat"] = result.p_hat;
  doc["x_hat"] = result.solve.x_hat;
  json entries = json::array();
  for (const auto& [index, value] : result.solve.d_hat) entries.push_back({index + 1, value});
  doc["d_hat"] = {{"nonzeros", result.solve.d_hat.size()}, {"entries", std::move(entries)}};
  doc["denoise"] = {{"pk_hat", result.denoise.pk_hat},
                    {"p_hat", result.denoise.p_hat},
                    {"rank_cap", result.denoise.rank_cap},
                    {"kept", result.denoise.kept},
                    {"sigma", vector_json(result.denoise.sigma)}};
  doc["solve"] = {{"iterations", result.solve.iterations},
                  {"converged", result.solve.converged},
                  {"residual_history", result.solve.residual_history}};
  if (!result.solve.objective_history.empty()) doc["solve"]["objective_history"] = result.solve.objective_history;
  if (!result.metrics.empty()) doc["metrics"] = result.metrics;
  return doc;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  out.close();
  if (!out) throw IoError("short write to " + path.string());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace kroninfer::io
