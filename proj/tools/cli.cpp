#include "cli.hpp"

#include <omp.h>

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "kroninfer/errors.hpp"
#include "kroninfer/io.hpp"
#include "kroninfer/kron_graph.hpp"
#include "kroninfer/pipeline.hpp"

namespace kroninfer::cli {
namespace {

namespace fs = std::filesystem;
using io::format_double;

enum Exit { ok = 0, failure = 1, io_error = 2, divergence = 3, malformed = 4, usage = 64 };

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Model flags shared by every subcommand; unset flags leave the config alone.
struct ModelFlags {
  std::string config;
  std::optional<std::size_t> m, l, K;
  std::optional<double> p;
  std::vector<double> x;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> permutation_s;
  std::optional<std::size_t> rank_cap;
  std::string rank_rule;
  std::string solver;
  std::optional<double> eta, gamma, tol;
  std::optional<std::size_t> sparsity, max_iter;

  void attach(CLI::App& app) {
    app.add_option("--config", config, "JSON run configuration");
    app.add_option("--m", m, "initiator nodes");
    app.add_option("--l", l, "initiator layers");
    app.add_option("--K", K, "Kronecker depth");
    app.add_option("--p", p, "base edge probability");
    app.add_option("--x", x, "vec(mat(X)), column-major")->delimiter(',');
    app.add_option("--seed", seed, "random seed");
    app.add_option("--permutation-s", permutation_s, "displaced vertex-layer labels");
    app.add_option("--rank-cap", rank_cap, "number of singular values examined");
    app.add_option("--rank-rule", rank_rule, "signal_bound or printed")
        ->check(CLI::IsMember({"signal_bound", "printed"}));
    app.add_option("--solver", solver, "iht or lasso")->check(CLI::IsMember({"iht", "lasso"}));
    app.add_option("--eta", eta, "IHT step length");
    app.add_option("--sparsity", sparsity, "IHT nonzero budget for vec(D)");
    app.add_option("--gamma", gamma, "LASSO penalty");
    app.add_option("--max-iter", max_iter, "solver iteration cap");
    app.add_option("--tol", tol, "solver tolerance on the X update");
  }

  // Returns the config document (empty object without --config).
  nlohmann::json document() const { return config.empty() ? nlohmann::json::object() : io::read_json(config); }

  RunConfig resolve(const nlohmann::json& doc, RunConfig base) const {
    RunConfig c = io::run_config_from_json(doc, base);
    if (m) c.shape.m = *m;
    if (l) c.shape.l = *l;
    if (K) c.shape.K = *K;
    if (p) c.p = *p;
    if (!x.empty()) c.x = x;
    if (seed) c.seed = *seed;
    if (permutation_s) c.permutation_s = *permutation_s;
    if (rank_cap) c.rank_cap = *rank_cap;
    if (!rank_rule.empty()) c.rank_rule = rank_rule == "printed" ? RankRule::printed : RankRule::signal_bound;
    if (!solver.empty()) c.solver.method = parse_solve_method(solver);
    if (eta) c.solver.eta = *eta;
    if (gamma) c.solver.gamma = *gamma;
    if (tol) c.solver.tol = *tol;
    if (sparsity) c.solver.sparsity = *sparsity;
    if (max_iter) c.solver.max_iter = *max_iter;
    c.shape.validate();
    if (c.x.size() != c.shape.q() * c.shape.q())
      throw ParameterError("x needs (m l)^2 = " + std::to_string(c.shape.q() * c.shape.q()) + " values");
    return c;
  }
};

fs::path output_dir(const std::string& flag, const nlohmann::json& doc) {
  std::string dir = flag;
  if (dir.empty() && doc.contains("output_dir") && doc["output_dir"].is_string()) dir = doc["output_dir"];
  if (dir.empty()) dir = ".";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
  return dir;
}

std::vector<std::uint64_t> unsigned_list(const nlohmann::json& doc, const char* key, std::vector<std::uint64_t> flag,
                                         std::vector<std::uint64_t> fallback) {
  std::vector<std::uint64_t> out = std::move(flag);
  if (out.empty() && doc.contains(key)) {
    if (!doc[key].is_array()) throw FormatError(std::string("'") + key + "' must be an array");
    for (const auto& v : doc[key]) {
      if (!v.is_number_unsigned()) throw FormatError(std::string("'") + key + "' must hold non-negative integers");
      out.push_back(v.get<std::uint64_t>());
    }
  }
  if (out.empty()) out = std::move(fallback);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> checked_sizes(const RunConfig& config, const std::vector<std::uint64_t>& sizes) {
  std::vector<std::size_t> out;
  for (std::uint64_t d : sizes) {
    (void)GraphShape::from_side(config.shape.m, config.shape.l, d);
    out.push_back(static_cast<std::size_t>(d));
  }
  return out;
}

// Runs f over the (size, seed) grid with up to `jobs` concurrent points and
// returns the results in grid order.
template <class Point, class F>
std::vector<Point> sweep(const std::vector<std::size_t>& sizes, const std::vector<std::uint64_t>& seeds, int jobs,
                         F f) {
  const std::size_t total = sizes.size() * seeds.size();
  std::vector<Point> points(total);
  std::vector<std::exception_ptr> errors(total);
  const auto n = static_cast<std::int64_t>(total);
#pragma omp parallel for num_threads(jobs) schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      points[k] = f(sizes[k / seeds.size()], seeds[k % seeds.size()]);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return points;
}

struct SweepFlags {
  std::vector<std::uint64_t> sizes;
  std::vector<std::uint64_t> seeds;
  int jobs = 1;
  std::string out;

  void attach(CLI::App& app) {
    app.add_option("--sizes", sizes, "graph sides d (powers of m l)")->delimiter(',');
    app.add_option("--seeds", seeds, "seeds per size")->delimiter(',');
    app.add_option("--jobs", jobs, "concurrent sweep points")->check(CLI::PositiveNumber);
    app.add_option("--out", out, "output directory");
  }
};

const std::vector<std::uint64_t> kDefaultSizes{256, 512, 1024, 2048, 4096};
const std::vector<std::uint64_t> kDefaultSeeds{1, 2, 3, 4, 5};

int cmd_gen(const ModelFlags& model, const std::string& out_flag, bool flat, bool dense, std::ostream& out) {
  const nlohmann::json doc = model.document();
  const RunConfig config = model.resolve(doc, standard_config());
  const fs::path dir = output_dir(out_flag, doc);
  const InitiatorParams params = config.params();
  const std::size_t d = params.shape.d();
  const io::EdgeListHeader header{d, params.shape, config.seed};
  const Permutation perm = synthetic_permutation(config, config.seed);

  GraphSample meta{EvenTensor(), perm, config.seed, params};
  std::size_t edges = 0;
  bool in_memory = dense;
  if (!dense) {
    try {
      require_dense(d, "graph");
      in_memory = true;
    } catch (const CapacityError&) {
      in_memory = false;
    }
  }
  if (in_memory) {
    GraphSample sample = synthesize(config, config.seed);
    edges = io::write_edge_list(dir / "graph.edges", header, sample.adjacency, flat);
    if (dense) io::write_kten(dir / "adjacency.kten", sample.adjacency);
    meta.permutation = sample.permutation;
  } else {
    io::EdgeListWriter writer(dir / "graph.edges", header, flat);
    edges = sample_adjacency_streaming(params, config.seed, perm, [&](std::size_t u, std::size_t v) { writer.add(u, v); });
    writer.close();
  }
  io::write_text(dir / "graph.json", io::sidecar_json(meta, params.shape).dump(2) + "\n");
  const double density = static_cast<double>(edges) / (static_cast<double>(d) * static_cast<double>(d));
  out << "d=" << d << " edges=" << edges << " density=" << format_double(density) << "\n";
  return ok;
}

int cmd_infer(const ModelFlags& model, const std::string& input, const std::string& sidecar_flag,
              const std::string& out_flag, bool timing, bool save_estimate, std::ostream& out) {
  const nlohmann::json doc = model.document();
  if (!model.K && !doc.contains("K")) throw UsageError("infer needs K (--K or \"K\" in the config)");
  const RunConfig config = model.resolve(doc, standard_config());
  const auto start = std::chrono::steady_clock::now();

  GraphSample sample;
  if (input.empty()) {
    sample = synthesize(config, config.seed);
  } else {
    io::EdgeList list = io::read_edge_list(input);
    if (list.header.shape.m != config.shape.m || list.header.shape.l != config.shape.l ||
        list.header.shape.K != config.shape.K)
      throw FormatError(input + " holds a graph with m=" + std::to_string(list.header.shape.m) +
                        " l=" + std::to_string(list.header.shape.l) + " K=" + std::to_string(list.header.shape.K) +
                        ", which differs from the requested model");
    sample.adjacency = std::move(list.adjacency);
    sample.seed = list.header.seed;
    sample.permutation = identity_permutation(sample.adjacency.rows());
    fs::path sidecar = sidecar_flag;
    if (sidecar.empty()) {
      sidecar = fs::path(input).replace_extension(".json");
      if (!fs::exists(sidecar)) sidecar.clear();
    }
    if (!sidecar.empty()) io::apply_sidecar(io::read_json(sidecar), sample);
  }

  const InferenceOptions options{config.solver, config.rank_cap, config.rank_rule};
  InferenceResult result = infer(sample, config.shape, options);
  if (sample.truth) result.metrics = evaluate(result, *sample.truth, sample);
  if (timing)
    result.metrics["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::json json = io::result_json(result);
  if (out_flag.empty() && !doc.contains("output_dir")) {
    out << json.dump(2) << "\n";
    return ok;
  }
  const fs::path dir = output_dir(out_flag, doc);
  if (save_estimate) {
    io::write_kten(dir / "estimate.kten", result.denoise.estimate);
    json["denoise"]["estimate"] = "estimate.kten";
  }
  io::write_text(dir / "result.json", json.dump(2) + "\n");
  return ok;
}

int cmd_fig_shrinkage(const ModelFlags& model, const SweepFlags& flags) {
  const nlohmann::json doc = model.document();
  const RunConfig config = model.resolve(doc, sweep_config());
  const auto sizes = checked_sizes(config, unsigned_list(doc, "sizes", flags.sizes, kDefaultSizes));
  const auto seeds = unsigned_list(doc, "seeds", flags.seeds, kDefaultSeeds);
  const fs::path dir = output_dir(flags.out, doc);
  const auto points = sweep<ShrinkagePoint>(sizes, seeds, flags.jobs, [&](std::size_t d, std::uint64_t seed) {
    return shrinkage_point(config, d, seed);
  });
  std::ostringstream csv;
  csv << "d,seed,empirical_error,theory_error\n";
  for (const auto& p : points)
    csv << p.d << ',' << p.seed << ',' << format_double(p.empirical_error) << ',' << format_double(p.theory_error)
        << '\n';
  io::write_text(dir / "shrinkage.csv", csv.str());
  return ok;
}

int cmd_fig_opnorm(const ModelFlags& model, const SweepFlags& flags) {
  const nlohmann::json doc = model.document();
  const RunConfig config = model.resolve(doc, sweep_config());
  const auto sizes = checked_sizes(config, unsigned_list(doc, "sizes", flags.sizes, kDefaultSizes));
  const auto seeds = unsigned_list(doc, "seeds", flags.seeds, kDefaultSeeds);
  const fs::path dir = output_dir(flags.out, doc);
  const auto points = sweep<OpnormPoint>(sizes, seeds, flags.jobs, [&](std::size_t d, std::uint64_t seed) {
    return opnorm_point(config, d, seed);
  });
  std::ostringstream csv;
  csv << "d,seed,opnorm_residual\n";
  for (const auto& p : points) csv << p.d << ',' << p.seed << ',' << format_double(p.opnorm_residual) << '\n';
  io::write_text(dir / "opnorm.csv", csv.str());
  return ok;
}

int cmd_fig_spectrum(const ModelFlags& model, std::size_t d_flag, const std::string& out_flag) {
  const nlohmann::json doc = model.document();
  const RunConfig config = model.resolve(doc, standard_config());
  const std::size_t d = d_flag != 0 ? d_flag : config.shape.d();
  const fs::path dir = output_dir(out_flag, doc);
  const SpectrumRun run = spectrum_run(config, d, config.seed);

  std::ostringstream values;
  values << "singular_value_normalized\n";
  for (double v : run.normalized) values << format_double(v) << '\n';
  std::ostringstream law;
  law << "x,pdf\n";
  for (const auto& [x, pdf] : run.law) law << format_double(x) << ',' << format_double(pdf) << '\n';
  std::ostringstream spikes;
  spikes << "ell,predicted_location\n";
  for (const auto& [ell, loc] : run.spikes) spikes << format_double(ell) << ',' << format_double(loc) << '\n';
  io::write_text(dir / "spectrum.csv", values.str());
  io::write_text(dir / "law.csv", law.str());
  io::write_text(dir / "spikes.csv", spikes.str());
  return ok;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inference for generalized random Kronecker graphs", "kroninfer"};
  app.require_subcommand(1);

  ModelFlags gen_model, infer_model, shrink_model, opnorm_model, spectrum_model;
  std::string gen_out, infer_out, infer_input, infer_sidecar, spectrum_out;
  bool flat = false, dense = false, timing = false, save_estimate = false;
  std::size_t spectrum_d = 0;
  SweepFlags shrink_flags, opnorm_flags;

  CLI::App* gen = app.add_subcommand("gen", "sample a graph to an edge list with a JSON sidecar");
  gen_model.attach(*gen);
  gen->add_option("--out", gen_out, "output directory");
  gen->add_flag("--flat", flat, "write flattened 'u v' pairs");
  gen->add_flag("--dense", dense, "also write the dense adjacency as KTEN1");

  CLI::App* inf = app.add_subcommand("infer", "estimate p and X from a graph");
  infer_model.attach(*inf);
  inf->add_option("--input", infer_input, "edge list (default: sample from the config)");
  inf->add_option("--sidecar", infer_sidecar, "JSON sidecar (default: next to the edge list)");
  inf->add_option("--out", infer_out, "output directory (default: print to stdout)");
  inf->add_flag("--timing", timing, "add wall_time_seconds to the metrics");
  inf->add_flag("--save-estimate", save_estimate, "write the denoised tensor as KTEN1");

  CLI::App* shrink = app.add_subcommand("fig-shrinkage", "shrinkage error against its limit, per size and seed");
  shrink_model.attach(*shrink);
  shrink_flags.attach(*shrink);

  CLI::App* opnorm = app.add_subcommand("fig-opnorm", "signal-plus-noise residual, per size and seed");
  opnorm_model.attach(*opnorm);
  opnorm_flags.attach(*opnorm);

  CLI::App* spectrum = app.add_subcommand("fig-spectrum", "normalized singular values and the limiting law");
  spectrum_model.attach(*spectrum);
  spectrum->add_option("--d", spectrum_d, "graph side (default: (m l)^K)");
  spectrum->add_option("--out", spectrum_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    const std::string text = e.what();
    err << "kroninfer: " << text << "\n";
    return usage;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_model, gen_out, flat, dense, out);
    if (inf->parsed()) return cmd_infer(infer_model, infer_input, infer_sidecar, infer_out, timing, save_estimate, out);
    if (shrink->parsed()) return cmd_fig_shrinkage(shrink_model, shrink_flags);
    if (opnorm->parsed()) return cmd_fig_opnorm(opnorm_model, opnorm_flags);
    if (spectrum->parsed()) return cmd_fig_spectrum(spectrum_model, spectrum_d, spectrum_out);
  } catch (const UsageError& e) {
    err << "kroninfer: " << e.what() << "\n";
    return usage;
  } catch (const IoError& e) {
    err << "kroninfer: " << e.what() << "\n";
    return io_error;
  } catch (const DivergenceError& e) {
    err << "kroninfer: " << e.what() << "\n";
    return divergence;
  } catch (const FormatError& e) {
    err << "kroninfer: " << e.what() << "\n";
    return malformed;
  } catch (const std::invalid_argument& e) {
    err << "kroninfer: " << e.what() << "\n";
    return malformed;
  } catch (const std::exception& e) {
    err << "kroninfer: " << e.what() << "\n";
    return failure;
  }
  return usage;
}

}  // namespace kroninfer::cli
