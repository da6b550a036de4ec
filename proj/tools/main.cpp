// nplbm: generate / fit / evaluate / bench for the non-parametric latent
// block model samplers.
//
// Exit codes: 0 success, 2 usage error, 1 runtime error.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nplbm/nplbm.hpp"
#include "nplbm/result_json.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "1.0.0";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// FNV-1a 64 of a file's bytes, as 16 hex digits.
std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
    h ^= static_cast<unsigned char>(*it);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  nplbm::detail::write_atomically(path, [&text](std::ostream& out) { out << text; });
}

int distinct(const std::vector<int>& labels) {
  return static_cast<int>(std::set<int>(labels.begin(), labels.end()).size());
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::size_t n = 0, p = 0, d = 1, k = 0, l = 0;
  std::uint64_t seed = 0;
  std::string out = ".";
};

void cmd_generate(const GenerateArgs& a) {
  const auto spec = nplbm::SyntheticSpec::separated_grid(a.n, a.p, a.d, a.k, a.l, a.seed);
  const auto data = nplbm::generate(spec);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  nplbm::write_csv(data.matrix, dir / "data.csv");
  nplbm::write_labels(data.row_labels, dir / "z.csv");
  nplbm::write_labels(data.column_labels, dir / "w.csv");

  ordered_json manifest;
  manifest["command"] = "generate";
  manifest["config"] = {{"n", a.n}, {"p", a.p}, {"d", a.d}, {"k", a.k}, {"l", a.l}, {"seed", a.seed}};
  manifest["dataset_digest"] = file_digest(dir / "data.csv");
  manifest["outputs"] = {(dir / "data.csv").string(), (dir / "z.csv").string(),
                         (dir / "w.csv").string()};
  manifest["version"] = kVersion;
  std::cout << manifest.dump(2) << '\n';
}

// --------------------------------------------------------------------- fit

struct FitArgs {
  std::string data;
  std::size_t d = 1;
  std::string mode = "distributed";
  int workers = 1;
  double alpha = 1.0;
  double beta = 1.0;
  int iterations = 100;
  std::uint64_t seed = 0;
  bool deterministic = false;
  std::string out = "result.json";
  std::string row_labels_out;
  std::string column_labels_out;
  std::string reordered_out;
};

void cmd_fit(const FitArgs& a) {
  const auto matrix = nplbm::read_csv(fs::path(a.data), a.d);
  if (matrix.rows() == 0 || matrix.cols() == 0) throw std::runtime_error("dataset is empty");
  if (static_cast<std::size_t>(a.workers) > matrix.rows())
    throw std::runtime_error("--workers (" + std::to_string(a.workers) + ") exceeds the row count (" +
                             std::to_string(matrix.rows()) + ")");

  nplbm::InferenceConfig config;
  config.alpha = a.alpha;
  config.beta = a.beta;
  config.iterations = a.iterations;
  config.seed = a.seed;
  config.workers = a.mode == "centralized" ? 1 : a.workers;
  config.deterministic = a.deterministic;
  const auto prior = nplbm::empirical_prior(matrix);

  const auto result = a.mode == "centralized" ? nplbm::fit_centralized(matrix, config, prior)
                                              : nplbm::fit_distributed(matrix, config, prior);
  write_text(fs::path(a.out), nplbm::to_json(result).dump(2) + "\n");
  std::vector<std::string> outputs{a.out};
  if (!a.row_labels_out.empty()) {
    nplbm::write_labels(result.row_labels, fs::path(a.row_labels_out));
    outputs.push_back(a.row_labels_out);
  }
  if (!a.column_labels_out.empty()) {
    nplbm::write_labels(result.column_labels, fs::path(a.column_labels_out));
    outputs.push_back(a.column_labels_out);
  }
  if (!a.reordered_out.empty()) {
    nplbm::write_csv(nplbm::reorder(matrix, result.row_labels, result.column_labels),
                     fs::path(a.reordered_out));
    outputs.push_back(a.reordered_out);
  }

  ordered_json manifest;
  manifest["command"] = "fit";
  manifest["config"] = {{"mode", a.mode},           {"workers", config.workers},
                        {"alpha", a.alpha},         {"beta", a.beta},
                        {"iterations", a.iterations}, {"seed", a.seed},
                        {"deterministic", a.deterministic}, {"d", a.d}};
  manifest["dataset_digest"] = file_digest(fs::path(a.data));
  manifest["outputs"] = outputs;
  manifest["K"] = result.row_clusters;
  manifest["L"] = result.column_clusters;
  manifest["version"] = kVersion;
  std::cout << manifest.dump(2) << '\n';
  std::cerr << "fit finished in " << result.wall_ms << " ms\n";
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string pred;
  std::string truth;
  std::string out;
};

void cmd_evaluate(const EvaluateArgs& a) {
  const auto pred = nplbm::read_labels(fs::path(a.pred));
  const auto truth = nplbm::read_labels(fs::path(a.truth));
  if (pred.size() != truth.size())
    throw std::runtime_error("label files differ in length (" + std::to_string(pred.size()) +
                             " vs " + std::to_string(truth.size()) + ")");
  ordered_json metrics;
  metrics["ari"] = nplbm::ari(pred, truth);
  metrics["nmi"] = nplbm::nmi(pred, truth);
  metrics["K_pred"] = distinct(pred);
  metrics["K_truth"] = distinct(truth);
  const auto text = metrics.dump(2);
  if (!a.out.empty()) write_text(fs::path(a.out), text + "\n");
  std::cout << text << '\n';
}

// ------------------------------------------------------------------- bench

struct BenchArgs {
  std::vector<std::size_t> sizes;
  std::vector<int> workers;
  int repeats = 1;
  std::size_t p = 90, d = 1, k = 10, l = 3;
  int iterations = 100;
  std::uint64_t seed = 0;
  std::string out = "bench.csv";
};

void cmd_bench(const BenchArgs& a) {
  std::ostringstream table;
  table << "n,mode,workers,seed,ari,nmi,K,L,wall_ms\n";
  const auto emit = [&table](std::size_t n, const char* mode, int workers, std::uint64_t seed,
                             const nplbm::FitResult& r, const std::vector<int>& truth) {
    table << n << ',' << mode << ',' << workers << ',' << seed << ','
          << nplbm::detail::format_double(nplbm::ari(r.row_labels, truth)) << ','
          << nplbm::detail::format_double(nplbm::nmi(r.row_labels, truth)) << ','
          << r.row_clusters << ',' << r.column_clusters << ',' << r.wall_ms << '\n';
    std::cerr << n << ' ' << mode << " workers=" << workers << " seed=" << seed
              << " K=" << r.row_clusters << " L=" << r.column_clusters << " ms=" << r.wall_ms << '\n';
  };
  for (std::size_t n : a.sizes) {
    for (int rep = 0; rep < a.repeats; ++rep) {
      const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(rep);
      const auto data =
          nplbm::generate(nplbm::SyntheticSpec::separated_grid(n, a.p, a.d, a.k, a.l, seed));
      const auto prior = nplbm::empirical_prior(data.matrix);
      nplbm::InferenceConfig config;
      config.iterations = a.iterations;
      config.seed = seed;
      config.workers = 1;
      emit(n, "centralized", 1, seed, nplbm::fit_centralized(data.matrix, config, prior),
           data.row_labels);
      for (int w : a.workers) {
        config.workers = w;
        emit(n, "distributed", w, seed, nplbm::fit_distributed(data.matrix, config, prior),
             data.row_labels);
      }
    }
  }
  write_text(fs::path(a.out), table.str());
  std::cout << table.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian non-parametric co-clustering: centralized and distributed samplers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic separated-block dataset");
  generate->add_option("--n", gen.n, "rows")->required()->check(CLI::PositiveNumber);
  generate->add_option("--p", gen.p, "columns")->required()->check(CLI::PositiveNumber);
  generate->add_option("--d", gen.d, "cell dimension")->check(CLI::PositiveNumber);
  generate->add_option("--k", gen.k, "row clusters")->required()->check(CLI::PositiveNumber);
  generate->add_option("--l", gen.l, "column clusters")->required()->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen.seed, "random seed");
  generate->add_option("--out", gen.out, "output directory (data.csv, z.csv, w.csv)");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a co-clustering and write a result JSON");
  fit_cmd->add_option("--data", fit.data, "data CSV")->required();
  fit_cmd->add_option("--d", fit.d, "cell dimension")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--mode", fit.mode, "centralized | distributed")
      ->check(CLI::IsMember({"centralized", "distributed"}));
  fit_cmd->add_option("--workers", fit.workers, "worker count")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--alpha", fit.alpha, "row concentration")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--beta", fit.beta, "column concentration")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--iterations", fit.iterations, "outer iterations")->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--seed", fit.seed, "random seed");
  fit_cmd->add_flag("--deterministic", fit.deterministic,
                    "join summaries in worker order and zero timings in the result");
  fit_cmd->add_option("--out", fit.out, "result JSON path");
  fit_cmd->add_option("--row-labels-out", fit.row_labels_out, "row labels CSV");
  fit_cmd->add_option("--column-labels-out", fit.column_labels_out, "column labels CSV");
  fit_cmd->add_option("--reordered-out", fit.reordered_out, "data reordered by blocks, CSV");

  EvaluateArgs eval;
  auto* evaluate = app.add_subcommand("evaluate", "ARI / NMI of predicted against true labels");
  evaluate->add_option("--pred", eval.pred, "predicted labels CSV")->required();
  evaluate->add_option("--truth", eval.truth, "true labels CSV")->required();
  evaluate->add_option("--out", eval.out, "metrics JSON path");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Centralized vs distributed on synthetic data");
  bench_cmd->add_option("--sizes", bench.sizes, "row counts")->required()->delimiter(',')
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--workers", bench.workers, "worker counts")->required()->delimiter(',')
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--repeats", bench.repeats, "seeds per configuration")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--p", bench.p, "columns")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--d", bench.d, "cell dimension")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--k", bench.k, "row clusters")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--l", bench.l, "column clusters")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--iterations", bench.iterations, "outer iterations")->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--seed", bench.seed, "first seed");
  bench_cmd->add_option("--out", bench.out, "CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*generate) cmd_generate(gen);
    if (*fit_cmd) cmd_fit(fit);
    if (*evaluate) cmd_evaluate(eval);
    if (*bench_cmd) cmd_bench(bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
