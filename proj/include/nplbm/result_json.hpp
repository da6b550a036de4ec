#pragma once

// FitResult as a JSON document:
//   {schema, mode, K, L, row_labels[], column_labels[], wall_ms,
//    trace[{iteration, K, L, wall_ms, log_posterior}],
//    config{alpha, beta, iterations, seed, workers, deterministic}}
// In deterministic mode all wall-clock fields are written as 0 so that two
// identical runs produce identical bytes.

#include <json.hpp>

#include "nplbm/fit_result.hpp"

namespace nplbm {

inline constexpr int kResultSchema = 1;

inline nlohmann::ordered_json to_json(const FitResult& r) {
  const bool timed = !r.config.deterministic;
  nlohmann::ordered_json j;
  j["schema"] = kResultSchema;
  j["mode"] = r.mode;
  j["K"] = r.row_clusters;
  j["L"] = r.column_clusters;
  j["row_labels"] = r.row_labels;
  j["column_labels"] = r.column_labels;
  j["wall_ms"] = timed ? r.wall_ms : 0.0;
  auto trace = nlohmann::ordered_json::array();
  for (const auto& t : r.trace) {
    trace.push_back({{"iteration", t.iteration},
                     {"K", t.row_clusters},
                     {"L", t.column_clusters},
                     {"wall_ms", timed ? t.wall_ms : 0.0},
                     {"log_posterior", t.log_posterior}});
  }
  j["trace"] = std::move(trace);
  j["config"] = {{"alpha", r.config.alpha},
                 {"beta", r.config.beta},
                 {"iterations", r.config.iterations},
                 {"seed", r.config.seed},
                 {"workers", r.config.workers},
                 {"deterministic", r.config.deterministic}};
  return j;
}

}  // namespace nplbm
