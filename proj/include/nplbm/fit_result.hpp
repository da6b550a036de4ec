#pragma once

#include <string>
#include <vector>

#include "nplbm/partition.hpp"

namespace nplbm {

/// One outer iteration of a fit.
struct TraceRecord {
  int iteration = 0;
  int row_clusters = 0;
  int column_clusters = 0;
  double wall_ms = 0.0;
  double log_posterior = 0.0;
};

struct FitResult {
  std::vector<int> row_labels;
  std::vector<int> column_labels;
  int row_clusters = 0;
  int column_clusters = 0;
  std::vector<TraceRecord> trace;
  InferenceConfig config;
  std::string mode;
  double wall_ms = 0.0;
};

}  // namespace nplbm
