#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace fcrl {

// One evaluation result row.
struct MetricsRecord {
  std::string run_id;
  std::string model;   // fcrl | cnp | oracle | ...
  std::string task;    // fsr | fspi | fsic | fscc | ...
  int shots = 0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::string metric;  // mse | accuracy | tv_distance | ...
  double value = 0.0;
};

// Appends rows; writes the header only when creating the file.
void append_metrics_csv(const std::string& path,
                        const std::vector<MetricsRecord>& records);

std::vector<MetricsRecord> read_metrics_csv(const std::string& path);

// Per (model, task, shots, noise, metric) mean/std aggregation over seeds.
nlohmann::json summarize_metrics(const std::vector<MetricsRecord>& records);

double mean_of(const std::vector<double>& v);
double std_of(const std::vector<double>& v);  // population std

}  // namespace fcrl
