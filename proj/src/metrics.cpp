#include "fcrl/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fcrl/errors.hpp"

namespace fcrl {

void append_metrics_csv(const std::string& path,
                        const std::vector<MetricsRecord>& records) {
  bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw LoadError("cannot write metrics file: " + path);
  if (fresh) out << "run_id,model,task,shots,noise_sigma,seed,metric,value\n";
  char buf[64];
  for (const MetricsRecord& r : records) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << r.run_id << ',' << r.model << ',' << r.task << ',' << r.shots << ','
        << r.noise_sigma << ',' << r.seed << ',' << r.metric << ',' << buf
        << '\n';
  }
}

std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open metrics file: " + path);
  std::vector<MetricsRecord> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    MetricsRecord r;
    std::getline(ss, r.run_id, ',');
    std::getline(ss, r.model, ',');
    std::getline(ss, r.task, ',');
    std::getline(ss, field, ',');
    r.shots = std::stoi(field);
    std::getline(ss, field, ',');
    r.noise_sigma = std::stod(field);
    std::getline(ss, field, ',');
    r.seed = std::stoull(field);
    std::getline(ss, r.metric, ',');
    std::getline(ss, field, ',');
    r.value = std::stod(field);
    out.push_back(std::move(r));
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw InternalError("mean_of: empty");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

nlohmann::json summarize_metrics(const std::vector<MetricsRecord>& records) {
  std::map<std::string, std::vector<double>> groups;
  for (const MetricsRecord& r : records) {
    std::string key = r.model + "/" + r.task + "/" + std::to_string(r.shots) +
                      "/" + std::to_string(r.noise_sigma) + "/" + r.metric;
    groups[key].push_back(r.value);
  }
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, values] : groups) {
    out[key] = {{"mean", mean_of(values)},
                {"std", std_of(values)},
                {"n", values.size()}};
  }
  return out;
}

}  // namespace fcrl
