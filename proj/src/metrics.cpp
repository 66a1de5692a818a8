#include "cob/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cob/error.hpp"

namespace cob {

const char* const kMetricsCsvHeader =
    "iteration,epoch,l_ce,l_b_m,l_b_a,l_b_ma,l_total,lambda,constraint,train_acc";

namespace {
void append_g17(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}
}  // namespace

void write_metrics_csv(const std::string& path, const std::vector<LossBreakdown>& records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("metrics: cannot open for write: " + path);
  os << kMetricsCsvHeader << "\n";
  for (const LossBreakdown& r : records) {
    std::string line = std::to_string(r.iteration) + "," + std::to_string(r.epoch);
    for (double v : {r.l_ce, r.l_b_m, r.l_b_a, r.l_b_ma, r.l_total, r.lambda, r.constraint,
                     r.train_acc}) {
      line += ",";
      append_g17(line, v);
    }
    os << line << "\n";
  }
  if (!os) throw IoError("metrics: write failed: " + path);
}

std::vector<LossBreakdown> read_metrics_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("metrics: cannot open: " + path);
  std::string line;
  if (!std::getline(is, line) || line != kMetricsCsvHeader) {
    throw IoError("metrics: unexpected header in " + path);
  }
  std::vector<LossBreakdown> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    auto next = [&]() -> std::string {
      if (!std::getline(ss, field, ',')) throw IoError("metrics: short row in " + path);
      return field;
    };
    LossBreakdown r;
    r.iteration = std::stol(next());
    r.epoch = std::stoi(next());
    r.l_ce = std::stod(next());
    r.l_b_m = std::stod(next());
    r.l_b_a = std::stod(next());
    r.l_b_ma = std::stod(next());
    r.l_total = std::stod(next());
    r.lambda = std::stod(next());
    r.constraint = std::stod(next());
    r.train_acc = std::stod(next());
    out.push_back(r);
  }
  return out;
}

}  // namespace cob
