#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "saferl/rl/train_common.hpp"

namespace saferl::exp {

/// Fixed, versioned CSV schema. The pr column is empty on rows where the
/// performance ratio does not apply; every other column is always present.
inline constexpr const char* kRunLogSchema = "saferl_runlog_v1";
inline constexpr const char* kRunLogHeader =
    "epoch,inner_pass,interactions,reward_return,cost_return,reward_sum,cost_sum,lambda,"
    "violations,cumulative_violations,pr";

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string row_to_csv(const rl::TrainLogRow& r) {
  std::ostringstream os;
  os << r.epoch << ',' << r.inner_pass << ',' << r.interactions << ','
     << format_double(r.reward_return) << ',' << format_double(r.cost_return) << ','
     << format_double(r.reward_sum) << ',' << format_double(r.cost_sum) << ','
     << format_double(r.lambda) << ',' << r.violations << ',' << r.cumulative_violations << ',';
  if (r.pr >= 0.0) os << format_double(r.pr);
  return os.str();
}

/// Streaming CSV writer; rows appear on disk in emission order.
class RunLogWriter {
 public:
  explicit RunLogWriter(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("RunLogWriter: cannot open " + path);
    out_ << kRunLogHeader << '\n';
  }

  void write(const rl::TrainLogRow& r) {
    out_ << row_to_csv(r) << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

inline std::vector<rl::TrainLogRow> read_runlog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_runlog: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_runlog: empty file " + path);
  if (line != kRunLogHeader) throw std::runtime_error("read_runlog: unexpected header in " + path);
  std::vector<rl::TrainLogRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    if (cells.size() != 11) throw std::runtime_error("read_runlog: malformed row in " + path);
    rl::TrainLogRow r;
    r.epoch = std::stoi(cells[0]);
    r.inner_pass = std::stoi(cells[1]);
    r.interactions = std::stol(cells[2]);
    r.reward_return = std::stod(cells[3]);
    r.cost_return = std::stod(cells[4]);
    r.reward_sum = std::stod(cells[5]);
    r.cost_sum = std::stod(cells[6]);
    r.lambda = std::stod(cells[7]);
    r.violations = std::stol(cells[8]);
    r.cumulative_violations = std::stol(cells[9]);
    r.pr = cells[10].empty() ? -1.0 : std::stod(cells[10]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace saferl::exp
