#pragma once

#include <string>
#include <vector>

#include "saferl/rl/ppo.hpp"

namespace saferl::rl {

/// One log row. Collection rows have inner_pass == 0 and carry real-episode
/// statistics; model-based inner-loop rows (inner_pass >= 1) carry imaginary
/// batch statistics and share the interaction count of their epoch. pr < 0
/// means "not applicable".
struct TrainLogRow {
  int epoch = 0;
  int inner_pass = 0;
  long interactions = 0;
  double reward_return = 0.0;
  double cost_return = 0.0;
  double reward_sum = 0.0;
  double cost_sum = 0.0;
  double lambda = 0.0;
  long violations = 0;
  long cumulative_violations = 0;
  double pr = -1.0;
};

struct RunResult {
  std::vector<TrainLogRow> rows;
  bool aborted = false;
  std::string abort_reason;
  long interactions = 0;
};

/// Thrown when a training loop hits a non-finite loss; the message carries
/// the diagnostic snapshot (epoch, lambda, loss values).
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace saferl::rl
