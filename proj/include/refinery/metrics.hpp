#pragma once

#include <map>
#include <string>
#include <vector>

#include "refinery/error.hpp"

namespace refinery {

class MissingTask : public Error {
 public:
  using Error::Error;
};

/// Per-task episode outcomes: success is 0/1, progress lies in [0, 1].
struct TaskResult {
  std::string task;
  std::vector<int> success;
  std::vector<double> progress;
};

/// Arithmetic means in percent: (success_rate, progress_rate).
std::pair<double, double> aggregate(const TaskResult& result);

/// Held-out weighted score over the four held-out tasks, weighted by their
/// test-set sizes (BabyAI 112, SciWorld 90, PDDL 60, Jericho 20).
double held_out_score(const std::map<std::string, double>& scores);

/// Best-of-N pooling: max progress across runs, success if any run
/// succeeded.
std::pair<int, double> best_of_n(
    const std::vector<std::pair<int, double>>& runs);

}  // namespace refinery
