#include "refinery/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace refinery {

std::pair<double, double> aggregate(const TaskResult& result) {
  if (result.success.empty() || result.success.size() != result.progress.size()) {
    throw Error("task \"" + result.task +
                "\": success/progress must be equal-length and non-empty");
  }
  const double n = static_cast<double>(result.success.size());
  const double success =
      std::accumulate(result.success.begin(), result.success.end(), 0.0);
  const double progress =
      std::accumulate(result.progress.begin(), result.progress.end(), 0.0);
  return {100.0 * success / n, 100.0 * progress / n};
}

double held_out_score(const std::map<std::string, double>& scores) {
  static const std::vector<std::pair<std::string, double>> kWeights = {
      {"BabyAI", 112.0}, {"SciWorld", 90.0}, {"PDDL", 60.0}, {"Jericho", 20.0}};
  double total = 0.0;
  double weight_sum = 0.0;
  for (const auto& [task, weight] : kWeights) {
    auto it = scores.find(task);
    if (it == scores.end()) throw MissingTask("missing score for " + task);
    total += it->second * weight;
    weight_sum += weight;
  }
  return total / weight_sum;
}

std::pair<int, double> best_of_n(const std::vector<std::pair<int, double>>& runs) {
  if (runs.empty()) throw Error("best_of_n requires at least one run");
  int success = 0;
  double progress = 0.0;
  for (const auto& [s, p] : runs) {
    if (s) success = 1;
    progress = std::max(progress, p);
  }
  return {success, progress};
}

}  // namespace refinery
