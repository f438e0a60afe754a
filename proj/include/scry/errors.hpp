#pragma once

#include <stdexcept>
#include <string>

namespace scry {

// Violated operation precondition (re-reveal, mismatched domains, ...).
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// Instance generation gave up after the configured rejection budget.
class GenerationError : public std::runtime_error {
 public:
  explicit GenerationError(const std::string& what) : std::runtime_error(what) {}
};

// No path exists under the current (merged) world model.
class PlanningInfeasibleError : public std::runtime_error {
 public:
  explicit PlanningInfeasibleError(const std::string& what)
      : std::runtime_error(what) {}
};

// Frontier is empty while a subtask still needs resources.
class ExplorationExhaustedError : public std::runtime_error {
 public:
  explicit ExplorationExhaustedError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace scry
