#include "relaxplan/budget.hpp"

#include <algorithm>
#include <stdexcept>

namespace relaxplan {

BudgetPolicy policy_from_name(const std::string& name) {
  if (name == "I" || name == "i" || name == "shared") return BudgetPolicy::shared_budget;
  if (name == "II" || name == "ii" || name == "capped")
    return BudgetPolicy::capped_latency_unaware;
  if (name == "III" || name == "iii" || name == "gated") return BudgetPolicy::feasibility_gated;
  throw std::runtime_error("unknown budget policy '" + name + "' (expected I, II or III)");
}

const char* policy_name(BudgetPolicy p) {
  switch (p) {
    case BudgetPolicy::shared_budget:
      return "I";
    case BudgetPolicy::capped_latency_unaware:
      return "II";
    case BudgetPolicy::feasibility_gated:
      return "III";
  }
  return "?";
}

BudgetLedger::BudgetLedger(double total_seconds, BudgetPolicy policy, const Clock& clock)
    : total_(total_seconds), policy_(policy), clock_(&clock) {
  start_ = clock_->now();
  step1_start_ = start_;
}

void BudgetLedger::mark_step1_start() { step1_start_ = clock_->now(); }

double BudgetLedger::step1_remaining() const {
  double used = seconds_between(step1_start_, clock_->now());
  return std::min(step1_budget() - used, remaining());
}

bool BudgetLedger::recovery_feasible() const {
  switch (policy_) {
    case BudgetPolicy::feasibility_gated:
      return time_before_step2_deadline() >= feasibility_threshold_s;
    case BudgetPolicy::shared_budget:
    case BudgetPolicy::capped_latency_unaware:
      return remaining() > 0;  // no pre-check; these policies always try
  }
  return false;
}

double BudgetLedger::recovery_replan_budget() const {
  switch (policy_) {
    case BudgetPolicy::feasibility_gated:
      return std::max(0.0, std::min(recovery_replan_cap(),
                                    time_before_step2_deadline() - min_step2_s));
    case BudgetPolicy::capped_latency_unaware:
      return recovery_replan_cap();
    case BudgetPolicy::shared_budget:
      return std::max(0.0, time_before_step2_deadline());
  }
  return 0.0;
}

double BudgetLedger::step2_budget() const {
  switch (policy_) {
    case BudgetPolicy::feasibility_gated: {
      double budget = std::max(time_before_step2_deadline(), min_step2_s);
      // The floor never pushes the run past the total timeout.
      return std::max(0.0, std::min(budget, remaining()));
    }
    case BudgetPolicy::capped_latency_unaware:
    case BudgetPolicy::shared_budget:
      return std::max(0.0, time_before_step2_deadline());
  }
  return 0.0;
}

Deadline BudgetLedger::deadline_in(double seconds) const {
  return Deadline::after(std::max(0.0, std::min(seconds, remaining())), *clock_);
}

}  // namespace relaxplan
