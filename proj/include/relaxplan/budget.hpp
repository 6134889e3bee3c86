#pragma once

#include <string>

#include "relaxplan/clock.hpp"

namespace relaxplan {

/// Budget shapes for the failure-recovery stage. The feasibility-gated policy
/// is the production default; the other two reproduce earlier, harmful
/// designs for ablation.
enum class BudgetPolicy {
  shared_budget,          // I: replan shares the pre-deadline pool with relaxation
  capped_latency_unaware, // II: replan capped at 15% of T, call latency not reserved
  feasibility_gated,      // III: latency reserved up front, relaxation floor guaranteed
};

BudgetPolicy policy_from_name(const std::string& name);
const char* policy_name(BudgetPolicy p);

/// Per-run wall-clock accounting. The total timeout T splits into a pruning
/// sub-budget (T/6, measured from the end of scoring), an absolute relaxation
/// deadline (T/2 from run start) and a recovery replan cap (0.15 T).
class BudgetLedger {
 public:
  static constexpr double llm_latency_reserve_s = 5.0;
  static constexpr double min_replan_s = 1.0;
  static constexpr double min_step2_s = 5.0;

  BudgetLedger(double total_seconds, BudgetPolicy policy, const Clock& clock = system_clock());

  double total() const { return total_; }
  BudgetPolicy policy() const { return policy_; }
  const Clock& clock() const { return *clock_; }

  double elapsed() const { return seconds_between(start_, clock_->now()); }
  double remaining() const { return total_ - elapsed(); }

  /// Marks the start of the pruning loop, after any scorer call.
  void mark_step1_start();
  double step1_budget() const { return total_ / 6.0; }
  double step1_remaining() const;

  double step2_deadline() const { return total_ / 2.0; }
  double time_before_step2_deadline() const { return step2_deadline() - elapsed(); }

  double recovery_replan_cap() const { return 0.15 * total_; }

  /// Reserved latency + minimum replan + minimum relaxation time; the
  /// recovery call is only worth issuing when this still fits before the
  /// relaxation deadline.
  static constexpr double feasibility_threshold_s =
      llm_latency_reserve_s + min_replan_s + min_step2_s;

  /// Whether the recovery LLM call may be issued now.
  bool recovery_feasible() const;
  double recovery_replan_budget() const;
  double step2_budget() const;
  double step3_budget() const { return std::max(0.0, remaining()); }

  Deadline deadline_in(double seconds) const;

 private:
  double total_;
  BudgetPolicy policy_;
  const Clock* clock_;
  TimePoint start_;
  TimePoint step1_start_;
};

}  // namespace relaxplan
