#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "relaxplan/budget.hpp"
#include "relaxplan/llm.hpp"
#include "relaxplan/planner.hpp"
#include "relaxplan/rules.hpp"
#include "relaxplan/scoring.hpp"

namespace relaxplan {

enum class PipelineMode {
  pure_search,   // one full-problem search with the whole budget
  scorer_only,   // threshold-decay pruning with the whole budget, no fallback
  manual_rules,  // three-step loop with hand-written rule files
  llm_rules,     // three-step loop with generated rule files
  full,          // llm rules + recovery + llm scorer
};

PipelineMode mode_from_name(const std::string& name);
const char* mode_name(PipelineMode m);

struct PipelineConfig {
  double timeout_seconds = 10.0;
  double initial_threshold = 0.81;
  double threshold_decay = 0.9;
  double min_threshold = 0.01;
  PipelineMode mode = PipelineMode::manual_rules;
  std::vector<RelaxationRule> relaxation_rules;
  std::vector<ComplementaryRule> complementary_rules;
  bool recovery_enabled = false;
  BudgetPolicy policy = BudgetPolicy::feasibility_gated;
};

enum class PipelineOutcome { success, timeout, unsolvable };
const char* outcome_name(PipelineOutcome o);

enum class RecoveryStatus { disabled, not_reached, declined, failed, succeeded };
const char* recovery_name(RecoveryStatus r);

struct StepTrace {
  std::string step;
  double start_seconds = 0.0;
  double duration_seconds = 0.0;
  std::string outcome;
  std::size_t included_objects = 0;
  double threshold = -1.0;  // step-1 attempts only
};

struct PipelineResult {
  PipelineOutcome outcome = PipelineOutcome::timeout;
  Plan plan;
  int step_reached = 0;  // 0 = none, 1..3, 4 = pure search
  RecoveryStatus recovery = RecoveryStatus::disabled;
  std::size_t o1_size = 0, o2_size = 0, o3_size = 0;
  std::vector<double> thresholds_tried;
  double final_threshold = -1.0;
  int step1_attempts = 0;
  std::vector<StepTrace> trace;
  double total_seconds = 0.0;
  std::string failure_detail;
};

/// One trace record per line, consumed by the benchmark harness and renderer.
std::string trace_to_jsonl(const PipelineResult& result);

/// The three-step planning loop: threshold-decay pruning, feasibility-gated
/// recovery, relaxation fallback and complementary expansion. Every success
/// carries a plan validated on the full problem.
class Pipeline {
 public:
  Pipeline(const Domain& domain, PipelineConfig config, ObjectScorer& scorer,
           LlmClient* llm = nullptr, LlmConfig llm_config = {},
           const Clock& clock = system_clock());

  PipelineResult run(const Problem& problem);

 private:
  struct RunState;

  SearchResult timed_search(const Problem& problem, Deadline deadline, RunState& rs,
                            const std::string& step_name, std::size_t included, double threshold);
  bool step1(RunState& rs);
  bool attempt_recovery(RunState& rs);
  bool step2(RunState& rs);
  bool step3(RunState& rs);

  const Domain& domain_;
  PipelineConfig config_;
  ObjectScorer* scorer_;
  LlmClient* llm_;
  LlmConfig llm_config_;
  const Clock* clock_;
};

}  // namespace relaxplan
