#include "relaxplan/pipeline.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace relaxplan {

namespace {

std::set<std::string> plan_objects(const Plan& plan) {
  std::set<std::string> out;
  for (const auto& step : plan.steps)
    for (const auto& arg : step.args) out.insert(arg);
  return out;
}

const char* status_name(SearchStatus s) {
  switch (s) {
    case SearchStatus::success:
      return "success";
    case SearchStatus::timeout:
      return "timeout";
    case SearchStatus::unsolvable:
      return "unsolvable";
  }
  return "?";
}

}  // namespace

PipelineMode mode_from_name(const std::string& name) {
  if (name == "pure-search") return PipelineMode::pure_search;
  if (name == "scorer-only") return PipelineMode::scorer_only;
  if (name == "manual-rules") return PipelineMode::manual_rules;
  if (name == "llm-rules") return PipelineMode::llm_rules;
  if (name == "full") return PipelineMode::full;
  throw std::runtime_error("unknown pipeline mode '" + name + "'");
}

const char* mode_name(PipelineMode m) {
  switch (m) {
    case PipelineMode::pure_search:
      return "pure-search";
    case PipelineMode::scorer_only:
      return "scorer-only";
    case PipelineMode::manual_rules:
      return "manual-rules";
    case PipelineMode::llm_rules:
      return "llm-rules";
    case PipelineMode::full:
      return "full";
  }
  return "?";
}

const char* outcome_name(PipelineOutcome o) {
  switch (o) {
    case PipelineOutcome::success:
      return "success";
    case PipelineOutcome::timeout:
      return "timeout";
    case PipelineOutcome::unsolvable:
      return "unsolvable";
  }
  return "?";
}

const char* recovery_name(RecoveryStatus r) {
  switch (r) {
    case RecoveryStatus::disabled:
      return "disabled";
    case RecoveryStatus::not_reached:
      return "not-reached";
    case RecoveryStatus::declined:
      return "declined";
    case RecoveryStatus::failed:
      return "failed";
    case RecoveryStatus::succeeded:
      return "succeeded";
  }
  return "?";
}

std::string trace_to_jsonl(const PipelineResult& result) {
  std::ostringstream os;
  for (const auto& t : result.trace) {
    nlohmann::ordered_json line;
    line["step"] = t.step;
    line["start"] = t.start_seconds;
    line["duration"] = t.duration_seconds;
    line["outcome"] = t.outcome;
    line["included"] = t.included_objects;
    if (t.threshold >= 0) line["q"] = t.threshold;
    os << line.dump() << "\n";
  }
  return os.str();
}

struct Pipeline::RunState {
  const Problem* problem = nullptr;
  BudgetLedger ledger;
  ScoreMap scores;
  std::set<std::string> included;  // current O1
  PipelineResult result;

  RunState(double total, BudgetPolicy policy, const Clock& clock)
      : ledger(total, policy, clock) {}
};

Pipeline::Pipeline(const Domain& domain, PipelineConfig config, ObjectScorer& scorer,
                   LlmClient* llm, LlmConfig llm_config, const Clock& clock)
    : domain_(domain),
      config_(std::move(config)),
      scorer_(&scorer),
      llm_(llm),
      llm_config_(std::move(llm_config)),
      clock_(&clock) {}

SearchResult Pipeline::timed_search(const Problem& problem, Deadline deadline, RunState& rs,
                                    const std::string& step_name, std::size_t included,
                                    double threshold) {
  const double start = rs.ledger.elapsed();
  SearchResult res = search(problem, domain_, deadline, SearchMode::greedy);
  StepTrace trace;
  trace.step = step_name;
  trace.start_seconds = start;
  trace.duration_seconds = rs.ledger.elapsed() - start;
  trace.outcome = status_name(res.status);
  trace.included_objects = included;
  trace.threshold = threshold;
  rs.result.trace.push_back(std::move(trace));
  return res;
}

bool Pipeline::step1(RunState& rs) {
  const Problem& problem = *rs.problem;
  rs.ledger.mark_step1_start();
  const bool whole_budget = config_.mode == PipelineMode::scorer_only;
  double q = config_.initial_threshold;

  while (q >= config_.min_threshold) {
    const double step1_left =
        whole_budget ? rs.ledger.remaining() : rs.ledger.step1_remaining();
    if (step1_left <= 0) break;

    std::set<std::string> included;
    for (const auto& [obj, score] : rs.scores.scores)
      if (score >= q) included.insert(obj);
    Problem restricted = restrict_problem(problem, included);

    // Bounded per-attempt slice so one attempt cannot eat the whole loop.
    double slice = std::max(0.5, step1_left / 3.0);
    slice = std::min(slice, std::max(0.0, rs.ledger.remaining()));

    rs.result.thresholds_tried.push_back(q);
    rs.result.final_threshold = q;
    ++rs.result.step1_attempts;
    rs.included.clear();
    for (const auto& [obj, type] : restricted.objects) {
      (void)type;
      rs.included.insert(obj);
    }
    rs.result.o1_size = restricted.objects.size();

    SearchResult res = timed_search(restricted, rs.ledger.deadline_in(slice), rs, "step1",
                                    restricted.objects.size(), q);
    if (res.status == SearchStatus::success) {
      PlanCheck check = validate(res.plan, problem, domain_);
      if (check.valid) {
        rs.result.plan = res.plan;
        rs.result.outcome = PipelineOutcome::success;
        rs.result.step_reached = 1;
        return true;
      }
      rs.result.trace.back().outcome = "invalid-on-full";
    }
    q *= config_.threshold_decay;
  }
  return false;
}

bool Pipeline::attempt_recovery(RunState& rs) {
  if (!config_.recovery_enabled || llm_ == nullptr) {
    rs.result.recovery = RecoveryStatus::disabled;
    return false;
  }
  if (!rs.ledger.recovery_feasible()) {
    rs.result.recovery = RecoveryStatus::declined;
    StepTrace trace;
    trace.step = "recovery";
    trace.start_seconds = rs.ledger.elapsed();
    trace.outcome = "declined";
    rs.result.trace.push_back(std::move(trace));
    return false;
  }

  const Problem& problem = *rs.problem;
  std::set<std::string> excluded;
  for (const auto& [obj, type] : problem.objects) {
    (void)type;
    if (!rs.included.count(obj)) excluded.insert(obj);
  }
  if (excluded.empty()) {
    rs.result.recovery = RecoveryStatus::failed;
    return false;
  }

  const double call_start = rs.ledger.elapsed();
  std::vector<std::string> suggested =
      recovery_guidance(*llm_, llm_config_, problem.init, problem.goal, rs.included, excluded);
  {
    StepTrace trace;
    trace.step = "recovery-llm";
    trace.start_seconds = call_start;
    trace.duration_seconds = rs.ledger.elapsed() - call_start;
    trace.outcome = suggested.empty() ? "empty" : "suggested";
    trace.included_objects = suggested.size();
    rs.result.trace.push_back(std::move(trace));
  }
  if (suggested.empty()) {
    rs.result.recovery = RecoveryStatus::failed;
    return false;
  }

  // Suggested objects stay in O1 even when the replan fails.
  for (const auto& name : suggested) rs.included.insert(name);
  rs.result.o1_size = rs.included.size();

  const double replan_budget = rs.ledger.recovery_replan_budget();
  if (replan_budget < 0.05) {
    rs.result.recovery = RecoveryStatus::failed;
    return false;
  }
  Problem restricted = restrict_problem(problem, rs.included);
  SearchResult res = timed_search(restricted, rs.ledger.deadline_in(replan_budget), rs,
                                  "recovery-replan", restricted.objects.size(), -1.0);
  if (res.status == SearchStatus::success) {
    PlanCheck check = validate(res.plan, problem, domain_);
    if (check.valid) {
      rs.result.plan = res.plan;
      rs.result.outcome = PipelineOutcome::success;
      rs.result.step_reached = 1;
      rs.result.recovery = RecoveryStatus::succeeded;
      return true;
    }
  }
  rs.result.recovery = RecoveryStatus::failed;
  return false;
}

bool Pipeline::step2(RunState& rs) {
  const Problem& problem = *rs.problem;
  Problem relaxed = apply_relaxation(problem, config_.relaxation_rules);
  const double budget = rs.ledger.step2_budget();
  SearchResult res = timed_search(relaxed, rs.ledger.deadline_in(budget), rs, "step2",
                                  relaxed.objects.size(), -1.0);
  if (res.status != SearchStatus::success) {
    rs.result.failure_detail = std::string("relaxed search ") + status_name(res.status);
    return false;
  }
  for (const auto& obj : plan_objects(res.plan)) rs.included.insert(obj);
  rs.result.o2_size = rs.included.size();
  rs.result.step_reached = 2;
  return true;
}

bool Pipeline::step3(RunState& rs) {
  const Problem& problem = *rs.problem;
  std::set<std::string> closed =
      complementary_closure(rs.included, problem.init, config_.complementary_rules);
  Problem restricted = restrict_problem(problem, closed);
  rs.result.o3_size = restricted.objects.size();
  rs.result.step_reached = 3;
  SearchResult res = timed_search(restricted, rs.ledger.deadline_in(rs.ledger.step3_budget()), rs,
                                  "step3", restricted.objects.size(), -1.0);
  if (res.status == SearchStatus::success) {
    PlanCheck check = validate(res.plan, problem, domain_);
    if (check.valid) {
      rs.result.plan = res.plan;
      rs.result.outcome = PipelineOutcome::success;
      return true;
    }
    rs.result.failure_detail = "final plan invalid on full problem: " + check.message;
    return false;
  }
  rs.result.failure_detail = std::string("final search ") + status_name(res.status);
  return false;
}

PipelineResult Pipeline::run(const Problem& problem) {
  RunState rs(config_.timeout_seconds, config_.policy, *clock_);
  rs.problem = &problem;
  auto finish = [&]() {
    rs.result.total_seconds = rs.ledger.elapsed();
    return std::move(rs.result);
  };

  if (config_.mode == PipelineMode::pure_search) {
    SearchResult res = timed_search(problem, rs.ledger.deadline_in(rs.ledger.remaining()), rs,
                                    "pure-search", problem.objects.size(), -1.0);
    rs.result.step_reached = 4;
    if (res.status == SearchStatus::success && validate(res.plan, problem, domain_).valid) {
      rs.result.plan = res.plan;
      rs.result.outcome = PipelineOutcome::success;
    } else if (res.status == SearchStatus::unsolvable) {
      rs.result.outcome = PipelineOutcome::unsolvable;
    } else {
      rs.result.outcome = PipelineOutcome::timeout;
    }
    return finish();
  }

  rs.scores = scorer_->score_problem(problem);
  rs.result.recovery =
      config_.recovery_enabled ? RecoveryStatus::not_reached : RecoveryStatus::disabled;

  if (step1(rs)) return finish();
  if (config_.mode == PipelineMode::scorer_only) {
    rs.result.outcome = PipelineOutcome::timeout;
    rs.result.failure_detail = "pruning loop exhausted";
    rs.result.step_reached = 1;
    return finish();
  }

  if (attempt_recovery(rs)) return finish();
  if (!step2(rs)) {
    rs.result.outcome = PipelineOutcome::timeout;
    return finish();
  }
  if (step3(rs)) return finish();
  rs.result.outcome = PipelineOutcome::timeout;
  return finish();
}

}  // namespace relaxplan
