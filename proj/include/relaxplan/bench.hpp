#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "relaxplan/pipeline.hpp"

namespace relaxplan {

/// One column of the sweep matrix.
struct BenchRunConfig {
  std::string name;
  PipelineMode mode = PipelineMode::manual_rules;
  std::string scorer = "baseline";  // baseline | llm
  std::filesystem::path relaxation_rules;
  std::filesystem::path complementary_rules;
  double timeout_seconds = 0.0;  // 0 = default by grid size
  BudgetPolicy policy = BudgetPolicy::feasibility_gated;
  bool recovery = false;
  std::filesystem::path mock_llm;  // scripted backend; empty = live endpoint
};

struct BenchConfig {
  std::filesystem::path domain_file;
  std::filesystem::path problem_dir;
  std::vector<BenchRunConfig> configs;
  int workers = 1;
  std::uint64_t sweep_seed = 0;
  std::filesystem::path out_dir;
};

/// 10 s / 30 s / 40 s for widths up to 10 / 12 / larger.
double default_timeout_for_width(int width);

struct BenchRow {
  std::string config;
  std::string problem;
  std::uint64_t seed = 0;
  PipelineOutcome outcome = PipelineOutcome::timeout;
  double time_seconds = 0.0;
  std::size_t plan_length = 0;
  int step_reached = 0;
  RecoveryStatus recovery = RecoveryStatus::disabled;
  std::size_t o1 = 0, o2 = 0, o3 = 0;
  double final_threshold = -1.0;
  int step1_attempts = 0;
};

struct BenchAggregate {
  std::string config;
  int total = 0;
  int successes = 0;
  double success_rate = 0.0;
  std::optional<double> avg_time_seconds;  // absent when no successes
  std::optional<double> avg_plan_length;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<BenchAggregate> aggregates;
  std::string task_name;
};

BenchReport run_bench(const BenchConfig& config);

/// Deterministic columns only; wall-clock times go to the timings CSV so two
/// sweeps with identical seeds produce byte-identical results files.
std::string results_csv(const BenchReport& report);
std::string timings_csv(const BenchReport& report);
std::string summary_table(const BenchReport& report);

/// Recomputes the aggregates from CSV text (results for SR/length, timings
/// for time); used to check that the published aggregates have no hidden
/// state.
std::vector<BenchAggregate> aggregates_from_csv(const std::string& results,
                                                const std::string& timings);

BenchConfig load_run_spec(const std::filesystem::path& file);

}  // namespace relaxplan
