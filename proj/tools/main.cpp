#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "relaxplan/bench.hpp"
#include "relaxplan/llm.hpp"
#include "relaxplan/mazenamo.hpp"
#include "relaxplan/pipeline.hpp"

namespace fs = std::filesystem;
using namespace relaxplan;

namespace {

std::string slurp(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open file: " + file.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

std::unique_ptr<LlmClient> make_client(const fs::path& mock) {
  if (!mock.empty())
    return std::make_unique<MockLlmClient>(MockLlmClient::from_file(mock));
  return std::make_unique<HttpLlmClient>();
}

int cmd_gen_rules(const fs::path& domain_file, const fs::path& out_dir, const fs::path& mock,
                  int max_attempts) {
  const std::string domain_text = slurp(domain_file);
  const Domain domain = parse_domain(domain_text);
  LlmConfig config = LlmConfig::from_env();
  config.max_attempts = max_attempts;
  auto client = make_client(mock);

  RuleGenResult result = generate_rules(*client, config, domain, domain_text, out_dir,
                                        out_dir / "transcript.jsonl");
  std::cout << "relaxation: " << result.relaxation_counts.attempts << " attempt(s), "
            << result.relaxation_counts.raw_rules << " raw -> "
            << result.relaxation_counts.after_dedup << " after dedup -> "
            << result.relaxation_counts.after_filter << " after predicate filter\n";
  std::cout << "complementary: " << result.complementary_counts.attempts << " attempt(s), "
            << result.complementary_counts.raw_rules << " raw -> "
            << result.complementary_counts.after_dedup << " after dedup -> "
            << result.complementary_counts.after_filter << " after predicate filter\n";
  std::cout << "wrote " << (out_dir / "relaxation.json").string() << " and "
            << (out_dir / "complementary.json").string() << "\n";
  if (result.exhausted()) {
    std::cerr << "error: validation errors remained after " << config.max_attempts
              << " attempts; wrote best-effort rules\n";
    for (const auto& m : result.relaxation_report.messages()) std::cerr << "  relaxation: " << m << "\n";
    for (const auto& m : result.complementary_report.messages())
      std::cerr << "  complementary: " << m << "\n";
    return 1;
  }
  return 0;
}

int cmd_validate_rules(const fs::path& rule_file, const fs::path& domain_file, std::string kind) {
  const std::vector<PredicateDef> defs = parse_predicates(slurp(domain_file));
  const PredicateMap known = predicate_map(defs);
  nlohmann::json doc = nlohmann::json::parse(slurp(rule_file), nullptr, false);
  if (doc.is_discarded()) {
    std::cerr << "error: " << rule_file.string() << " is not valid JSON\n";
    return 1;
  }
  if (kind.empty()) {
    // Relaxation files use ruleN keys; complementary files use predicate keys.
    kind = "complementary";
    if (doc.is_object())
      for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (key.rfind("rule", 0) == 0) kind = "relaxation";
      }
  }
  RuleKind rk = kind == "relaxation" ? RuleKind::relaxation : RuleKind::complementary;
  ValidationReport report = validate_rules(doc, known, rk);
  if (report.is_valid()) {
    std::cout << rule_file.string() << ": valid (" << kind << ")\n";
    return 0;
  }
  std::cerr << rule_file.string() << ": invalid (" << kind << ")\n";
  for (const auto& m : report.messages()) std::cerr << "  - " << m << "\n";
  return 1;
}

int cmd_gen_problems(int size, const std::string& difficulty, int count, std::uint64_t seed,
                     const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream(out_dir / "domain.pddl") << mazenamo_domain_text();
  for (int i = 0; i < count; ++i) {
    GridSpec spec = default_spec(size, size, difficulty_from_name(difficulty), seed + i);
    Instance instance = generate(spec);
    std::ostringstream base;
    base << "p" << std::setfill('0') << std::setw(3) << i;
    std::ofstream(out_dir / (base.str() + ".pddl")) << to_pddl(instance.problem);
    std::ofstream(out_dir / (base.str() + ".meta.json")) << instance.metadata_json();
  }
  std::cout << "wrote " << count << " " << size << "x" << size << " " << difficulty
            << " problems to " << out_dir.string() << "\n";
  return 0;
}

int cmd_plan(const fs::path& domain_file, const fs::path& problem_file, const std::string& mode,
             const fs::path& relax_rules, const fs::path& comp_rules, double timeout,
             const std::string& policy, bool recovery, const std::string& scorer_name,
             const fs::path& mock, const fs::path& trace_file, const fs::path& score_dump) {
  const std::string domain_text = slurp(domain_file);
  const Domain domain = parse_domain(domain_text);
  const Problem problem = parse_problem(slurp(problem_file), domain);
  const PredicateMap known = predicate_map(domain.predicates);

  PipelineConfig config;
  config.mode = mode_from_name(mode);
  config.timeout_seconds = timeout;
  config.policy = policy_from_name(policy);
  config.recovery_enabled = recovery || config.mode == PipelineMode::full;
  if (!relax_rules.empty()) config.relaxation_rules = load_relaxation_rules(relax_rules, known);
  if (!comp_rules.empty())
    config.complementary_rules = load_complementary_rules(comp_rules, known);

  LlmConfig llm_config = LlmConfig::from_env();
  std::unique_ptr<LlmClient> client;
  const bool wants_llm = scorer_name == "llm" || config.recovery_enabled ||
                         config.mode == PipelineMode::full;
  if (wants_llm || !mock.empty()) client = make_client(mock);

  std::unique_ptr<ObjectScorer> scorer;
  if (scorer_name == "llm" || config.mode == PipelineMode::full)
    scorer = std::make_unique<LlmScorer>(*client, llm_config);
  else
    scorer = std::make_unique<BaselineScorer>();

  if (!score_dump.empty()) {
    std::ofstream(score_dump) << score_dump_csv(scorer->score_problem(problem));
  }

  Pipeline pipeline(domain, config, *scorer, client.get(), llm_config);
  PipelineResult result = pipeline.run(problem);

  if (!trace_file.empty()) std::ofstream(trace_file) << trace_to_jsonl(result);

  std::cout << "outcome: " << outcome_name(result.outcome) << "\n";
  std::cout << "time: " << std::fixed << std::setprecision(3) << result.total_seconds << " s\n";
  if (result.outcome == PipelineOutcome::success) {
    std::cout << "plan length: " << result.plan.length() << "\n";
    std::cout << to_text(result.plan);
    return 0;
  }
  if (!result.failure_detail.empty()) std::cerr << "detail: " << result.failure_detail << "\n";
  return 1;
}

int cmd_bench(const fs::path& run_spec, const fs::path& out_dir, int workers) {
  BenchConfig config = load_run_spec(run_spec);
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (workers > 0) config.workers = workers;
  BenchReport report = run_bench(config);
  std::cout << summary_table(report);
  if (!config.out_dir.empty())
    std::cout << "wrote results.csv, timings.csv and summary.txt to " << config.out_dir.string()
              << "\n";
  return 0;
}

int cmd_render(const fs::path& domain_file, const fs::path& problem_file, const fs::path& plan_file,
               const fs::path& meta_file, const fs::path& scores_file, const fs::path& out_file) {
  const Domain domain = parse_domain(slurp(domain_file));
  Instance instance;
  instance.problem = parse_problem(slurp(problem_file), domain);

  fs::path meta = meta_file;
  if (meta.empty()) {
    meta = problem_file;
    meta.replace_extension(".meta.json");
  }
  if (!fs::exists(meta))
    throw std::runtime_error("metadata file not found (needed for grid geometry): " +
                             meta.string());
  nlohmann::json m = nlohmann::json::parse(slurp(meta));
  instance.spec.width = m.at("width").get<int>();
  instance.spec.height = m.at("height").get<int>();
  instance.goal_row = m.at("goal")[0].get<int>();
  instance.goal_col = m.at("goal")[1].get<int>();
  instance.robot_row = m.at("robot")[0].get<int>();
  instance.robot_col = m.at("robot")[1].get<int>();

  std::optional<Plan> plan;
  if (!plan_file.empty()) {
    plan.emplace();
    plan->steps = parse_plan_text(slurp(plan_file));
  }
  std::optional<ScoreMap> scores;
  if (!scores_file.empty()) {
    scores.emplace();
    std::istringstream is(slurp(scores_file));
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
      auto c1 = line.find(',');
      auto c2 = line.rfind(',');
      if (c1 == std::string::npos || c2 <= c1) continue;
      scores->scores[line.substr(0, c1)] = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    }
  }

  std::string text = render(instance, plan ? &*plan : nullptr, scores ? &*scores : nullptr);
  if (out_file.empty())
    std::cout << text;
  else
    std::ofstream(out_file) << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relaxplan: rule-assisted planning over pruned PDDL problems"};
  app.require_subcommand(1);

  // gen-rules
  auto* gen_rules = app.add_subcommand("gen-rules", "Generate rule files from a domain via an LLM");
  fs::path gr_domain, gr_out = "rules", gr_mock;
  int gr_attempts = 3;
  gen_rules->add_option("--domain", gr_domain, "Domain PDDL file")->required();
  gen_rules->add_option("--out-dir", gr_out, "Output directory");
  gen_rules->add_option("--mock", gr_mock, "Scripted mock LLM fixture (JSON)");
  gen_rules->add_option("--max-attempts", gr_attempts, "Correction attempts per rule type");

  // validate-rules
  auto* validate_rules_cmd = app.add_subcommand("validate-rules", "Validate a rule file");
  fs::path vr_file, vr_domain;
  std::string vr_kind;
  validate_rules_cmd->add_option("file", vr_file, "Rule JSON file")->required();
  validate_rules_cmd->add_option("--domain", vr_domain, "Domain PDDL file")->required();
  validate_rules_cmd->add_option("--kind", vr_kind, "relaxation|complementary (default: detect)");

  // gen-problems
  auto* gen_problems = app.add_subcommand("gen-problems", "Generate benchmark problems");
  int gp_size = 10, gp_count = 10;
  std::string gp_difficulty = "easy";
  std::uint64_t gp_seed = 0;
  fs::path gp_out = "problems";
  gen_problems->add_option("--size", gp_size, "Grid side length");
  gen_problems->add_option("--difficulty", gp_difficulty, "easy|medium|hard|expert");
  gen_problems->add_option("--count", gp_count, "Number of instances");
  gen_problems->add_option("--seed", gp_seed, "Base seed (instance i uses seed+i)");
  gen_problems->add_option("--out-dir", gp_out, "Output directory");

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "Plan a single problem");
  fs::path pl_domain, pl_problem, pl_relax, pl_comp, pl_mock, pl_trace, pl_scores;
  std::string pl_mode = "manual-rules", pl_policy = "III", pl_scorer = "baseline";
  double pl_timeout = 10.0;
  bool pl_recovery = false;
  plan_cmd->add_option("--domain", pl_domain, "Domain PDDL file")->required();
  plan_cmd->add_option("--problem", pl_problem, "Problem PDDL file")->required();
  plan_cmd->add_option("--mode", pl_mode,
                       "pure-search|scorer-only|manual-rules|llm-rules|full");
  plan_cmd->add_option("--relax-rules", pl_relax, "Relaxation rule file");
  plan_cmd->add_option("--comp-rules", pl_comp, "Complementary rule file");
  plan_cmd->add_option("--timeout", pl_timeout, "Total budget in seconds");
  plan_cmd->add_option("--policy", pl_policy, "Recovery budget policy: I|II|III");
  plan_cmd->add_flag("--recovery", pl_recovery, "Enable LLM failure recovery");
  plan_cmd->add_option("--scorer", pl_scorer, "baseline|llm");
  plan_cmd->add_option("--mock", pl_mock, "Scripted mock LLM fixture (JSON)");
  plan_cmd->add_option("--trace", pl_trace, "Write per-step trace JSONL here");
  plan_cmd->add_option("--dump-scores", pl_scores, "Write object scores CSV here");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark sweep from a run-spec file");
  fs::path be_spec, be_out;
  int be_workers = 0;
  bench_cmd->add_option("--run-spec", be_spec, "Run spec JSON file")->required();
  bench_cmd->add_option("--out-dir", be_out, "Override output directory");
  bench_cmd->add_option("--workers", be_workers, "Worker threads");

  // render
  auto* render_cmd = app.add_subcommand("render", "Render a problem (and plan) as text frames");
  fs::path rd_domain, rd_problem, rd_plan, rd_meta, rd_scores, rd_out;
  render_cmd->add_option("--domain", rd_domain, "Domain PDDL file")->required();
  render_cmd->add_option("--problem", rd_problem, "Problem PDDL file")->required();
  render_cmd->add_option("--plan", rd_plan, "Plan text file, one (action args) per line");
  render_cmd->add_option("--meta", rd_meta, "Metadata JSON (default: problem with .meta.json)");
  render_cmd->add_option("--scores", rd_scores, "Score dump CSV for cell annotation");
  render_cmd->add_option("--out", rd_out, "Output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_rules->parsed()) return cmd_gen_rules(gr_domain, gr_out, gr_mock, gr_attempts);
    if (validate_rules_cmd->parsed()) return cmd_validate_rules(vr_file, vr_domain, vr_kind);
    if (gen_problems->parsed())
      return cmd_gen_problems(gp_size, gp_difficulty, gp_count, gp_seed, gp_out);
    if (plan_cmd->parsed())
      return cmd_plan(pl_domain, pl_problem, pl_mode, pl_relax, pl_comp, pl_timeout, pl_policy,
                      pl_recovery, pl_scorer, pl_mock, pl_trace, pl_scores);
    if (bench_cmd->parsed()) return cmd_bench(be_spec, be_out, be_workers);
    if (render_cmd->parsed())
      return cmd_render(rd_domain, rd_problem, rd_plan, rd_meta, rd_scores, rd_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
