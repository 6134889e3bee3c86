#include "relaxplan/bench.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "relaxplan/mazenamo.hpp"

using nlohmann::json;

namespace relaxplan {

namespace {

struct LoadedProblem {
  std::string name;
  Problem problem;
  int width = 0;
};

std::vector<LoadedProblem> load_problems(const std::filesystem::path& dir, const Domain& domain) {
  if (!std::filesystem::is_directory(dir))
    throw std::runtime_error("problem directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".pddl" &&
        entry.path().filename().string().rfind("domain", 0) != 0)
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<LoadedProblem> out;
  for (const auto& file : files) {
    std::ifstream is(file);
    std::stringstream buffer;
    buffer << is.rdbuf();
    LoadedProblem lp;
    lp.name = file.stem().string();
    lp.problem = parse_problem(buffer.str(), domain);
    std::filesystem::path meta_file = file;
    meta_file.replace_extension(".meta.json");
    if (std::filesystem::exists(meta_file)) {
      std::ifstream ms(meta_file);
      json meta = json::parse(ms, nullptr, false);
      if (!meta.is_discarded()) lp.width = meta.value("width", 0);
    }
    out.push_back(std::move(lp));
  }
  if (out.empty()) throw std::runtime_error("no problem files in " + dir.string());
  return out;
}

std::string format_seconds(double s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << s;
  return os.str();
}

std::string format_threshold(double q) {
  if (q < 0) return "";
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << q;
  return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

double default_timeout_for_width(int width) {
  if (width <= 10) return 10.0;
  if (width <= 12) return 30.0;
  return 40.0;
}

BenchReport run_bench(const BenchConfig& config) {
  std::ifstream ds(config.domain_file);
  if (!ds) throw std::runtime_error("cannot open domain file: " + config.domain_file.string());
  std::stringstream dbuf;
  dbuf << ds.rdbuf();
  const Domain domain = parse_domain(dbuf.str());
  const PredicateMap known = predicate_map(domain.predicates);

  const std::vector<LoadedProblem> problems = load_problems(config.problem_dir, domain);

  // Rule files are loaded once per config, up front, so a bad file aborts the
  // sweep before any work is done.
  struct PreparedConfig {
    const BenchRunConfig* spec = nullptr;
    std::vector<RelaxationRule> relaxation;
    std::vector<ComplementaryRule> complementary;
  };
  std::vector<PreparedConfig> prepared;
  for (const auto& rc : config.configs) {
    PreparedConfig pc;
    pc.spec = &rc;
    const bool uses_rules = rc.mode == PipelineMode::manual_rules ||
                            rc.mode == PipelineMode::llm_rules || rc.mode == PipelineMode::full;
    if (uses_rules) {
      if (!rc.relaxation_rules.empty())
        pc.relaxation = load_relaxation_rules(rc.relaxation_rules, known);
      if (!rc.complementary_rules.empty())
        pc.complementary = load_complementary_rules(rc.complementary_rules, known);
    }
    prepared.push_back(std::move(pc));
  }

  struct Job {
    std::size_t config_index;
    std::size_t problem_index;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < prepared.size(); ++c)
    for (std::size_t p = 0; p < problems.size(); ++p) jobs.push_back({c, p});

  std::vector<BenchRow> rows(jobs.size());
  std::atomic<std::size_t> next_job{0};

  auto worker = [&]() {
    while (true) {
      std::size_t j = next_job.fetch_add(1);
      if (j >= jobs.size()) return;
      const Job& job = jobs[j];
      const PreparedConfig& pc = prepared[job.config_index];
      const BenchRunConfig& rc = *pc.spec;
      const LoadedProblem& lp = problems[job.problem_index];

      BenchRow row;
      row.config = rc.name;
      row.problem = lp.name;
      row.seed = config.sweep_seed * 0x9e3779b97f4a7c15ull +
                 static_cast<std::uint64_t>(job.problem_index);

      PipelineConfig pcfg;
      pcfg.mode = rc.mode;
      pcfg.timeout_seconds =
          rc.timeout_seconds > 0 ? rc.timeout_seconds : default_timeout_for_width(lp.width);
      pcfg.policy = rc.policy;
      pcfg.recovery_enabled = rc.recovery || rc.mode == PipelineMode::full;
      pcfg.relaxation_rules = pc.relaxation;
      pcfg.complementary_rules = pc.complementary;

      // Worker-local backends keep mock call counters and score caches
      // independent across jobs.
      std::unique_ptr<LlmClient> llm;
      if (!rc.mock_llm.empty())
        llm = std::make_unique<MockLlmClient>(MockLlmClient::from_file(rc.mock_llm));
      else if (rc.scorer == "llm" || pcfg.recovery_enabled)
        llm = std::make_unique<HttpLlmClient>();
      LlmConfig llm_config = LlmConfig::from_env();

      std::unique_ptr<ObjectScorer> scorer;
      if (rc.scorer == "llm" || rc.mode == PipelineMode::full) {
        if (llm == nullptr) llm = std::make_unique<HttpLlmClient>();
        scorer = std::make_unique<LlmScorer>(*llm, llm_config);
      } else {
        scorer = std::make_unique<BaselineScorer>();
      }

      try {
        Pipeline pipeline(domain, pcfg, *scorer, llm.get(), llm_config);
        PipelineResult res = pipeline.run(lp.problem);
        row.outcome = res.outcome;
        row.time_seconds = res.total_seconds;
        row.plan_length = res.plan.length();
        row.step_reached = res.step_reached;
        row.recovery = res.recovery;
        row.o1 = res.o1_size;
        row.o2 = res.o2_size;
        row.o3 = res.o3_size;
        row.final_threshold = res.final_threshold;
        row.step1_attempts = res.step1_attempts;
      } catch (const std::exception&) {
        // Per-problem failures are recorded as failures, never abort the sweep.
        row.outcome = PipelineOutcome::timeout;
        row.plan_length = 0;
      }
      rows[j] = std::move(row);
    }
  };

  const int nworkers = std::max(1, config.workers);
  std::vector<std::thread> threads;
  for (int i = 1; i < nworkers; ++i) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  BenchReport report;
  report.rows = std::move(rows);
  report.task_name = config.problem_dir.filename().string();

  for (const auto& pc : prepared) {
    BenchAggregate agg;
    agg.config = pc.spec->name;
    double time_sum = 0.0;
    double len_sum = 0.0;
    for (const auto& row : report.rows) {
      if (row.config != agg.config) continue;
      ++agg.total;
      if (row.outcome == PipelineOutcome::success) {
        ++agg.successes;
        time_sum += row.time_seconds;
        len_sum += static_cast<double>(row.plan_length);
      }
    }
    agg.success_rate = agg.total > 0 ? static_cast<double>(agg.successes) / agg.total : 0.0;
    if (agg.successes > 0) {
      agg.avg_time_seconds = time_sum / agg.successes;
      agg.avg_plan_length = len_sum / agg.successes;
    }
    report.aggregates.push_back(std::move(agg));
  }

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    std::ofstream(config.out_dir / "results.csv") << results_csv(report);
    std::ofstream(config.out_dir / "timings.csv") << timings_csv(report);
    std::ofstream(config.out_dir / "summary.txt") << summary_table(report);
  }
  return report;
}

std::string results_csv(const BenchReport& report) {
  std::ostringstream os;
  os << "config,problem,seed,outcome,plan_length,step_reached,recovery,o1,o2,o3,final_q,"
        "step1_attempts\n";
  for (const auto& r : report.rows) {
    os << r.config << "," << r.problem << "," << r.seed << "," << outcome_name(r.outcome) << ","
       << r.plan_length << "," << r.step_reached << "," << recovery_name(r.recovery) << "," << r.o1
       << "," << r.o2 << "," << r.o3 << "," << format_threshold(r.final_threshold) << ","
       << r.step1_attempts << "\n";
  }
  return os.str();
}

std::string timings_csv(const BenchReport& report) {
  std::ostringstream os;
  os << "config,problem,outcome,time_s\n";
  for (const auto& r : report.rows)
    os << r.config << "," << r.problem << "," << outcome_name(r.outcome) << ","
       << format_seconds(r.time_seconds) << "\n";
  return os.str();
}

std::string summary_table(const BenchReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(24) << "Task" << std::setw(24) << "Config" << std::setw(8) << "SR"
     << std::setw(10) << "Time" << std::setw(8) << "Len" << "\n";
  for (const auto& agg : report.aggregates) {
    os << std::left << std::setw(24) << report.task_name << std::setw(24) << agg.config
       << std::setw(8) << std::fixed << std::setprecision(3) << agg.success_rate;
    if (agg.avg_time_seconds)
      os << std::setw(10) << std::fixed << std::setprecision(3) << *agg.avg_time_seconds;
    else
      os << std::setw(10) << "---";
    if (agg.avg_plan_length)
      os << std::setw(8) << std::fixed << std::setprecision(1) << *agg.avg_plan_length;
    else
      os << std::setw(8) << "---";
    os << "\n";
  }
  return os.str();
}

std::vector<BenchAggregate> aggregates_from_csv(const std::string& results,
                                                const std::string& timings) {
  std::map<std::string, BenchAggregate> by_config;
  std::vector<std::string> order;
  std::map<std::pair<std::string, std::string>, double> time_of;
  {
    std::istringstream is(timings);
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      auto f = split_csv_line(line);
      time_of[{f[0], f[1]}] = std::stod(f[3]);
    }
  }
  std::map<std::string, double> time_sum;
  std::map<std::string, double> len_sum;
  std::istringstream is(results);
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    const std::string& cfg = f[0];
    if (!by_config.count(cfg)) order.push_back(cfg);
    BenchAggregate& agg = by_config[cfg];
    agg.config = cfg;
    ++agg.total;
    if (f[3] == "success") {
      ++agg.successes;
      len_sum[cfg] += std::stod(f[4]);
      auto it = time_of.find({cfg, f[1]});
      if (it != time_of.end()) time_sum[cfg] += it->second;
    }
  }
  std::vector<BenchAggregate> out;
  for (const auto& cfg : order) {
    BenchAggregate agg = by_config[cfg];
    agg.success_rate = agg.total > 0 ? static_cast<double>(agg.successes) / agg.total : 0.0;
    if (agg.successes > 0) {
      agg.avg_time_seconds = time_sum[cfg] / agg.successes;
      agg.avg_plan_length = len_sum[cfg] / agg.successes;
    }
    out.push_back(std::move(agg));
  }
  return out;
}

BenchConfig load_run_spec(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open run spec: " + file.string());
  json doc = json::parse(is, nullptr, false);
  if (doc.is_discarded()) throw std::runtime_error("invalid JSON in run spec: " + file.string());

  BenchConfig config;
  const auto base = file.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  config.domain_file = resolve(doc.at("domain").get<std::string>());
  config.problem_dir = resolve(doc.at("problems").get<std::string>());
  config.workers = doc.value("workers", 1);
  config.sweep_seed = doc.value("sweep_seed", 0);
  if (doc.contains("out_dir")) config.out_dir = resolve(doc["out_dir"].get<std::string>());
  for (const auto& c : doc.at("configs")) {
    BenchRunConfig rc;
    rc.name = c.at("name").get<std::string>();
    rc.mode = mode_from_name(c.value("mode", "manual-rules"));
    rc.scorer = c.value("scorer", "baseline");
    if (c.contains("relaxation_rules"))
      rc.relaxation_rules = resolve(c["relaxation_rules"].get<std::string>());
    if (c.contains("complementary_rules"))
      rc.complementary_rules = resolve(c["complementary_rules"].get<std::string>());
    rc.timeout_seconds = c.value("timeout", 0.0);
    rc.policy = policy_from_name(c.value("policy", "III"));
    rc.recovery = c.value("recovery", false);
    if (c.contains("mock_llm")) rc.mock_llm = resolve(c["mock_llm"].get<std::string>());
    config.configs.push_back(std::move(rc));
  }
  if (config.configs.empty()) throw std::runtime_error("run spec has no configs");
  return config;
}

}  // namespace relaxplan
