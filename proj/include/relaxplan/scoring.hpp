#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "relaxplan/llm.hpp"
#include "relaxplan/pddl.hpp"

namespace relaxplan {

enum class ScoreProvenance { baseline, llm, fallback };

struct ScoreMap {
  std::map<std::string, double> scores;  // every problem object, values in [0,1]
  ScoreProvenance provenance = ScoreProvenance::baseline;

  double at(const std::string& object) const;
};

const char* provenance_name(ScoreProvenance p);

/// Content hash over objects, init and goal; the per-problem score cache key.
std::uint64_t problem_content_hash(const Problem& problem);

/// Shared scorer contract. Scoring is deterministic for a fixed problem within
/// one run; train() never changes behaviour.
class ObjectScorer {
 public:
  virtual ~ObjectScorer() = default;
  virtual ScoreMap score_problem(const Problem& problem) = 0;
  virtual double score_object(const std::string& object, const Problem& problem) {
    return score_problem(problem).at(object);
  }
  virtual void train(const std::vector<Problem>& dataset) { (void)dataset; }
};

/// Deterministic stand-in for a learned scorer on grid problems: goal objects
/// score 1.0; everything else decays geometrically with its grid distance from
/// the robot-goal corridor, with a small floor so threshold decay can always
/// reach every object.
class BaselineScorer final : public ObjectScorer {
 public:
  ScoreMap score_problem(const Problem& problem) override;

  static constexpr double corridor_score = 0.9;
  static constexpr double distance_decay = 0.85;
  static constexpr double floor_score = 0.05;
};

ScoreMap baseline_score(const Problem& problem);

/// Zero-shot scorer backed by the LLM gateway. One gateway call per problem
/// (cached by content hash); the prompt carries at most `fact_cap` init atoms
/// in lexicographic order of their serialized form. Gateway failures yield an
/// all-0.5 map with fallback provenance.
class LlmScorer final : public ObjectScorer {
 public:
  LlmScorer(LlmClient& client, LlmConfig config) : client_(&client), config_(std::move(config)) {}

  ScoreMap score_problem(const Problem& problem) override;

  static constexpr std::size_t fact_cap = 80;

 private:
  LlmClient* client_;
  LlmConfig config_;
  std::map<std::uint64_t, ScoreMap> cache_;
};

/// Writes "object,score,provenance" CSV rows.
std::string score_dump_csv(const ScoreMap& scores);

}  // namespace relaxplan
