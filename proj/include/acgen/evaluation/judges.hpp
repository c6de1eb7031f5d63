#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "acgen/corpus/types.hpp"
#include "acgen/providers/provider.hpp"

namespace acgen::evaluation {

/// Editable judge prompts. Placeholders: {story}, {acs}, {objective} for
/// coverage; {story}, {a}, {b} for the pairwise comparison.
struct JudgePrompts {
  std::string coverage_rubric;
  std::string coverage_reprompt;
  std::string compare_instruction;
  std::string compare_reprompt;

  static JudgePrompts defaults();
  bool operator==(const JudgePrompts&) const = default;
};

nlohmann::json to_json(const JudgePrompts& p);
JudgePrompts judge_prompts_from_json(const nlohmann::json& j);

/// Sampling applied to every judge call regardless of provider defaults.
inline constexpr double kJudgeTemperature = 0.0;
inline constexpr double kJudgeTopP = 0.1;

enum class Coverage { Full, Partial, Not };
std::string to_string(Coverage c);
Coverage coverage_from_string(const std::string& s);

struct JudgeVerdict {
  std::string objective_id;
  std::string judge_id;
  Coverage coverage = Coverage::Not;
  std::string raw;
};

/// Last line tagged "Verdict:"; its first word picks the level.
std::optional<Coverage> parse_verdict(const std::string& reply);

/// Asks each of exactly three judges whether the criteria cover the
/// objective. Judge ids are "<index>:<provider name>". An unreadable reply
/// gets one reprompt, then UnparseableVerdict.
std::vector<JudgeVerdict> judge_objective(const corpus::GroundTruthObjective& objective,
                                          const std::vector<corpus::AcceptanceCriterion>& acs,
                                          const corpus::UserStory& story,
                                          std::span<providers::Provider* const> judges, const JudgePrompts& prompts);

struct StoryAccuracy {
  std::string story_id;
  std::size_t objectives = 0;
  std::size_t hit = 0;
  std::size_t correct = 0;
};

struct AccuracyReport {
  double hit_case = 0.0;
  double cor_case = 0.0;
  double hit_point = 0.0;
  double cor_point = 0.0;
  std::vector<StoryAccuracy> per_story;  // stories with at least one objective
};

/// An objective is hit when all three judges say Full or Partial and correct
/// when all three say Full. Point accuracy pools objectives; case accuracy is
/// the unweighted mean of per-story rates.
/// Throws IncompleteVerdicts unless every objective has exactly three
/// verdicts from distinct judges.
AccuracyReport accuracy_report(const std::vector<JudgeVerdict>& verdicts,
                               const std::map<std::string, std::vector<corpus::GroundTruthObjective>>& objectives);

enum class Preference { Original, Polished, Tie };
std::string to_string(Preference p);

struct CompareResult {
  std::string story_id;
  bool unanimous_better = false;
  std::vector<Preference> votes;
  std::vector<std::string> raw;
};

/// "Preference: A|B|Tie" on the last tagged line.
std::optional<std::string> parse_preference(const std::string& reply);

/// Judges with an even index see the original set as A, odd ones see the
/// polished set as A. Throws UnparseablePreference after one reprompt.
CompareResult compare_polish(const corpus::UserStory& story,
                             const std::vector<corpus::AcceptanceCriterion>& original,
                             const std::vector<corpus::AcceptanceCriterion>& polished,
                             std::span<providers::Provider* const> judges, const JudgePrompts& prompts);

nlohmann::json to_json(const JudgeVerdict& v);
JudgeVerdict judge_verdict_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AccuracyReport& r);
nlohmann::json to_json(const CompareResult& r);

}  // namespace acgen::evaluation
