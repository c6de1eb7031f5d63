#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "acgen/corpus/types.hpp"
#include "acgen/providers/provider.hpp"

namespace acgen::reward {

inline constexpr std::array<const char*, 6> kDimensions = {"relevance",  "correctness", "understandability",
                                                           "coverage",   "atomicity",   "testability"};

/// Editable prompt text. Placeholders in braces are filled per call:
/// {story}, {acs}, {ac}, {worst}, {others}.
struct RewardPrompts {
  std::string global_rubric;
  std::string global_reprompt;
  std::string verifier_question;
  std::string ur3_framing;
  std::string polish_instruction;
  std::string polish_reprompt;

  static RewardPrompts defaults();
  bool operator==(const RewardPrompts&) const = default;
};

nlohmann::json to_json(const RewardPrompts& p);
RewardPrompts reward_prompts_from_json(const nlohmann::json& j);

struct GlobalScore {
  int level = 0;                             // 1..5
  std::vector<std::string> dimension_notes;  // one per kDimensions entry, possibly empty
  std::string raw_judgment;
  bool operator==(const GlobalScore&) const = default;
};

enum class LocalScorer { Verifier, Ur3 };
std::string to_string(LocalScorer s);
LocalScorer local_scorer_from_string(const std::string& s);

struct LocalScore {
  double value = 0.0;
  LocalScorer scorer = LocalScorer::Verifier;

  bool comparable(const LocalScore& other) const { return scorer == other.scorer; }
  /// Throws MixedScorers when the scorers differ.
  bool less_than(const LocalScore& other) const;
};

struct PolishConfig {
  int threshold = 5;
  int max_rounds = 1;
  LocalScorer local_scorer = LocalScorer::Verifier;

  void validate() const;
};

struct PolishRound {
  std::vector<LocalScore> local_scores;
  std::size_t worst = 0;
  std::string reply;
  corpus::AcceptanceCriterion replacement;
  GlobalScore global_after;
};

struct PolishOutcome {
  std::vector<corpus::AcceptanceCriterion> acs;
  int rounds_executed = 0;
  std::vector<std::size_t> replaced_indices;
  GlobalScore global_before;
  GlobalScore global_after;
  std::vector<PolishRound> rounds;
  nlohmann::json transcript = nlohmann::json::array();
};

struct PolishProviders {
  providers::Provider& judge;      // global score
  providers::Provider& scorer;     // local score
  providers::Provider& generator;  // replacement criteria
};

/// The tagged answer line is the last line containing "score" followed by
/// ':' or '='; the level is the last standalone integer on it. nullopt when
/// absent or outside 1..5.
std::optional<int> parse_score(const std::string& reply);

/// One judge call (plus one reprompt on an unreadable reply). Throws
/// UnparseableScore with both replies in details.
GlobalScore global_score(const corpus::UserStory& story, const std::vector<corpus::AcceptanceCriterion>& acs,
                         providers::Provider& judge, const RewardPrompts& prompts);

/// Verifier: probability of "yes" to the alignment question. Ur3: mean
/// continuation log-probability of the criterion under the framing prompt.
LocalScore local_score(const corpus::UserStory& story, const corpus::AcceptanceCriterion& ac, LocalScorer scorer,
                       providers::Provider& provider, const RewardPrompts& prompts);

/// Index of the minimum; ties go to the lowest index.
/// Throws EmptyInput or MixedScorers.
std::size_t select_worst(std::span<const LocalScore> scores);

/// Global check, then up to `max_rounds` rounds of: score locally, replace
/// the worst criterion with a regenerated one, re-score globally. The polish
/// request continues `dialogue` (the generation conversation) when given.
PolishOutcome polish(const corpus::UserStory& story, const std::vector<corpus::AcceptanceCriterion>& acs,
                     const PolishConfig& cfg, PolishProviders providers, const RewardPrompts& prompts,
                     const std::vector<providers::Message>& dialogue = {});

nlohmann::json to_json(const GlobalScore& g);
GlobalScore global_score_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PolishOutcome& o);
PolishOutcome polish_outcome_from_json(const nlohmann::json& j);

}  // namespace acgen::reward
