#include "acgen/evaluation/judges.hpp"

#include <set>

#include "acgen/corpus/gherkin.hpp"
#include "acgen/error.hpp"
#include "acgen/util/text.hpp"

namespace acgen::evaluation {

using nlohmann::json;
using providers::Message;
using providers::Role;

JudgePrompts JudgePrompts::defaults() {
  JudgePrompts p;
  p.coverage_rubric =
      "You check whether acceptance criteria cover one testing objective of a user story.\n\n"
      "User story:\n{story}\n\n"
      "Acceptance criteria:\n{acs}\n\n"
      "Testing objective:\n{objective}\n\n"
      "Decide how well the criteria, taken together, test this objective:\n"
      "- Full: some criterion tests the objective completely, including its conditions and expected result.\n"
      "- Partial: the objective is touched but a condition or the expected result is missing or vague.\n"
      "- Not: no criterion tests the objective.\n\n"
      "Explain briefly, then end with a line of the form \"Verdict: Full\", \"Verdict: Partial\" or "
      "\"Verdict: Not\".";
  p.coverage_reprompt = "End your reply with exactly one line: \"Verdict: Full\", \"Verdict: Partial\" or \"Verdict: Not\".";
  p.compare_instruction =
      "Two sets of acceptance criteria were written for the same user story.\n\n"
      "User story:\n{story}\n\n"
      "Set A:\n{a}\n\n"
      "Set B:\n{b}\n\n"
      "Which set is more relevant, correct, atomic and testable as a whole? Explain briefly, then end with "
      "a line of the form \"Preference: A\", \"Preference: B\" or \"Preference: Tie\".";
  p.compare_reprompt =
      "End your reply with exactly one line: \"Preference: A\", \"Preference: B\" or \"Preference: Tie\".";
  return p;
}

json to_json(const JudgePrompts& p) {
  return {{"coverage_rubric", p.coverage_rubric},
          {"coverage_reprompt", p.coverage_reprompt},
          {"compare_instruction", p.compare_instruction},
          {"compare_reprompt", p.compare_reprompt}};
}

JudgePrompts judge_prompts_from_json(const json& j) {
  JudgePrompts p = JudgePrompts::defaults();
  try {
    p.coverage_rubric = j.value("coverage_rubric", p.coverage_rubric);
    p.coverage_reprompt = j.value("coverage_reprompt", p.coverage_reprompt);
    p.compare_instruction = j.value("compare_instruction", p.compare_instruction);
    p.compare_reprompt = j.value("compare_reprompt", p.compare_reprompt);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("bad judge prompts: ") + e.what());
  }
  return p;
}

std::string to_string(Coverage c) {
  switch (c) {
    case Coverage::Full: return "Full";
    case Coverage::Partial: return "Partial";
    case Coverage::Not: return "Not";
  }
  return "?";
}

Coverage coverage_from_string(const std::string& s) {
  if (s == "Full") return Coverage::Full;
  if (s == "Partial") return Coverage::Partial;
  if (s == "Not") return Coverage::Not;
  throw Error(ErrorCode::SchemaError, "unknown coverage '" + s + "'");
}

std::string to_string(Preference p) {
  switch (p) {
    case Preference::Original: return "original";
    case Preference::Polished: return "polished";
    case Preference::Tie: return "tie";
  }
  return "?";
}

namespace {

/// First word after the last "<tag>:" line, lowercased.
std::optional<std::string> tagged_word(const std::string& reply, std::string_view tag) {
  std::optional<std::string> word;
  for (const auto& line : util::split_lines(reply)) {
    std::string lower = util::to_lower_ascii(line);
    auto pos = lower.find(tag);
    if (pos == std::string::npos) continue;
    auto rest = std::string_view(lower).substr(pos + tag.size());
    while (!rest.empty() && (rest.front() == '*' || rest.front() == ' ')) rest.remove_prefix(1);
    if (rest.empty() || rest.front() != ':') continue;
    rest.remove_prefix(1);
    auto tokens = util::tokenize(rest);
    word = tokens.empty() ? std::string() : tokens.front();
  }
  return word;
}

std::string numbered(const std::vector<corpus::AcceptanceCriterion>& acs) {
  std::string out;
  for (std::size_t i = 0; i < acs.size(); ++i) {
    if (i) out += "\n\n";
    out += "AC" + std::to_string(i + 1) + ":\n" + corpus::render(acs[i]);
  }
  return out.empty() ? "(none)" : out;
}

json rendered(const std::vector<corpus::AcceptanceCriterion>& acs) {
  json arr = json::array();
  for (const auto& ac : acs) arr.push_back(corpus::render(ac));
  return arr;
}

void require_three(std::span<providers::Provider* const> judges) {
  if (judges.size() != 3) {
    throw Error(ErrorCode::InvalidArgument, "exactly three judges are required, got " + std::to_string(judges.size()));
  }
  for (auto* j : judges) {
    if (!j) throw Error(ErrorCode::InvalidArgument, "null judge provider");
  }
}

/// Chat with one reprompt; returns the replies and the parsed value.
template <typename T, typename Parse>
std::pair<std::optional<T>, std::vector<std::string>> ask(providers::Provider& judge, providers::ChatRequest req,
                                                          const std::string& reprompt, Parse parse) {
  std::vector<std::string> replies;
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply = judge.chat(req).text;
    replies.push_back(reply);
    if (auto v = parse(reply)) return {v, replies};
    req.messages.push_back(Message::text(Role::Assistant, reply));
    req.messages.push_back(Message::text(Role::User, reprompt));
    req.metadata["attempt"] = attempt + 2;
  }
  return {std::nullopt, replies};
}

}  // namespace

std::optional<Coverage> parse_verdict(const std::string& reply) {
  auto w = tagged_word(reply, "verdict");
  if (!w) return std::nullopt;
  if (*w == "full") return Coverage::Full;
  if (*w == "partial") return Coverage::Partial;
  if (*w == "not" || *w == "none" || *w == "no") return Coverage::Not;
  return std::nullopt;
}

std::optional<std::string> parse_preference(const std::string& reply) {
  auto w = tagged_word(reply, "preference");
  if (!w) return std::nullopt;
  if (*w == "a" || *w == "b" || *w == "tie") return w;
  return std::nullopt;
}

std::vector<JudgeVerdict> judge_objective(const corpus::GroundTruthObjective& objective,
                                          const std::vector<corpus::AcceptanceCriterion>& acs,
                                          const corpus::UserStory& story,
                                          std::span<providers::Provider* const> judges, const JudgePrompts& prompts) {
  require_three(judges);
  std::string text = util::fill(prompts.coverage_rubric,
                                {{"story", story.query_text()}, {"acs", numbered(acs)}, {"objective", objective.text}});
  std::vector<JudgeVerdict> out;
  for (std::size_t i = 0; i < judges.size(); ++i) {
    providers::ChatRequest req;
    req.messages.push_back(Message::text(Role::User, text));
    req.sampling = providers::Sampling{kJudgeTemperature, kJudgeTopP};
    req.purpose = "judge_coverage";
    req.metadata = {{"story_id", story.id},
                    {"objective_id", objective.id},
                    {"objective", objective.text},
                    {"acs", rendered(acs)},
                    {"judge_index", i}};
    auto [verdict, replies] = ask<Coverage>(*judges[i], req, prompts.coverage_reprompt, parse_verdict);
    std::string judge_id = std::to_string(i) + ":" + judges[i]->config().name;
    if (!verdict) {
      throw Error(ErrorCode::UnparseableVerdict, "judge " + judge_id + " gave no verdict after a reprompt",
                  {{"replies", replies}, {"objective_id", objective.id}, {"judge_id", judge_id}});
    }
    out.push_back({objective.id, judge_id, *verdict, replies.back()});
  }
  return out;
}

AccuracyReport accuracy_report(const std::vector<JudgeVerdict>& verdicts,
                               const std::map<std::string, std::vector<corpus::GroundTruthObjective>>& objectives) {
  std::map<std::string, std::vector<const JudgeVerdict*>> by_objective;
  for (const auto& v : verdicts) by_objective[v.objective_id].push_back(&v);

  std::set<std::string> known;
  AccuracyReport r;
  std::size_t total = 0, hit = 0, correct = 0;
  for (const auto& [story_id, objs] : objectives) {
    if (objs.empty()) continue;
    StoryAccuracy s{story_id, objs.size(), 0, 0};
    for (const auto& o : objs) {
      known.insert(o.id);
      auto it = by_objective.find(o.id);
      std::set<std::string> judges;
      if (it != by_objective.end()) {
        for (const auto* v : it->second) judges.insert(v->judge_id);
      }
      if (it == by_objective.end() || it->second.size() != 3 || judges.size() != 3) {
        throw Error(ErrorCode::IncompleteVerdicts,
                    "objective '" + o.id + "' needs three verdicts from distinct judges",
                    {{"objective_id", o.id}, {"verdicts", it == by_objective.end() ? 0 : it->second.size()}});
      }
      bool all_full = true, all_hit = true;
      for (const auto* v : it->second) {
        all_full = all_full && v->coverage == Coverage::Full;
        all_hit = all_hit && v->coverage != Coverage::Not;
      }
      s.hit += all_hit;
      s.correct += all_full;
    }
    total += s.objectives;
    hit += s.hit;
    correct += s.correct;
    r.hit_case += static_cast<double>(s.hit) / static_cast<double>(s.objectives);
    r.cor_case += static_cast<double>(s.correct) / static_cast<double>(s.objectives);
    r.per_story.push_back(s);
  }
  for (const auto& [id, vs] : by_objective) {
    if (!known.contains(id)) throw Error(ErrorCode::InvalidArgument, "verdict for unknown objective '" + id + "'");
  }
  if (total == 0) throw Error(ErrorCode::EmptyInput, "no objectives to report on");
  double stories = static_cast<double>(r.per_story.size());
  r.hit_case /= stories;
  r.cor_case /= stories;
  r.hit_point = static_cast<double>(hit) / static_cast<double>(total);
  r.cor_point = static_cast<double>(correct) / static_cast<double>(total);
  return r;
}

CompareResult compare_polish(const corpus::UserStory& story,
                             const std::vector<corpus::AcceptanceCriterion>& original,
                             const std::vector<corpus::AcceptanceCriterion>& polished,
                             std::span<providers::Provider* const> judges, const JudgePrompts& prompts) {
  require_three(judges);
  CompareResult out;
  out.story_id = story.id;
  for (std::size_t i = 0; i < judges.size(); ++i) {
    bool original_first = i % 2 == 0;
    const auto& a = original_first ? original : polished;
    const auto& b = original_first ? polished : original;
    providers::ChatRequest req;
    req.messages.push_back(Message::text(
        Role::User, util::fill(prompts.compare_instruction,
                               {{"story", story.query_text()}, {"a", numbered(a)}, {"b", numbered(b)}})));
    req.sampling = providers::Sampling{kJudgeTemperature, kJudgeTopP};
    req.purpose = "compare";
    req.metadata = {{"story_id", story.id}, {"a", rendered(a)}, {"b", rendered(b)}, {"judge_index", i}};
    auto [pref, replies] = ask<std::string>(*judges[i], req, prompts.compare_reprompt, parse_preference);
    if (!pref) {
      throw Error(ErrorCode::UnparseablePreference, "judge " + std::to_string(i) + " gave no preference after a reprompt",
                  {{"replies", replies}, {"story_id", story.id}});
    }
    Preference p = Preference::Tie;
    if (*pref == "a") p = original_first ? Preference::Original : Preference::Polished;
    if (*pref == "b") p = original_first ? Preference::Polished : Preference::Original;
    out.votes.push_back(p);
    out.raw.push_back(replies.back());
  }
  out.unanimous_better = true;
  for (auto v : out.votes) out.unanimous_better = out.unanimous_better && v == Preference::Polished;
  return out;
}

json to_json(const JudgeVerdict& v) {
  return {{"objective_id", v.objective_id}, {"judge_id", v.judge_id}, {"coverage", to_string(v.coverage)}, {"raw", v.raw}};
}

JudgeVerdict judge_verdict_from_json(const json& j) {
  return {j.at("objective_id").get<std::string>(), j.at("judge_id").get<std::string>(),
          coverage_from_string(j.at("coverage").get<std::string>()), j.value("raw", "")};
}

json to_json(const AccuracyReport& r) {
  json stories = json::array();
  for (const auto& s : r.per_story) {
    stories.push_back({{"story_id", s.story_id},
                       {"objectives", s.objectives},
                       {"hit", s.hit},
                       {"correct", s.correct},
                       {"hit_rate", static_cast<double>(s.hit) / static_cast<double>(s.objectives)},
                       {"cor_rate", static_cast<double>(s.correct) / static_cast<double>(s.objectives)}});
  }
  return {{"hit_case", r.hit_case},
          {"cor_case", r.cor_case},
          {"hit_point", r.hit_point},
          {"cor_point", r.cor_point},
          {"per_story", std::move(stories)}};
}

json to_json(const CompareResult& r) {
  json votes = json::array();
  for (auto v : r.votes) votes.push_back(to_string(v));
  return {{"story_id", r.story_id}, {"unanimous_better", r.unanimous_better}, {"votes", std::move(votes)},
          {"position_swap", "odd judges see the polished set first"}};
}

}  // namespace acgen::evaluation
