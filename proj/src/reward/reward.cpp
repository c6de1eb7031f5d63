#include "acgen/reward/reward.hpp"

#include <cctype>
#include <regex>

#include "acgen/corpus/dataset.hpp"
#include "acgen/corpus/gherkin.hpp"
#include "acgen/error.hpp"
#include "acgen/util/text.hpp"

namespace acgen::reward {

using nlohmann::json;
using providers::Message;
using providers::Role;

RewardPrompts RewardPrompts::defaults() {
  RewardPrompts p;
  p.global_rubric =
      "You review acceptance criteria written for a user story.\n\n"
      "User story:\n{story}\n\n"
      "Acceptance criteria:\n{acs}\n\n"
      "Rate the criteria as a whole on these dimensions:\n"
      "- relevance: every criterion concerns the story and nothing else\n"
      "- correctness: the criteria state the expected behaviour without contradictions\n"
      "- understandability: each criterion is short, unambiguous and uses the story's vocabulary\n"
      "- coverage: main flow, alternative flows and error cases are all addressed\n"
      "- atomicity: each criterion checks exactly one outcome\n"
      "- testability: each outcome can be verified by a concrete test\n\n"
      "Write one line per dimension as \"<dimension>: <short note>\". Then give an overall level where "
      "1 = unusable, 2 = poor, 3 = acceptable with gaps, 4 = good with minor issues and 5 = complete and "
      "ready to use. End with a line of the form \"Score: <1-5>\".";
  p.global_reprompt = "Reply again and end with exactly one line of the form \"Score: <1-5>\".";
  p.verifier_question =
      "User story:\n{story}\n\nAcceptance criterion:\n{ac}\n\n"
      "Does this criterion follow from the user story, and can it be verified by a test? Answer yes or no.\n"
      "Answer:";
  p.ur3_framing =
      "The following acceptance criterion is correct, atomic and testable for the user story.\n\n"
      "User story:\n{story}\n\nAcceptance criterion:\n";
  p.polish_instruction =
      "The criterion below is the weakest of the set for this user story.\n\n"
      "User story:\n{story}\n\n"
      "Weakest criterion:\n{worst}\n\n"
      "Other criteria, which stay as they are:\n{others}\n\n"
      "Rewrite the weakest criterion so that it is relevant, correct, atomic and testable and does not "
      "repeat the other criteria. Reply with exactly one criterion as GIVEN, WHEN and THEN lines.";
  p.polish_reprompt = "Reply with exactly one criterion made of GIVEN, WHEN and THEN lines and nothing else.";
  return p;
}

json to_json(const RewardPrompts& p) {
  return {{"global_rubric", p.global_rubric},           {"global_reprompt", p.global_reprompt},
          {"verifier_question", p.verifier_question},   {"ur3_framing", p.ur3_framing},
          {"polish_instruction", p.polish_instruction}, {"polish_reprompt", p.polish_reprompt}};
}

RewardPrompts reward_prompts_from_json(const json& j) {
  RewardPrompts p = RewardPrompts::defaults();
  try {
    p.global_rubric = j.value("global_rubric", p.global_rubric);
    p.global_reprompt = j.value("global_reprompt", p.global_reprompt);
    p.verifier_question = j.value("verifier_question", p.verifier_question);
    p.ur3_framing = j.value("ur3_framing", p.ur3_framing);
    p.polish_instruction = j.value("polish_instruction", p.polish_instruction);
    p.polish_reprompt = j.value("polish_reprompt", p.polish_reprompt);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("bad reward prompts: ") + e.what());
  }
  return p;
}

std::string to_string(LocalScorer s) { return s == LocalScorer::Verifier ? "Verifier" : "Ur3"; }

LocalScorer local_scorer_from_string(const std::string& s) {
  if (s == "Verifier") return LocalScorer::Verifier;
  if (s == "Ur3") return LocalScorer::Ur3;
  throw Error(ErrorCode::ConfigError, "unknown local scorer '" + s + "'");
}

bool LocalScore::less_than(const LocalScore& other) const {
  if (!comparable(other)) {
    throw Error(ErrorCode::MixedScorers,
                "cannot compare a " + to_string(scorer) + " score with a " + to_string(other.scorer) + " score");
  }
  return value < other.value;
}

void PolishConfig::validate() const {
  if (threshold < 1 || threshold > 5) throw Error(ErrorCode::ConfigError, "polish threshold must be in 1..5");
  if (max_rounds < 1) throw Error(ErrorCode::ConfigError, "polish max_rounds must be at least 1");
}

namespace {

std::string numbered(const std::vector<corpus::AcceptanceCriterion>& acs, std::size_t skip = SIZE_MAX) {
  std::string out;
  std::size_t n = 0;
  for (std::size_t i = 0; i < acs.size(); ++i) {
    if (i == skip) continue;
    if (!out.empty()) out += "\n\n";
    out += "AC" + std::to_string(++n) + ":\n" + corpus::render(acs[i]);
  }
  return out.empty() ? "(none)" : out;
}

json rendered(const std::vector<corpus::AcceptanceCriterion>& acs) {
  json arr = json::array();
  for (const auto& ac : acs) arr.push_back(corpus::render(ac));
  return arr;
}

std::string dimension_note(const std::string& reply, std::string_view dimension) {
  std::string note;
  for (const auto& line : util::split_lines(reply)) {
    std::string_view t = util::trim(line);
    while (!t.empty() && (t.front() == '-' || t.front() == '*' || t.front() == '#' || t.front() == ' ')) t.remove_prefix(1);
    std::string lower = util::to_lower_ascii(t);
    if (!lower.starts_with(dimension)) continue;
    std::string_view rest = std::string_view(t).substr(dimension.size());
    while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
    rest = util::trim(rest);
    if (rest.empty() || rest.front() != ':') continue;
    note = std::string(util::trim(rest.substr(1)));
  }
  return note;
}

}  // namespace

std::optional<int> parse_score(const std::string& reply) {
  static const std::regex tag(R"(score\s*[:=])", std::regex::icase);
  static const std::regex out_of(R"((/\s*5\b)|(\bout\s+of\s+5\b))", std::regex::icase);
  static const std::regex integer(R"((^|[^0-9A-Za-z.])(-?\d+)(?![0-9A-Za-z]|\.\d))");
  std::optional<std::string> answer;
  for (const auto& line : util::split_lines(reply)) {
    std::smatch m;
    if (std::regex_search(line, m, tag)) answer = line.substr(static_cast<std::size_t>(m.position(0) + m.length(0)));
  }
  if (!answer) return std::nullopt;
  std::string text = std::regex_replace(*answer, out_of, " ");
  std::optional<long> last;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), integer); it != std::sregex_iterator(); ++it) {
    last = std::stol((*it)[2].str());
  }
  if (!last || *last < 1 || *last > 5) return std::nullopt;
  return static_cast<int>(*last);
}

GlobalScore global_score(const corpus::UserStory& story, const std::vector<corpus::AcceptanceCriterion>& acs,
                         providers::Provider& judge, const RewardPrompts& prompts) {
  if (acs.empty()) throw Error(ErrorCode::EmptyInput, "global scoring needs at least one criterion");
  providers::ChatRequest req;
  req.messages.push_back(Message::text(
      Role::User, util::fill(prompts.global_rubric, {{"story", story.query_text()}, {"acs", numbered(acs)}})));
  req.purpose = "global_score";
  req.metadata = {{"story_id", story.id}, {"acs", rendered(acs)}};
  std::vector<std::string> replies;
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply = judge.chat(req).text;
    replies.push_back(reply);
    if (auto level = parse_score(reply)) {
      GlobalScore g;
      g.level = *level;
      g.raw_judgment = reply;
      for (const char* d : kDimensions) g.dimension_notes.push_back(dimension_note(reply, d));
      return g;
    }
    req.messages.push_back(Message::text(Role::Assistant, reply));
    req.messages.push_back(Message::text(Role::User, prompts.global_reprompt));
    req.metadata["attempt"] = attempt + 2;
  }
  throw Error(ErrorCode::UnparseableScore, "judge gave no score in 1..5 after a reprompt",
              {{"replies", replies}, {"story_id", story.id}});
}

LocalScore local_score(const corpus::UserStory& story, const corpus::AcceptanceCriterion& ac, LocalScorer scorer,
                       providers::Provider& provider, const RewardPrompts& prompts) {
  if (!ac.is_atomic()) throw Error(ErrorCode::InvalidArgument, "local scoring needs an atomic criterion");
  std::string text = corpus::render(ac);
  if (scorer == LocalScorer::Verifier) {
    std::string prompt = util::fill(prompts.verifier_question, {{"story", story.query_text()}, {"ac", text}});
    return {providers::yes_probability(provider, prompt), scorer};
  }
  std::string context = util::fill(prompts.ur3_framing, {{"story", story.query_text()}});
  return {providers::sequence_logprob(provider, context, text).per_token_mean, scorer};
}

std::size_t select_worst(std::span<const LocalScore> scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "no local scores to select from");
  for (const auto& s : scores) {
    if (!s.comparable(scores.front())) scores.front().less_than(s);  // throws MixedScorers
  }
  std::size_t worst = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i].less_than(scores[worst])) worst = i;
  }
  return worst;
}

namespace {

std::optional<corpus::AcceptanceCriterion> parse_replacement(const std::string& reply) {
  try {
    auto acs = corpus::atomicize_all(corpus::parse_gherkin(reply));
    if (acs.empty()) return std::nullopt;
    return acs.front();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MissingKeyword || e.code() == ErrorCode::EmptyInput) return std::nullopt;
    throw;
  }
}

}  // namespace

PolishOutcome polish(const corpus::UserStory& story, const std::vector<corpus::AcceptanceCriterion>& acs,
                     const PolishConfig& cfg, PolishProviders providers, const RewardPrompts& prompts,
                     const std::vector<Message>& dialogue) {
  cfg.validate();
  if (acs.empty()) throw Error(ErrorCode::EmptyInput, "nothing to polish");
  for (const auto& ac : acs) {
    if (!ac.is_atomic()) throw Error(ErrorCode::InvalidArgument, "polishing needs atomic criteria");
  }
  PolishOutcome out;
  out.acs = acs;
  out.global_before = global_score(story, acs, providers.judge, prompts);
  out.global_after = out.global_before;
  if (out.global_before.level >= cfg.threshold) return out;

  providers::ChatRequest conversation;
  conversation.messages = dialogue;
  conversation.purpose = "polish";
  while (out.rounds_executed < cfg.max_rounds && out.global_after.level < cfg.threshold) {
    PolishRound round;
    for (const auto& ac : out.acs) {
      round.local_scores.push_back(local_score(story, ac, cfg.local_scorer, providers.scorer, prompts));
    }
    round.worst = select_worst(round.local_scores);

    std::string worst_text = corpus::render(out.acs[round.worst]);
    conversation.messages.push_back(Message::text(
        Role::User, util::fill(prompts.polish_instruction, {{"story", story.query_text()},
                                                            {"worst", worst_text},
                                                            {"others", numbered(out.acs, round.worst)}})));
    conversation.metadata = {{"story_id", story.id},
                             {"round", out.rounds_executed + 1},
                             {"worst_index", round.worst},
                             {"worst", worst_text},
                             {"acs", rendered(out.acs)}};
    std::vector<std::string> replies;
    std::optional<corpus::AcceptanceCriterion> replacement;
    for (int attempt = 0; attempt < 2 && !replacement; ++attempt) {
      if (attempt > 0) {
        conversation.messages.push_back(Message::text(Role::User, prompts.polish_reprompt));
        conversation.metadata["attempt"] = attempt + 1;
      }
      std::string reply = providers.generator.chat(conversation).text;
      replies.push_back(reply);
      conversation.messages.push_back(Message::text(Role::Assistant, reply));
      replacement = parse_replacement(reply);
    }
    if (!replacement) {
      throw Error(ErrorCode::UnparseablePolish, "polished criterion could not be parsed after a retry",
                  {{"replies", replies}, {"story_id", story.id}, {"worst_index", round.worst}});
    }
    round.reply = replies.back();
    round.replacement = *replacement;
    out.acs[round.worst] = *replacement;
    out.replaced_indices.push_back(round.worst);
    ++out.rounds_executed;
    out.global_after = global_score(story, out.acs, providers.judge, prompts);
    round.global_after = out.global_after;
    out.transcript.push_back({{"round", out.rounds_executed}, {"worst_index", round.worst}, {"replies", replies}});
    out.rounds.push_back(std::move(round));
  }
  return out;
}

json to_json(const GlobalScore& g) {
  return {{"level", g.level}, {"dimension_notes", g.dimension_notes}, {"raw_judgment", g.raw_judgment}};
}

GlobalScore global_score_from_json(const json& j) {
  return {j.at("level").get<int>(), j.at("dimension_notes").get<std::vector<std::string>>(),
          j.at("raw_judgment").get<std::string>()};
}

json to_json(const PolishOutcome& o) {
  json acs = json::array();
  for (const auto& ac : o.acs) acs.push_back(corpus::to_json(ac));
  json rounds = json::array();
  for (const auto& r : o.rounds) {
    json locals = json::array();
    for (const auto& s : r.local_scores) locals.push_back(s.value);
    rounds.push_back({{"scorer", r.local_scores.empty() ? "" : to_string(r.local_scores.front().scorer)},
                      {"local_scores", std::move(locals)},
                      {"worst", r.worst},
                      {"reply", r.reply},
                      {"replacement", corpus::to_json(r.replacement)},
                      {"global_after", to_json(r.global_after)}});
  }
  return {{"acs", std::move(acs)},
          {"rounds_executed", o.rounds_executed},
          {"replaced_indices", o.replaced_indices},
          {"global_before", to_json(o.global_before)},
          {"global_after", to_json(o.global_after)},
          {"rounds", std::move(rounds)},
          {"transcript", o.transcript}};
}

PolishOutcome polish_outcome_from_json(const json& j) {
  try {
    PolishOutcome o;
    for (const auto& ac : j.at("acs")) o.acs.push_back(corpus::criterion_from_json(ac));
    o.rounds_executed = j.at("rounds_executed").get<int>();
    o.replaced_indices = j.at("replaced_indices").get<std::vector<std::size_t>>();
    o.global_before = global_score_from_json(j.at("global_before"));
    o.global_after = global_score_from_json(j.at("global_after"));
    for (const auto& r : j.at("rounds")) {
      PolishRound round;
      std::string scorer = r.at("scorer").get<std::string>();
      for (const auto& v : r.at("local_scores")) {
        round.local_scores.push_back({v.get<double>(), local_scorer_from_string(scorer)});
      }
      round.worst = r.at("worst").get<std::size_t>();
      round.reply = r.at("reply").get<std::string>();
      round.replacement = corpus::criterion_from_json(r.at("replacement"));
      round.global_after = global_score_from_json(r.at("global_after"));
      o.rounds.push_back(std::move(round));
    }
    o.transcript = j.at("transcript");
    return o;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed polish artifact: ") + e.what());
  }
}

}  // namespace acgen::reward
