#include "acgen/pipeline/offline.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "acgen/corpus/gherkin.hpp"
#include "acgen/error.hpp"
#include "acgen/util/encoding.hpp"
#include "acgen/util/text.hpp"

namespace acgen::pipeline {

using nlohmann::json;
using providers::ChatRequest;

namespace {

struct Narrative {
  std::string role = "user";
  std::string goal;
  std::string benefit;
};

// Keeps inserted text from being read as a section keyword.
std::string neutral(std::string_view text) {
  static const std::regex kw(R"(\b(given|when|then)\b)", std::regex::icase);
  std::string s = util::collapse_whitespace(text);
  while (!s.empty() && (s.back() == '.' || s.back() == ',')) s.pop_back();
  std::string out;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kw); it != std::sregex_iterator(); ++it) {
    out += s.substr(last, static_cast<std::size_t>(it->position()) - last);
    std::string w = util::to_lower_ascii(it->str());
    out += w == "given" ? "provided" : (w == "when" ? "once" : "next");
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  out += s.substr(last);
  return out;
}

std::string lower_first(std::string s) {
  if (!s.empty() && s[0] >= 'A' && s[0] <= 'Z' && !(s.size() > 1 && s[1] >= 'A' && s[1] <= 'Z')) s[0] = static_cast<char>(s[0] - 'A' + 'a');
  return s;
}

Narrative parse_narrative(const corpus::UserStory& story) {
  static const std::regex re(R"(^\s*as an?\s+(.+?),\s*i want(?:\s+to)?\s+(.+?)(?:,?\s+so that\s+(.+?))?\s*\.?\s*$)",
                             std::regex::icase);
  Narrative n;
  std::smatch m;
  std::string text = util::collapse_whitespace(story.narrative);
  if (std::regex_match(text, m, re)) {
    n.role = neutral(m[1].str());
    n.goal = neutral(m[2].str());
    n.benefit = m[3].matched ? neutral(m[3].str()) : "";
  } else {
    n.goal = neutral(util::to_lower_ascii(story.title));
  }
  return n;
}

std::string first_sentence(const std::string& text) {
  auto end = text.find_first_of(".!?");
  return neutral(lower_first(text.substr(0, end)));
}

std::string criterion(const std::vector<std::string>& given, const std::string& when,
                      const std::vector<std::string>& then) {
  std::string out;
  for (std::size_t i = 0; i < given.size(); ++i) out += (i ? "AND " : "GIVEN ") + given[i] + "\n";
  out += "WHEN " + when + "\n";
  for (std::size_t i = 0; i < then.size(); ++i) out += (i ? "AND " : "THEN ") + then[i] + "\n";
  return out;
}

std::string generate_reply(const corpus::Dataset& d, const ChatRequest& req) {
  const auto* story = d.find_story(req.metadata.value("story_id", ""));
  if (!story) return "I could not find the story.";
  Narrative n = parse_narrative(*story);
  std::string actor = "the " + n.role;
  std::vector<std::string> blocks;

  std::vector<std::string> outcome{n.benefit.empty() ? "the request is completed" : "the system lets " + actor + " " + n.goal,
                                   "a confirmation message is displayed"};
  blocks.push_back(criterion({"a signed-in " + n.role}, actor + " tries to " + n.goal, outcome));
  std::size_t ext = 0;
  for (const auto& e : story->extensions) {
    if (ext++ == 3) break;
    blocks.push_back(criterion({"a signed-in " + n.role, actor + " has started to " + n.goal},
                               actor + " continues", {neutral(lower_first(e))}));
  }
  std::size_t used = 0;
  for (const auto& id : req.metadata.value("text_ids", json::array())) {
    if (used++ == 2) break;
    const auto* chunk = d.find_chunk(id.get<std::string>());
    if (!chunk) continue;
    blocks.push_back(criterion({"a signed-in " + n.role}, actor + " tries to " + n.goal,
                               {"the domain rule holds: " + first_sentence(chunk->text)}));
  }
  auto visuals = req.metadata.value("visual_ids", json::array());
  if (!visuals.empty()) {
    const auto* v = d.find_visual(visuals.front().get<std::string>());
    std::string name = v && v->caption ? neutral(*v->caption) : visuals.front().get<std::string>();
    blocks.push_back(criterion({"the screen \"" + name + "\" is open"}, actor + " tries to " + n.goal,
                               {"the screen shows the updated state"}));
  }
  return "Acceptance criteria:\n\n" + util::join(blocks, "\n");
}

std::string polish_reply(const ChatRequest& req) {
  auto acs = corpus::parse_gherkin(req.metadata.value("worst", ""));
  auto ac = acs.front();
  ac.then = {ac.then.front() + " and the result is visible without reloading the page"};
  ac.raw.clear();
  return "Improved criterion:\n\n" + corpus::render(ac);
}

std::string global_reply(const ChatRequest& req) {
  auto acs = req.metadata.value("acs", json::array());
  std::string joined;
  bool visible = false;
  for (const auto& a : acs) {
    joined += a.get<std::string>() + "\n";
    visible = visible || a.get<std::string>().find("without reloading") != std::string::npos;
  }
  int level = 1 + (acs.size() >= 3) + (acs.size() >= 5) + (visible ? 1 : 0) +
              static_cast<int>(util::fnv1a64(joined) % 2);
  level = std::clamp(level, 1, 5);
  return "relevance: the criteria stay within the story\n"
         "correctness: no contradictions found\n"
         "understandability: wording is plain\n"
         "coverage: " + std::string(acs.size() >= 5 ? "main and alternative flows" : "mostly the main flow") + "\n"
         "atomicity: one outcome per criterion\n"
         "testability: outcomes are observable\n"
         "Score: " + std::to_string(level);
}

std::set<std::string> content_tokens(const std::string& text) {
  static const std::set<std::string> stop{"the", "and", "for", "with", "that", "this", "are", "can", "has", "have",
                                          "into", "from", "their", "they", "not", "but", "all", "any", "was", "its"};
  std::set<std::string> out;
  for (auto& t : util::tokenize(text)) {
    if (t.size() >= 3 && !stop.contains(t)) out.insert(t);
  }
  return out;
}

std::string coverage_reply(const ChatRequest& req) {
  auto objective = content_tokens(req.metadata.value("objective", ""));
  std::string acs;
  for (const auto& a : req.metadata.value("acs", json::array())) acs += a.get<std::string>() + "\n";
  auto covered = content_tokens(acs);
  std::size_t overlap = 0;
  for (const auto& t : objective) overlap += covered.contains(t);
  double r = objective.empty() ? 0.0 : static_cast<double>(overlap) / static_cast<double>(objective.size());
  double full = 0.5 + 0.1 * req.metadata.value("judge_index", 0);
  std::string verdict = r >= full ? "Full" : (r >= 0.25 ? "Partial" : "Not");
  return "The criteria mention " + std::to_string(overlap) + " of " + std::to_string(objective.size()) +
         " key terms of the objective.\nVerdict: " + verdict;
}

std::string compare_reply(const corpus::Dataset& d, const ChatRequest& req) {
  const auto* story = d.find_story(req.metadata.value("story_id", ""));
  auto story_tokens = content_tokens(story ? story->query_text() : "");
  auto score = [&](const json& set) {
    std::string text;
    for (const auto& a : set) text += a.get<std::string>() + "\n";
    std::size_t n = 0;
    for (const auto& t : content_tokens(text)) n += story_tokens.contains(t) ? 2 : 1;
    return n;
  };
  std::size_t a = score(req.metadata.value("a", json::array()));
  std::size_t b = score(req.metadata.value("b", json::array()));
  std::string pref = a > b ? "A" : (b > a ? "B" : "Tie");
  return "Set A scores " + std::to_string(a) + ", set B scores " + std::to_string(b) + ".\nPreference: " + pref;
}

}  // namespace

void install_offline_responders(providers::MockBackend& backend, std::shared_ptr<const corpus::Dataset> dataset) {
  if (!dataset) throw Error(ErrorCode::InvalidArgument, "offline responders need a dataset");
  backend.set_chat_responder("generate", [dataset](const ChatRequest& r) { return generate_reply(*dataset, r); });
  backend.set_chat_responder("polish", [](const ChatRequest& r) { return polish_reply(r); });
  backend.set_chat_responder("global_score", [](const ChatRequest& r) { return global_reply(r); });
  backend.set_chat_responder("judge_coverage", [](const ChatRequest& r) { return coverage_reply(r); });
  backend.set_chat_responder("compare", [dataset](const ChatRequest& r) { return compare_reply(*dataset, r); });
}

}  // namespace acgen::pipeline
