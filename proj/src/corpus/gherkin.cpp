#include "acgen/corpus/gherkin.hpp"

#include <array>
#include <optional>
#include <regex>

#include "acgen/error.hpp"
#include "acgen/util/text.hpp"

namespace acgen::corpus {

namespace {

enum class Keyword { Given, When, Then, And, But };
enum class Section { None, Given, When, Then };

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_word_char(char c) {
  return is_letter(c) || (c >= '0' && c <= '9') || c == '_' || static_cast<unsigned char>(c) >= 0x80;
}

std::optional<Keyword> keyword_of(std::string_view word) {
  auto lw = util::to_lower_ascii(word);
  if (lw == "given") return Keyword::Given;
  if (lw == "when") return Keyword::When;
  if (lw == "then") return Keyword::Then;
  if (lw == "and") return Keyword::And;
  if (lw == "but") return Keyword::But;
  return std::nullopt;
}

bool all_upper(std::string_view word) {
  for (char c : word) {
    if (!(c >= 'A' && c <= 'Z')) return false;
  }
  return true;
}

// Offset of the first content character after indentation, bullets, list
// numbering, quote markers and emphasis.
std::size_t content_start(std::string_view line) {
  std::size_t i = 0;
  bool progressed = true;
  while (progressed && i < line.size()) {
    progressed = false;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i, progressed = true;
    if (i < line.size() && (line[i] == '-' || line[i] == '+' || line[i] == '>')) {
      ++i, progressed = true;
    } else if (line.substr(i).starts_with("\xE2\x80\xA2")) {  // bullet
      i += 3, progressed = true;
    } else if (i < line.size() && line[i] >= '0' && line[i] <= '9') {
      std::size_t j = i;
      while (j < line.size() && line[j] >= '0' && line[j] <= '9') ++j;
      if (j < line.size() && (line[j] == '.' || line[j] == ')')) i = j + 1, progressed = true;
    } else if (i < line.size() && (line[i] == '*' || line[i] == '_')) {
      ++i, progressed = true;
    }
  }
  return i;
}

bool is_heading(std::string_view content) {
  static const std::regex kHeading(
      R"(^(#|(scenario outline|scenario|feature|rule|examples?|background|acceptance criteri[a-z]*)\b[^:]{0,40}:))",
      std::regex::icase);
  return std::regex_search(content.begin(), content.end(), kHeading);
}

std::string clean_clause(std::string_view text) {
  std::string s = util::collapse_whitespace(text);
  auto strip_lead = [](char c) { return c == ' ' || c == ':' || c == ',' || c == ';' || c == '*' || c == '_'; };
  auto strip_trail = [](char c) { return c == ' ' || c == ':' || c == ',' || c == ';' || c == '*' || c == '_'; };
  std::size_t b = 0, e = s.size();
  while (b < e && strip_lead(s[b])) ++b;
  while (e > b && strip_trail(s[e - 1])) --e;
  return s.substr(b, e - b);
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  std::vector<AcceptanceCriterion> run() {
    std::size_t offset = 0;
    while (offset <= text_.size()) {
      auto nl = text_.find('\n', offset);
      std::size_t end = nl == std::string_view::npos ? text_.size() : nl;
      process_line(offset, end);
      if (nl == std::string_view::npos) break;
      offset = nl + 1;
    }
    finish_criterion();
    if (out_.empty()) {
      throw Error(ErrorCode::MissingKeyword, "no GIVEN/WHEN/THEN criterion found");
    }
    return std::move(out_);
  }

 private:
  void process_line(std::size_t begin, std::size_t end) {
    std::string_view line = text_.substr(begin, end - begin);
    std::size_t start = content_start(line);
    if (is_heading(line.substr(start))) {
      flush();
      return;
    }
    // Separate wrapped lines with a space.
    if (!pending_.empty()) pending_.push_back(' ');

    std::size_t seg_begin = start;
    std::size_t i = start;
    while (i < line.size()) {
      if (!is_letter(line[i]) || (i > 0 && is_word_char(line[i - 1]))) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < line.size() && is_letter(line[j])) ++j;
      if (j < line.size() && is_word_char(line[j])) {
        i = j;
        continue;
      }
      std::string_view word = line.substr(i, j - i);
      auto kw = keyword_of(word);
      bool strong = i == start || all_upper(word);
      if (kw && acts(*kw, strong)) {
        append_text(line, seg_begin, i, begin);
        apply(*kw, begin + i);
        // Skip "Given:" or "**Given**" decorations.
        while (j < line.size() && (line[j] == ':' || line[j] == '*' || line[j] == '_')) ++j;
        seg_begin = j;
      }
      i = j;
    }
    append_text(line, seg_begin, line.size(), begin);
  }

  void append_text(std::string_view line, std::size_t from, std::size_t to, std::size_t line_offset) {
    if (section_ == Section::None || from >= to) return;
    std::string_view seg = line.substr(from, to - from);
    if (!util::trim(seg).empty()) {
      auto last = seg.find_last_not_of(" \t\r");
      raw_end_ = line_offset + from + last + 1;
    }
    pending_.append(seg);
  }

  bool acts(Keyword kw, bool strong) const {
    switch (section_) {
      case Section::None:
        return kw == Keyword::Given && strong;
      case Section::Given:
        if (kw == Keyword::When) return true;
        return strong;
      case Section::When:
        if (kw == Keyword::Then) return true;
        return strong;
      case Section::Then:
        return strong;
    }
    return false;
  }

  void apply(Keyword kw, std::size_t pos) {
    flush();
    switch (section_) {
      case Section::None:
        begin_criterion(pos, {});
        section_ = Section::Given;
        return;
      case Section::Given:
        if (kw == Keyword::Given) throw missing("WHEN", "GIVEN", pos);
        if (kw == Keyword::Then) throw missing("WHEN", "THEN", pos);
        if (kw == Keyword::When) section_ = Section::When;
        return;
      case Section::When:
        if (kw == Keyword::Given) throw missing("THEN", "GIVEN", pos);
        if (kw == Keyword::Then) section_ = Section::Then;
        return;
      case Section::Then:
        if (kw == Keyword::Given) {
          finish_criterion();
          begin_criterion(pos, {});
          section_ = Section::Given;
        } else if (kw == Keyword::When) {
          auto inherited = current_.given;
          finish_criterion();
          begin_criterion(pos, std::move(inherited));
          section_ = Section::When;
        }
        return;
    }
  }

  Error missing(const char* expected, const char* found, std::size_t pos) const {
    return Error(ErrorCode::MissingKeyword,
                 std::string("expected ") + expected + " before " + found + " at offset " + std::to_string(pos),
                 {{"offset", pos}, {"expected", expected}});
  }

  void begin_criterion(std::size_t pos, std::vector<std::string> given) {
    current_ = AcceptanceCriterion{};
    current_.given = std::move(given);
    raw_begin_ = pos;
    raw_end_ = pos;
  }

  void flush() {
    std::string clause = clean_clause(pending_);
    pending_.clear();
    if (clause.empty()) return;
    switch (section_) {
      case Section::Given: current_.given.push_back(std::move(clause)); break;
      case Section::When: current_.when.push_back(std::move(clause)); break;
      case Section::Then: current_.then.push_back(std::move(clause)); break;
      case Section::None: break;
    }
  }

  void finish_criterion() {
    flush();
    if (section_ == Section::None) return;
    if (current_.given.empty()) throw missing("GIVEN clause", "WHEN", raw_begin_);
    if (current_.when.empty()) throw missing("WHEN", "end of criterion", raw_begin_);
    if (current_.then.empty()) throw missing("THEN", "end of criterion", raw_begin_);
    current_.raw = std::string(util::trim(text_.substr(raw_begin_, raw_end_ - raw_begin_)));
    out_.push_back(std::move(current_));
    current_ = AcceptanceCriterion{};
    section_ = Section::None;
  }

  std::string_view text_;
  Section section_ = Section::None;
  AcceptanceCriterion current_;
  std::string pending_;
  std::size_t raw_begin_ = 0;
  std::size_t raw_end_ = 0;
  std::vector<AcceptanceCriterion> out_;
};

void render_section(std::string& out, const char* keyword, const std::vector<std::string>& clauses) {
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    if (!out.empty()) out.push_back('\n');
    out.append(i == 0 ? keyword : "AND");
    out.push_back(' ');
    out.append(clauses[i]);
  }
}

}  // namespace

std::vector<AcceptanceCriterion> parse_gherkin(std::string_view text) {
  if (util::trim(text).empty()) throw Error(ErrorCode::EmptyInput, "acceptance criteria text is empty");
  return Parser(text).run();
}

std::string render(const AcceptanceCriterion& ac) {
  std::string out;
  render_section(out, "GIVEN", ac.given);
  render_section(out, "WHEN", ac.when);
  render_section(out, "THEN", ac.then);
  return out;
}

std::string render(const std::vector<AcceptanceCriterion>& acs) {
  std::string out;
  for (std::size_t i = 0; i < acs.size(); ++i) {
    if (i) out.append("\n\n");
    out.append(render(acs[i]));
  }
  return out;
}

std::vector<AcceptanceCriterion> atomicize(const AcceptanceCriterion& ac) {
  if (ac.then.size() <= 1) return {ac};
  std::vector<AcceptanceCriterion> out;
  out.reserve(ac.then.size());
  for (const auto& outcome : ac.then) {
    AcceptanceCriterion part{ac.given, ac.when, {outcome}, {}};
    part.raw = render(part);
    out.push_back(std::move(part));
  }
  return out;
}

std::vector<AcceptanceCriterion> atomicize_all(const std::vector<AcceptanceCriterion>& acs) {
  std::vector<AcceptanceCriterion> out;
  for (const auto& ac : acs) {
    auto parts = atomicize(ac);
    out.insert(out.end(), std::make_move_iterator(parts.begin()), std::make_move_iterator(parts.end()));
  }
  return out;
}

}  // namespace acgen::corpus
