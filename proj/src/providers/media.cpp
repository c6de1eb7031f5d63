#include "acgen/providers/media.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "acgen/error.hpp"
#include "acgen/util/text.hpp"

namespace acgen::providers {

namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

bool is_png(std::span<const std::uint8_t> b) {
  return b.size() >= kPngSignature.size() && std::equal(kPngSignature.begin(), kPngSignature.end(), b.begin());
}

bool is_jpeg(std::span<const std::uint8_t> b) { return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF; }

[[noreturn]] void invalid(const std::string& why) { throw Error(ErrorCode::InvalidImage, why); }

void validate_png(std::span<const std::uint8_t> b) {
  std::size_t pos = kPngSignature.size();
  bool first = true;
  while (true) {
    if (pos + 8 > b.size()) invalid("truncated PNG chunk header");
    std::uint32_t len = read_be32(b, pos);
    std::string type(reinterpret_cast<const char*>(&b[pos + 4]), 4);
    if (first && type != "IHDR") invalid("PNG does not start with IHDR");
    first = false;
    std::size_t end = pos + 12 + static_cast<std::size_t>(len);
    if (end > b.size()) invalid("truncated PNG chunk '" + type + "'");
    if (type == "IEND") return;
    pos = end;
  }
}

void validate_jpeg(std::span<const std::uint8_t> b) {
  if (b.size() < 4 || b[b.size() - 2] != 0xFF || b[b.size() - 1] != 0xD9) invalid("JPEG is missing its EOI marker");
}

}  // namespace

void validate_image(std::span<const std::uint8_t> bytes, std::string_view media_type) {
  if (bytes.empty()) invalid("image payload is empty");
  if (media_type == "image/png") {
    if (!is_png(bytes)) invalid("payload is not a PNG image");
    validate_png(bytes);
  } else if (media_type == "image/jpeg") {
    if (!is_jpeg(bytes)) invalid("payload is not a JPEG image");
    validate_jpeg(bytes);
  } else {
    invalid("unsupported media type '" + std::string(media_type) + "'");
  }
}

std::vector<std::pair<std::string, std::string>> png_text_chunks(std::span<const std::uint8_t> b) {
  std::vector<std::pair<std::string, std::string>> out;
  if (!is_png(b)) return out;
  std::size_t pos = kPngSignature.size();
  while (pos + 8 <= b.size()) {
    std::uint32_t len = read_be32(b, pos);
    std::string type(reinterpret_cast<const char*>(&b[pos + 4]), 4);
    std::size_t data = pos + 8;
    if (data + len > b.size()) break;
    if (type == "tEXt") {
      std::string payload(reinterpret_cast<const char*>(&b[data]), len);
      auto nul = payload.find('\0');
      if (nul != std::string::npos) out.emplace_back(payload.substr(0, nul), payload.substr(nul + 1));
    }
    if (type == "IEND") break;
    pos = data + len + 4;
  }
  return out;
}

namespace {

const std::set<std::string>& void_elements() {
  static const std::set<std::string> kVoid = {"area", "base", "br",   "col",   "embed",  "hr",    "img",
                                              "input", "link", "meta", "param", "source", "track", "wbr"};
  return kVoid;
}

const std::set<std::string>& optional_end_elements() {
  static const std::set<std::string> kOptional = {"html", "head", "body", "p",     "li",    "td",   "tr",
                                                  "th",   "option", "dt", "dd", "thead", "tbody", "tfoot"};
  return kOptional;
}

bool keep_attribute(const std::string& name) {
  static const std::set<std::string> kKeep = {"id",   "href",  "alt",         "role", "title", "name",
                                              "type", "value", "placeholder", "for",  "src"};
  return kKeep.contains(name) || name.starts_with("aria-");
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

bool is_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == ':' ||
         c == '_' || c == '.';
}

[[noreturn]] void parse_error(const std::string& why, std::size_t pos) {
  throw Error(ErrorCode::ParseError, why + " at offset " + std::to_string(pos), {{"offset", pos}});
}

std::size_t find_ci(std::string_view hay, std::string_view needle, std::size_t from) {
  auto lower_hay = util::to_lower_ascii(hay);
  return lower_hay.find(util::to_lower_ascii(needle), from);
}

// Collapses whitespace runs to one space without trimming, so inline word
// boundaries survive.
void append_text(std::string& out, std::string_view text) {
  bool all_space = std::all_of(text.begin(), text.end(), is_space);
  if (all_space) return;
  bool in_space = false;
  for (char c : text) {
    if (is_space(c)) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
}

struct Attribute {
  std::string name;  // lowercase
  std::string value;
  std::string_view raw;
  bool spaced = true;  // preceded by whitespace in the source
};

}  // namespace

std::string prune_html(std::string_view html) {
  std::string out;
  out.reserve(html.size());
  std::vector<std::string> open;
  std::size_t pos = 0;
  const std::size_t n = html.size();

  while (pos < n) {
    if (html[pos] != '<') {
      std::size_t next = html.find('<', pos);
      if (next == std::string_view::npos) next = n;
      append_text(out, html.substr(pos, next - pos));
      pos = next;
      continue;
    }
    if (html.substr(pos).starts_with("<!--")) {
      auto end = html.find("-->", pos + 4);
      if (end == std::string_view::npos) parse_error("unterminated comment", pos);
      pos = end + 3;
      continue;
    }
    if (html.substr(pos).starts_with("<!") || html.substr(pos).starts_with("<?")) {
      auto end = html.find('>', pos);
      if (end == std::string_view::npos) parse_error("unterminated declaration", pos);
      out.append(html.substr(pos, end + 1 - pos));
      pos = end + 1;
      continue;
    }
    if (html.substr(pos).starts_with("</")) {
      std::size_t p = pos + 2;
      std::size_t name_begin = p;
      while (p < n && is_name_char(html[p])) ++p;
      std::string_view name = html.substr(name_begin, p - name_begin);
      while (p < n && is_space(html[p])) ++p;
      if (p >= n || html[p] != '>') parse_error("unterminated end tag", pos);
      std::string lname = util::to_lower_ascii(name);
      while (!open.empty() && open.back() != lname && optional_end_elements().contains(open.back())) open.pop_back();
      if (open.empty() || open.back() != lname) parse_error("mismatched end tag </" + std::string(name) + ">", pos);
      open.pop_back();
      out.append("</").append(name).append(">");
      pos = p + 1;
      continue;
    }

    // Start tag.
    std::size_t p = pos + 1;
    std::size_t name_begin = p;
    while (p < n && is_name_char(html[p])) ++p;
    std::string_view name = html.substr(name_begin, p - name_begin);
    if (name.empty() || !std::isalpha(static_cast<unsigned char>(name.front()))) {
      out.push_back('<');  // stray '<' in text
      ++pos;
      continue;
    }
    std::vector<Attribute> attrs;
    bool self_closing = false;
    bool closed = false;
    while (p < n) {
      std::size_t ws_begin = p;
      while (p < n && is_space(html[p])) ++p;
      bool spaced = p > ws_begin;
      if (p >= n) break;
      if (html[p] == '>') {
        closed = true;
        ++p;
        break;
      }
      if (html[p] == '/' && p + 1 < n && html[p + 1] == '>') {
        self_closing = closed = true;
        p += 2;
        break;
      }
      std::size_t attr_begin = p;
      while (p < n && !is_space(html[p]) && html[p] != '>' && html[p] != '=' &&
             !(html[p] == '/' && p + 1 < n && html[p + 1] == '>')) {
        ++p;
      }
      Attribute attr;
      attr.name = util::to_lower_ascii(html.substr(attr_begin, p - attr_begin));
      std::size_t q = p;
      while (q < n && is_space(html[q])) ++q;
      if (q < n && html[q] == '=') {
        ++q;
        while (q < n && is_space(html[q])) ++q;
        if (q >= n) parse_error("unterminated attribute", attr_begin);
        if (html[q] == '"' || html[q] == '\'') {
          char quote = html[q];
          auto close = html.find(quote, q + 1);
          if (close == std::string_view::npos) parse_error("unterminated attribute quote", q);
          attr.value = std::string(html.substr(q + 1, close - q - 1));
          p = close + 1;
        } else {
          std::size_t v = q;
          while (v < n && !is_space(html[v]) && html[v] != '>') ++v;
          attr.value = std::string(html.substr(q, v - q));
          p = v;
        }
      }
      attr.raw = html.substr(attr_begin, p - attr_begin);
      attr.spaced = spaced;
      if (attr.name.empty()) parse_error("malformed attribute", attr_begin);
      attrs.push_back(std::move(attr));
    }
    if (!closed) parse_error("unterminated start tag <" + std::string(name) + ">", pos);

    std::string lname = util::to_lower_ascii(name);
    if (lname == "script" || lname == "style") {
      if (!self_closing) {
        auto end = find_ci(html, "</" + lname, p);
        if (end == std::string::npos) parse_error("unterminated <" + lname + "> element", pos);
        auto gt = html.find('>', end);
        if (gt == std::string_view::npos) parse_error("unterminated end tag", end);
        p = gt + 1;
      }
      pos = p;
      continue;
    }

    out.push_back('<');
    out.append(name);
    for (const auto& a : attrs) {
      if (!keep_attribute(a.name)) continue;
      if (util::to_lower_ascii(util::trim(a.value)).starts_with("data:")) continue;
      if (a.spaced) out.push_back(' ');
      out.append(a.raw);
    }
    out.append(self_closing ? "/>" : ">");
    if (!self_closing && !void_elements().contains(lname)) open.push_back(lname);
    pos = p;
  }

  for (const auto& tag : open) {
    if (!optional_end_elements().contains(tag)) parse_error("unclosed <" + tag + "> element", n);
  }
  return out;
}

}  // namespace acgen::providers
