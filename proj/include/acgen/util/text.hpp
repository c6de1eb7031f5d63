#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace acgen::util {

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
/// Collapses every run of ASCII whitespace into one space and trims the ends.
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);

/// Metric tokenization: ASCII letters are lowercased; tokens are maximal runs
/// of alphanumerics. Bytes >= 0x80 count as word characters so UTF-8 words
/// stay intact.
std::vector<std::string> tokenize(std::string_view s);

/// Decodes UTF-8 into Unicode scalar values. Malformed sequences decode to
/// U+FFFD one byte at a time.
std::u32string utf8_decode(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Replaces every `{name}` whose name is a key of `values`; other braces are
/// left alone. Substituted text is not rescanned.
std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& values);

}  // namespace acgen::util
