#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acgen/util/encoding.hpp"

namespace acgen::providers {

/// Structural check of a PNG or JPEG payload: signature, chunk/segment
/// bounds, terminator. Throws Error(InvalidImage) on truncated or
/// undecodable data or when the bytes do not match `media_type`.
void validate_image(std::span<const std::uint8_t> bytes, std::string_view media_type);

/// Key/value pairs from PNG tEXt chunks, in file order. Empty for JPEG.
std::vector<std::pair<std::string, std::string>> png_text_chunks(std::span<const std::uint8_t> bytes);

/// Removes style/script elements, comments, data-URIs and every attribute
/// outside a semantic allow-list (id, href, alt, aria-*, role, title, name,
/// type, value, placeholder, for, src). Tag structure and text are kept;
/// whitespace-only text nodes are dropped and whitespace runs collapse to a
/// single space. Kept attributes are copied verbatim from the source, so the
/// output is never longer than the input.
///
/// Throws Error(ParseError) on unterminated tags, comments or quotes and on
/// mismatched end tags.
std::string prune_html(std::string_view html);

}  // namespace acgen::providers
