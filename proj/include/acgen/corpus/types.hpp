#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "acgen/util/encoding.hpp"

namespace acgen::corpus {

struct UserStory {
  std::string id;
  std::string title;
  std::string narrative;  // "As a ..., I want ..., so that ..."
  std::vector<std::string> extensions;

  /// Text used to query indices: title, narrative and extensions joined by newlines.
  std::string query_text() const;

  bool operator==(const UserStory&) const = default;
};

enum class ChunkKind { Background, Consideration };

struct DomainChunk {
  std::string id;
  std::string text;  // one paragraph
  ChunkKind kind = ChunkKind::Background;
  std::string source;

  bool operator==(const DomainChunk&) const = default;
};

struct VisualDoc {
  std::string id;
  util::Bytes image;
  std::string media_type;  // image/png or image/jpeg
  std::string image_path;  // relative to the dataset file
  std::optional<std::string> html_full;
  std::optional<std::string> html_pruned;
  std::optional<std::string> caption;

  bool operator==(const VisualDoc&) const = default;
};

struct AcceptanceCriterion {
  std::vector<std::string> given;
  std::vector<std::string> when;
  std::vector<std::string> then;
  std::string raw;

  bool is_atomic() const { return then.size() == 1; }
  /// Clause-level equality; ignores `raw`.
  bool same_clauses(const AcceptanceCriterion& other) const {
    return given == other.given && when == other.when && then == other.then;
  }

  bool operator==(const AcceptanceCriterion&) const = default;
};

struct GroundTruthObjective {
  std::string id;
  std::string story_id;
  std::string text;

  bool operator==(const GroundTruthObjective&) const = default;
};

struct Dataset {
  std::vector<UserStory> stories;
  std::vector<DomainChunk> chunks;
  std::vector<VisualDoc> visuals;
  std::map<std::string, std::vector<AcceptanceCriterion>> ground_truth_acs;
  std::map<std::string, std::vector<GroundTruthObjective>> objectives;
  std::map<std::string, std::set<std::string>> relevance;

  const UserStory* find_story(const std::string& id) const;
  const DomainChunk* find_chunk(const std::string& id) const;
  const VisualDoc* find_visual(const std::string& id) const;

  bool operator==(const Dataset&) const = default;
};

std::string to_string(ChunkKind kind);
ChunkKind chunk_kind_from_string(const std::string& s);

}  // namespace acgen::corpus
