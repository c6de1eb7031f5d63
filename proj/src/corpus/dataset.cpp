#include "acgen/corpus/dataset.hpp"

#include <fstream>
#include <iterator>
#include <set>

#include "acgen/corpus/gherkin.hpp"
#include "acgen/error.hpp"
#include "acgen/util/encoding.hpp"

namespace acgen::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

std::string UserStory::query_text() const {
  std::string out = title;
  if (!out.empty()) out.push_back('\n');
  out += narrative;
  for (const auto& ext : extensions) {
    out.push_back('\n');
    out += ext;
  }
  return out;
}

const UserStory* Dataset::find_story(const std::string& id) const {
  for (const auto& s : stories) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

const DomainChunk* Dataset::find_chunk(const std::string& id) const {
  for (const auto& c : chunks) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

const VisualDoc* Dataset::find_visual(const std::string& id) const {
  for (const auto& v : visuals) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

std::string to_string(ChunkKind kind) {
  return kind == ChunkKind::Background ? "background" : "consideration";
}

ChunkKind chunk_kind_from_string(const std::string& s) {
  if (s == "background") return ChunkKind::Background;
  if (s == "consideration") return ChunkKind::Consideration;
  throw Error(ErrorCode::InvalidArgument, "unknown chunk kind '" + s + "'");
}

namespace {

[[noreturn]] void schema_error(const std::string& pointer, const std::string& what) {
  throw Error(ErrorCode::SchemaError, what + " at " + (pointer.empty() ? "/" : pointer), {{"pointer", pointer}});
}

std::string escape_pointer_token(const std::string& token) {
  std::string out;
  for (char c : token) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out.push_back(c);
  }
  return out;
}

const json& require(const json& obj, const std::string& key, const std::string& pointer) {
  if (!obj.is_object()) schema_error(pointer, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(pointer + "/" + key, "missing key");
  return *it;
}

std::string require_string(const json& obj, const std::string& key, const std::string& pointer) {
  const auto& v = require(obj, key, pointer);
  if (!v.is_string()) schema_error(pointer + "/" + key, "expected a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const std::string& key, const std::string& pointer) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) schema_error(pointer + "/" + key, "expected a string");
  return it->get<std::string>();
}

const json& require_array(const json& obj, const std::string& key, const std::string& pointer) {
  const auto& v = require(obj, key, pointer);
  if (!v.is_array()) schema_error(pointer + "/" + key, "expected an array");
  return v;
}

const json& require_object(const json& obj, const std::string& key, const std::string& pointer) {
  const auto& v = require(obj, key, pointer);
  if (!v.is_object()) schema_error(pointer + "/" + key, "expected an object");
  return v;
}

std::vector<std::string> string_list(const json& arr, const std::string& pointer) {
  if (!arr.is_array()) schema_error(pointer, "expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) schema_error(pointer + "/" + std::to_string(i), "expected a string");
    out.push_back(arr[i].get<std::string>());
  }
  return out;
}

std::string media_type_for(const fs::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  return {};
}

util::Bytes read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::ImageNotFound, "cannot read image " + p.string(), {{"path", p.string()}});
  return util::Bytes(std::istreambuf_iterator<char>(in), {});
}

AcceptanceCriterion criterion_from_value(const json& v, const std::string& pointer) {
  if (v.is_string()) {
    std::vector<AcceptanceCriterion> parsed;
    try {
      parsed = parse_gherkin(v.get<std::string>());
    } catch (const Error& e) {
      schema_error(pointer, std::string("ground-truth criterion does not parse (") + e.what() + ")");
    }
    if (parsed.size() != 1) schema_error(pointer, "ground-truth string must hold exactly one criterion");
    parsed.front().raw = v.get<std::string>();
    return parsed.front();
  }
  if (!v.is_object()) schema_error(pointer, "expected a criterion string or object");
  AcceptanceCriterion ac;
  ac.given = string_list(require(v, "given", pointer), pointer + "/given");
  ac.when = string_list(require(v, "when", pointer), pointer + "/when");
  ac.then = string_list(require(v, "then", pointer), pointer + "/then");
  ac.raw = optional_string(v, "raw", pointer).value_or(render(ac));
  if (ac.given.empty() || ac.when.empty() || ac.then.empty()) {
    schema_error(pointer, "criterion needs GIVEN, WHEN and THEN clauses");
  }
  return ac;
}

}  // namespace

json to_json(const AcceptanceCriterion& ac) {
  return {{"given", ac.given}, {"when", ac.when}, {"then", ac.then}, {"raw", ac.raw}};
}

AcceptanceCriterion criterion_from_json(const json& j) { return criterion_from_value(j, ""); }

Dataset dataset_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) schema_error("", "dataset must be a JSON object");
  auto version = require(doc, "version", "");
  if (!version.is_string() || version.get<std::string>() != kDatasetSchemaVersion) {
    schema_error("/version", std::string("unsupported schema version (expected \"") + kDatasetSchemaVersion + "\")");
  }

  Dataset d;
  const auto& stories = require_array(doc, "stories", "");
  for (std::size_t i = 0; i < stories.size(); ++i) {
    std::string p = "/stories/" + std::to_string(i);
    const auto& s = stories[i];
    UserStory story;
    story.id = require_string(s, "id", p);
    story.title = require_string(s, "title", p);
    story.narrative = require_string(s, "narrative", p);
    if (auto it = s.find("extensions"); it != s.end()) story.extensions = string_list(*it, p + "/extensions");
    d.stories.push_back(std::move(story));
  }

  const auto& chunks = require_array(doc, "chunks", "");
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    std::string p = "/chunks/" + std::to_string(i);
    const auto& c = chunks[i];
    DomainChunk chunk;
    chunk.id = require_string(c, "id", p);
    chunk.text = require_string(c, "text", p);
    try {
      chunk.kind = chunk_kind_from_string(require_string(c, "kind", p));
    } catch (const Error&) {
      schema_error(p + "/kind", "expected \"background\" or \"consideration\"");
    }
    chunk.source = optional_string(c, "source", p).value_or("");
    d.chunks.push_back(std::move(chunk));
  }

  const auto& visuals = require_array(doc, "visuals", "");
  for (std::size_t i = 0; i < visuals.size(); ++i) {
    std::string p = "/visuals/" + std::to_string(i);
    const auto& v = visuals[i];
    VisualDoc vis;
    vis.id = require_string(v, "id", p);
    vis.image_path = require_string(v, "image", p);
    vis.media_type = optional_string(v, "media_type", p).value_or(media_type_for(vis.image_path));
    if (vis.media_type.empty()) schema_error(p + "/media_type", "cannot infer media type from image path");
    vis.html_full = optional_string(v, "html_full", p);
    vis.html_pruned = optional_string(v, "html_pruned", p);
    vis.caption = optional_string(v, "caption", p);
    d.visuals.push_back(std::move(vis));
  }

  const auto& gt = require_object(doc, "ground_truth", "");
  for (const auto& [story_id, list] : gt.items()) {
    std::string p = "/ground_truth/" + escape_pointer_token(story_id);
    if (!list.is_array()) schema_error(p, "expected an array");
    auto& acs = d.ground_truth_acs[story_id];
    for (std::size_t i = 0; i < list.size(); ++i) acs.push_back(criterion_from_value(list[i], p + "/" + std::to_string(i)));
  }

  const auto& objectives = require_object(doc, "objectives", "");
  for (const auto& [story_id, list] : objectives.items()) {
    std::string p = "/objectives/" + escape_pointer_token(story_id);
    if (!list.is_array()) schema_error(p, "expected an array");
    auto& objs = d.objectives[story_id];
    for (std::size_t i = 0; i < list.size(); ++i) {
      std::string op = p + "/" + std::to_string(i);
      GroundTruthObjective o;
      o.id = require_string(list[i], "id", op);
      o.text = require_string(list[i], "text", op);
      o.story_id = optional_string(list[i], "story_id", op).value_or(story_id);
      objs.push_back(std::move(o));
    }
  }

  const auto& relevance = require_object(doc, "relevance", "");
  for (const auto& [story_id, list] : relevance.items()) {
    auto ids = string_list(list, "/relevance/" + escape_pointer_token(story_id));
    d.relevance[story_id] = std::set<std::string>(ids.begin(), ids.end());
  }

  // Structural problems are reported before missing files.
  validate(d);
  for (auto& vis : d.visuals) {
    fs::path p = base_dir / vis.image_path;
    if (!fs::exists(p)) {
      throw Error(ErrorCode::ImageNotFound, "image for visual '" + vis.id + "' not found: " + vis.image_path,
                  {{"id", vis.id}, {"path", vis.image_path}});
    }
    vis.image = read_file(p);
    if (vis.image.empty()) schema_error("/visuals", "image for visual '" + vis.id + "' is empty");
  }
  return d;
}

void validate(const Dataset& d) {
  std::set<std::string> ids;
  auto claim = [&](const std::string& id, const char* what) {
    if (id.empty()) throw Error(ErrorCode::SchemaError, std::string(what) + " id is empty");
    if (!ids.insert(id).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate id '" + id + "' (" + what + ")", {{"id", id}});
    }
  };
  std::set<std::string> story_ids;
  for (const auto& s : d.stories) {
    claim(s.id, "story");
    story_ids.insert(s.id);
    if (s.narrative.empty()) throw Error(ErrorCode::SchemaError, "story '" + s.id + "' has an empty narrative");
  }
  std::set<std::string> doc_ids;
  for (const auto& c : d.chunks) {
    claim(c.id, "chunk");
    doc_ids.insert(c.id);
    if (c.text.empty()) throw Error(ErrorCode::SchemaError, "chunk '" + c.id + "' has empty text");
  }
  for (const auto& v : d.visuals) {
    claim(v.id, "visual");
    doc_ids.insert(v.id);
    if (v.html_pruned && !v.html_full) {
      throw Error(ErrorCode::SchemaError, "visual '" + v.id + "' has html_pruned without html_full");
    }
    if (v.html_pruned && v.html_pruned->size() > v.html_full->size()) {
      throw Error(ErrorCode::SchemaError, "visual '" + v.id + "' pruned HTML is longer than full HTML");
    }
  }
  auto require_story = [&](const std::string& story_id, const char* where) {
    if (!story_ids.contains(story_id)) {
      throw Error(ErrorCode::DanglingReference, std::string(where) + " references unknown story '" + story_id + "'",
                  {{"story_id", story_id}});
    }
  };
  for (const auto& [story_id, acs] : d.ground_truth_acs) {
    require_story(story_id, "ground_truth");
    for (const auto& ac : acs) {
      if (ac.given.empty() || ac.when.empty() || ac.then.empty()) {
        throw Error(ErrorCode::SchemaError, "ground-truth criterion for '" + story_id + "' is incomplete");
      }
    }
  }
  for (const auto& [story_id, objs] : d.objectives) {
    require_story(story_id, "objectives");
    for (const auto& o : objs) {
      claim(o.id, "objective");
      require_story(o.story_id, "objective");
      if (o.story_id != story_id) {
        throw Error(ErrorCode::DanglingReference, "objective '" + o.id + "' is filed under '" + story_id +
                                                      "' but references '" + o.story_id + "'");
      }
      if (o.text.empty()) throw Error(ErrorCode::SchemaError, "objective '" + o.id + "' has empty text");
    }
  }
  for (const auto& [story_id, rel] : d.relevance) {
    require_story(story_id, "relevance");
    for (const auto& id : rel) {
      if (!doc_ids.contains(id)) {
        throw Error(ErrorCode::DanglingReference, "relevance for '" + story_id + "' references unknown document '" + id + "'",
                    {{"doc_id", id}});
      }
    }
  }
}

Dataset load_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open dataset " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("invalid JSON: ") + e.what(), {{"pointer", ""}});
  }
  return dataset_from_json(doc, path.parent_path());
}

json dataset_to_json(const Dataset& d) {
  json doc;
  doc["version"] = kDatasetSchemaVersion;
  doc["stories"] = json::array();
  for (const auto& s : d.stories) {
    doc["stories"].push_back({{"id", s.id}, {"title", s.title}, {"narrative", s.narrative}, {"extensions", s.extensions}});
  }
  doc["chunks"] = json::array();
  for (const auto& c : d.chunks) {
    doc["chunks"].push_back({{"id", c.id}, {"text", c.text}, {"kind", to_string(c.kind)}, {"source", c.source}});
  }
  doc["visuals"] = json::array();
  for (const auto& v : d.visuals) {
    json jv{{"id", v.id}, {"image", v.image_path}, {"media_type", v.media_type}};
    if (v.html_full) jv["html_full"] = *v.html_full;
    if (v.html_pruned) jv["html_pruned"] = *v.html_pruned;
    if (v.caption) jv["caption"] = *v.caption;
    doc["visuals"].push_back(std::move(jv));
  }
  doc["ground_truth"] = json::object();
  for (const auto& [story_id, acs] : d.ground_truth_acs) {
    auto& arr = doc["ground_truth"][story_id] = json::array();
    for (const auto& ac : acs) arr.push_back(to_json(ac));
  }
  doc["objectives"] = json::object();
  for (const auto& [story_id, objs] : d.objectives) {
    auto& arr = doc["objectives"][story_id] = json::array();
    for (const auto& o : objs) arr.push_back({{"id", o.id}, {"text", o.text}, {"story_id", o.story_id}});
  }
  doc["relevance"] = json::object();
  for (const auto& [story_id, rel] : d.relevance) doc["relevance"][story_id] = rel;
  return doc;
}

void save_dataset(const Dataset& d, const fs::path& path) {
  validate(d);
  fs::path base = path.parent_path();
  for (const auto& v : d.visuals) {
    if (v.image_path.empty()) throw Error(ErrorCode::InvalidArgument, "visual '" + v.id + "' has no image path");
    fs::path target = base / v.image_path;
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    std::ofstream out(target, std::ios::binary);
    out.write(reinterpret_cast<const char*>(v.image.data()), static_cast<std::streamsize>(v.image.size()));
    if (!out) throw Error(ErrorCode::Io, "cannot write " + target.string());
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << dataset_to_json(d).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

std::string fingerprint(const Dataset& d) {
  json images = json::object();
  for (const auto& v : d.visuals) images[v.id] = util::sha256_hex(std::span<const std::uint8_t>(v.image));
  return util::canonical_hash({{"dataset", dataset_to_json(d)}, {"images", images}});
}

}  // namespace acgen::corpus
