#include "acgen/util/files.hpp"

#include <fstream>
#include <sstream>

#include "acgen/error.hpp"

namespace acgen::util {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string(), {{"path", path.string()}});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string(), {{"path", tmp.string()}});
  }
  fs::rename(tmp, path);
}

nlohmann::json read_json(const fs::path& path) {
  std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what(), {{"path", path.string()}});
  }
}

void write_json(const fs::path& path, const nlohmann::json& value, int indent) {
  write_text(path, value.dump(indent) + "\n");
}

}  // namespace acgen::util
