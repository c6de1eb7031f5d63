#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "acgen/corpus/types.hpp"

namespace acgen::corpus {

inline constexpr const char* kDatasetSchemaVersion = "1";

/// Loads the versioned dataset JSON. Image paths are resolved relative to
/// the dataset file and read eagerly. Collections keep file order.
///
/// Errors: SchemaError (with a JSON pointer in details["pointer"]),
/// DanglingReference, DuplicateId, ImageNotFound, Io.
Dataset load_dataset(const std::filesystem::path& path);

/// Builds a dataset from an already-parsed document; `base_dir` anchors the
/// relative image paths.
Dataset dataset_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Writes the JSON document to `path` and every image to its `image_path`
/// below the same directory.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
nlohmann::json dataset_to_json(const Dataset& dataset);

/// Checks every Dataset invariant; throws the matching Error on violation.
void validate(const Dataset& dataset);

/// Content hash over the JSON form and all image bytes.
std::string fingerprint(const Dataset& dataset);

nlohmann::json to_json(const AcceptanceCriterion& ac);
AcceptanceCriterion criterion_from_json(const nlohmann::json& j);

}  // namespace acgen::corpus
