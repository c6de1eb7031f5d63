#pragma once

#include <memory>

#include "acgen/corpus/types.hpp"
#include "acgen/providers/mock.hpp"

namespace acgen::pipeline {

/// Deterministic chat responders that let the whole pipeline run without a
/// model. They read the request metadata (story id, retrieved ids, criteria)
/// and answer in the format each stage expects:
///   generate        criteria built from the story, its details and the retrieved context
///   polish          the weakest criterion with a sharpened outcome
///   global_score    a level derived from the number and length of criteria
///   judge_coverage  token overlap between the objective and the criteria
///   compare         the set sharing more tokens with the story wins
void install_offline_responders(providers::MockBackend& backend, std::shared_ptr<const corpus::Dataset> dataset);

}  // namespace acgen::pipeline
