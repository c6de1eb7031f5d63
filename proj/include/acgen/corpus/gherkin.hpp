#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "acgen/corpus/types.hpp"

namespace acgen::corpus {

/// Parses GIVEN/WHEN/THEN text into acceptance criteria.
///
/// Keywords are case-insensitive. A keyword is *strong* when it starts a line
/// (after bullets, numbering or markdown emphasis) or is written in all caps;
/// otherwise it is *weak*. Strong keywords always act. A weak `when` only
/// opens the WHEN section after GIVEN clauses and a weak `then` only opens the
/// THEN section after WHEN clauses; weak `given`, `and` and `but` are plain
/// text. AND/BUT append a clause to the current section. A new GIVEN starts a
/// new criterion; a WHEN after THEN starts a new criterion that reuses the
/// previous GIVEN clauses. Text before the first GIVEN and heading lines such
/// as "Scenario: ..." are ignored.
///
/// Throws Error(EmptyInput) for blank text and Error(MissingKeyword) when no
/// criterion is found or a criterion lacks a WHEN or THEN section.
std::vector<AcceptanceCriterion> parse_gherkin(std::string_view text);

/// Canonical text form: one keyword per line, AND for continuation clauses.
std::string render(const AcceptanceCriterion& ac);
/// Criteria separated by blank lines.
std::string render(const std::vector<AcceptanceCriterion>& acs);

/// Splits a criterion into one criterion per THEN clause, each repeating the
/// GIVEN and WHEN clauses. Single-THEN input is returned unchanged.
std::vector<AcceptanceCriterion> atomicize(const AcceptanceCriterion& ac);
std::vector<AcceptanceCriterion> atomicize_all(const std::vector<AcceptanceCriterion>& acs);

}  // namespace acgen::corpus
