#pragma once

// Independent references the library is checked against. Nothing here calls
// into the code under test except for type definitions.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "fedspace/odrl/policy.hpp"

namespace fedspace::testkit {

/// One row of a hand-derived transition table; `result` is a state name or "ILLEGAL".
struct OracleRow {
  std::vector<std::string> key;
  std::string result;
};

/// Reads a tab-separated table, skipping `#` comments and blank lines.
std::vector<OracleRow> load_table(const std::filesystem::path& file);

struct Diff {
  std::string cell;
  std::string expected;
  std::string actual;
};

/// Every (state|none) x signal x sender cell against the negotiation oracle.
/// Cells missing from the fixture count as diffs too.
std::vector<Diff> diff_negotiation_table(const std::filesystem::path& fixture, std::size_t* cells = nullptr);
/// Every (state|none) x command cell against the transfer oracle.
std::vector<Diff> diff_transfer_table(const std::filesystem::path& fixture, std::size_t* cells = nullptr);

/// Brute-force reference evaluator. Walks every rule and every constraint,
/// collects flags, then decides: no rule with the action -> NotApplicable; a
/// fully satisfied prohibition -> Deny; a fully satisfied permission -> Permit;
/// otherwise Deny. Timestamps compare as fixed-width text, so callers must use
/// the canonical `YYYY-MM-DDTHH:MM:SS.mmmZ` form.
odrl::Decision naive_evaluate(const odrl::Policy& policy, const odrl::RequestContext& ctx);

std::filesystem::path test_fixture(const std::string& name);
std::filesystem::path repo_fixture(const std::string& name);

}  // namespace fedspace::testkit
