#pragma once

#include <json.hpp>

#include <string>

#include "cis/dp.hpp"
#include "cis/errors.hpp"
#include "cis/model.hpp"
#include "cis/oracle.hpp"
#include "cis/sim.hpp"

namespace cis {

using Json = nlohmann::json;

// Malformed JSON text. Line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column) : Error(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

Json parse_json(const std::string& text);
Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Problem files. Shape errors raise InvalidParameter naming the offending
// field; value errors (row sums, witness violations) are left to
// validate_problem.
ProblemSpec problem_from_json(const Json& doc);
ProblemSpec load_problem(const std::string& path);
// Writes the protocol as explicit tables unless `protocol` is given, in
// which case it is emitted verbatim (e.g. a preset description).
Json problem_to_json(const ProblemSpec& spec, const Json& protocol = nullptr);
// 64-bit FNV-1a of the canonical problem encoding, as 16 hex digits.
std::string problem_digest(const ProblemSpec& spec);

Json to_json(const ValueReport& report);
Json to_json(const ControlStrategy& g);
Json to_json(const EnumerationReport& report);
Json to_json(const SimReport& report);
Json to_json(const PairedReport& report);
Json to_json(const Trajectory& trajectory, std::uint64_t episode);

Json policy_to_json(const ProblemSpec& spec, const FiniteSolution& solution);
Json policy_to_json(const ProblemSpec& spec, const DiscountedSolution& solution);
PolicyTree tree_from_json(const Json& doc);
StationaryPolicy stationary_from_json(const Json& doc);
ControlStrategy strategy_from_json(const Json& doc);

}  // namespace cis
