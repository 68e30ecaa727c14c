#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace liftcg {

enum class ErrorCode {
  CycleDetected,
  ArityViolation,
  DanglingEdge,
  DimensionMismatch,
  WeightIndexOutOfRange,
  MalformedInput,
  EmptySample,
  UnknownEdgeType,
  EmptyKB,
  UnknownNode,
  ParseError,
  DimMismatch,
  TooFewSamples,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this exception. `where` carries a
// location when one is meaningful (node id, byte offset, line number, JSON path).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string where = {})
      : std::runtime_error(format(code, message, where)), code_(code), where_(std::move(where)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& where() const noexcept { return where_; }

 private:
  static std::string format(ErrorCode code, const std::string& message, const std::string& where) {
    std::string out(to_string(code));
    out += ": ";
    out += message;
    if (!where.empty()) {
      out += " (at ";
      out += where;
      out += ")";
    }
    return out;
  }

  ErrorCode code_;
  std::string where_;
};

}  // namespace liftcg
