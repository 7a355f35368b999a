#pragma once

#include <stdexcept>
#include <string>

namespace ateaudit {

// Machine-readable failure codes. The CLI prints these on the diagnostics
// stream; library callers can switch on code() instead of parsing messages.
enum class Err {
  MissingColumn,
  RaggedRow,
  UnparseableValue,
  UnknownAttribute,
  AlreadyDeleted,
  BadQuery,
  RankDeficient,
  RankLost,
  DegenerateGroups,
  SingularCapacitance,
  NormTooLarge,
  Separation,
  SingularFisher,
  EmptyGroup,
  NoEligibleAttributes,
  TooLarge,
  BadConfig,
  IoError,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& what)
      : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}
  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) { throw Error(code, what); }

}  // namespace ateaudit
