#pragma once

#include <stdexcept>
#include <string>

namespace codetool {

/// Root of every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CODETOOL_DEFINE_ERROR(Name)    \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  }

// core-model / toolbox
CODETOOL_DEFINE_ERROR(ValidationError);
CODETOOL_DEFINE_ERROR(ParseError);
CODETOOL_DEFINE_ERROR(DuplicatePath);

// llm-gateway
CODETOOL_DEFINE_ERROR(ProviderError);
CODETOOL_DEFINE_ERROR(TranscriptExhausted);
CODETOOL_DEFINE_ERROR(TranscriptMismatch);
CODETOOL_DEFINE_ERROR(UnknownTask);

// code-analysis
CODETOOL_DEFINE_ERROR(UnterminatedCall);

// pipeline / reflection
CODETOOL_DEFINE_ERROR(ScaffoldParseError);
CODETOOL_DEFINE_ERROR(NoSubtasksFound);
CODETOOL_DEFINE_ERROR(UnresolvableTools);
CODETOOL_DEFINE_ERROR(EmptyProgram);
CODETOOL_DEFINE_ERROR(TemplateError);

// function-repo
CODETOOL_DEFINE_ERROR(StorageError);
CODETOOL_DEFINE_ERROR(PreconditionError);

// mock-world
CODETOOL_DEFINE_ERROR(FixtureError);
CODETOOL_DEFINE_ERROR(BindError);

// eval-harness
CODETOOL_DEFINE_ERROR(EmptyGroundTruth);
CODETOOL_DEFINE_ERROR(SuiteError);

#undef CODETOOL_DEFINE_ERROR

enum class ScaffoldErrorKind {
  no_function,
  multiple_functions,
  missing_docstring,
  non_empty_body,
  missing_main_guard,
};

const char* to_string(ScaffoldErrorKind kind);

/// Raised by parse_scaffold; kind() tells which structural rule failed.
class ScaffoldError : public Error {
 public:
  ScaffoldError(ScaffoldErrorKind kind, const std::string& detail)
      : Error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ScaffoldErrorKind kind() const noexcept { return kind_; }

 private:
  ScaffoldErrorKind kind_;
};

}  // namespace codetool
