#pragma once

#include <stdexcept>
#include <string>

namespace synthelite {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define SYNTHELITE_DECLARE_ERROR(Name)        \
    class Name : public Error {               \
    public:                                   \
        using Error::Error;                   \
    }

// chemistry
SYNTHELITE_DECLARE_ERROR(ParseError);
SYNTHELITE_DECLARE_ERROR(TemplateError);
SYNTHELITE_DECLARE_ERROR(PatternError);

// template index
SYNTHELITE_DECLARE_ERROR(EmptyTextError);
SYNTHELITE_DECLARE_ERROR(EmptyIndexError);
SYNTHELITE_DECLARE_ERROR(DimensionMismatchError);

// llm gateway
SYNTHELITE_DECLARE_ERROR(TagMissingError);
SYNTHELITE_DECLARE_ERROR(FormatError);
SYNTHELITE_DECLARE_ERROR(PlanParseError);
SYNTHELITE_DECLARE_ERROR(BackendError);

// routes and evaluation
SYNTHELITE_DECLARE_ERROR(SchemaError);
SYNTHELITE_DECLARE_ERROR(EmptyBenchmarkError);
SYNTHELITE_DECLARE_ERROR(ScoreParseError);

// service
SYNTHELITE_DECLARE_ERROR(ValidationError);
SYNTHELITE_DECLARE_ERROR(WrongStateError);
SYNTHELITE_DECLARE_ERROR(NotFoundError);
SYNTHELITE_DECLARE_ERROR(CapacityError);

#undef SYNTHELITE_DECLARE_ERROR

/// Raised by PromptTemplate rendering; carries the missing placeholder name.
class MissingVarError : public Error {
public:
    explicit MissingVarError(std::string var)
        : Error("missing prompt variable: " + var), var_(std::move(var)) {}

    const std::string& var() const noexcept { return var_; }

private:
    std::string var_;
};

} // namespace synthelite
