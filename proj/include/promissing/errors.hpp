#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace promissing {

// Root of every error raised by the library. Callers that only care about
// "something in the pipeline failed" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PROMISSING_DEFINE_ERROR(Name)      \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

// data
PROMISSING_DEFINE_ERROR(SchemaError);
PROMISSING_DEFINE_ERROR(TargetMissingError);
PROMISSING_DEFINE_ERROR(UnknownCategoryError);
PROMISSING_DEFINE_ERROR(EmptyColumnError);
PROMISSING_DEFINE_ERROR(SplitError);
PROMISSING_DEFINE_ERROR(RebalanceError);
PROMISSING_DEFINE_ERROR(MissingCellError);
PROMISSING_DEFINE_ERROR(IoError);

// corrupt
PROMISSING_DEFINE_ERROR(TooFewRowsError);
PROMISSING_DEFINE_ERROR(SpecError);
PROMISSING_DEFINE_ERROR(RankError);
PROMISSING_DEFINE_ERROR(AugmentError);

// impute
PROMISSING_DEFINE_ERROR(FitError);
PROMISSING_DEFINE_ERROR(ImputeError);

// nn
PROMISSING_DEFINE_ERROR(ShapeError);
PROMISSING_DEFINE_ERROR(StateError);
PROMISSING_DEFINE_ERROR(MissingNotAllowedError);

// metrics
PROMISSING_DEFINE_ERROR(MetricError);

// harness
PROMISSING_DEFINE_ERROR(ConfigError);

#undef PROMISSING_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::size_t col, const std::string& what)
      : Error("parse error at row " + std::to_string(row) + ", column " +
              std::to_string(col) + ": " + what),
        row_(row),
        col_(col) {}

  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, const std::string& what)
      : Error("diverged at epoch " + std::to_string(epoch) + ": " + what),
        epoch_(epoch) {}

  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace promissing
