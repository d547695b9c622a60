// Error taxonomy shared by all drivemine modules. Every throw site uses one
// of the named types below; the category maps to a CLI exit code
// (usage = 1, data = 2, numeric = 3).
#pragma once

#include <stdexcept>
#include <string>

namespace drivemine {

enum class ErrorCategory { usage, data, numeric };

class Error : public std::runtime_error {
public:
  Error(std::string kind, ErrorCategory category, const std::string& message)
      : std::runtime_error(kind + ": " + message),
        kind_(std::move(kind)),
        category_(category) {}

  const std::string& kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return category_; }

private:
  std::string kind_;
  ErrorCategory category_;
};

#define DRIVEMINE_DEFINE_ERROR(Name, Category)                       \
  class Name : public Error {                                        \
  public:                                                            \
    explicit Name(const std::string& message)                        \
        : Error(#Name, ErrorCategory::Category, message) {}          \
  };

// ingest
DRIVEMINE_DEFINE_ERROR(FileNotFound, data)
DRIVEMINE_DEFINE_ERROR(MalformedRow, data)
DRIVEMINE_DEFINE_ERROR(EmptyChannel, data)
DRIVEMINE_DEFINE_ERROR(DegenerateVariance, numeric)
DRIVEMINE_DEFINE_ERROR(NonUniformTimeline, data)
DRIVEMINE_DEFINE_ERROR(UnknownChannel, data)

// bcp
DRIVEMINE_DEFINE_ERROR(InsufficientData, data)
DRIVEMINE_DEFINE_ERROR(DegenerateData, numeric)

// gaze
DRIVEMINE_DEFINE_ERROR(EmptyInput, data)

// quantize
DRIVEMINE_DEFINE_ERROR(TooFewSamples, data)
DRIVEMINE_DEFINE_ERROR(SingularComponent, numeric)
DRIVEMINE_DEFINE_ERROR(DimensionMismatch, data)

// topics / synth
DRIVEMINE_DEFINE_ERROR(EmptyCorpus, data)
DRIVEMINE_DEFINE_ERROR(WordOutOfRange, data)
DRIVEMINE_DEFINE_ERROR(MalformedDistribution, data)

// stats
DRIVEMINE_DEFINE_ERROR(EmptySample, data)
DRIVEMINE_DEFINE_ERROR(ZeroTotal, data)
DRIVEMINE_DEFINE_ERROR(TooFewGroups, data)

// pipeline
DRIVEMINE_DEFINE_ERROR(TooShort, data)

// cli / config
DRIVEMINE_DEFINE_ERROR(ConfigError, usage)

#undef DRIVEMINE_DEFINE_ERROR

}  // namespace drivemine
