#pragma once

#include <stdexcept>
#include <string>

namespace chainscore {

// Fail-fast error taxonomy. The CLI maps VersionMismatch/ArtifactMismatch to
// exit code 3 and every other Error to exit code 2.
enum class Errc {
  // registry / values
  DuplicateName,
  InvalidKind,
  UnknownMetric,
  OutOfRange,
  UnknownLabel,
  NonFinite,
  KindMismatch,
  // tokenizer
  InvalidRange,
  TooFewBins,
  DegenerateSample,
  EmptyInput,
  TokenOutOfBlock,
  ArtifactMismatch,
  // chains
  EmptyLabels,
  UnknownMetricInPolicy,
  DuplicatePolicyMetric,
  StaticOrderIncomplete,
  Malformed,
  MalformedPrefix,
  MalformedSequence,
  // model
  EmptyDataset,
  DimensionMismatch,
  VersionMismatch,
  CorruptArtifact,
  BadSmoothing,
  // decoder
  MetricAlreadyDecided,
  EmptyQuery,
  BadBeamWidth,
  MissingGroundTruth,
  // synthetic / eval / io
  InvalidConfig,
  BadRatios,
  EmptySeries,
  LengthMismatch,
  NothingToAggregate,
  ParseError,
  IoError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace chainscore
