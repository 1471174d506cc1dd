#pragma once

#include <stdexcept>
#include <string>

namespace isac {

/// Invalid or inconsistent configuration (bad sizes, unsupported QAM order, ...).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Operand shapes do not match.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Argument outside the validity region of a physical model.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// A randomized generator could not satisfy its post-conditions.
class GenerationError : public std::runtime_error {
 public:
  explicit GenerationError(const std::string& what) : std::runtime_error(what) {}
};

/// The beamforming solver detected an internal inconsistency, e.g. an
/// unsolvable stationarity system in the w-update.
class SolverConsistencyError : public std::runtime_error {
 public:
  explicit SolverConsistencyError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed tensor container or structured-text file.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace isac
