#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace espn {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or layer dimensions disagree. `layer()` names where it happened.
class ShapeError : public Error {
 public:
  ShapeError(std::string layer, const std::string& what)
      : Error(layer + ": " + what), layer_(std::move(layer)) {}
  const std::string& layer() const noexcept { return layer_; }

 private:
  std::string layer_;
};

class ParamSizeError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// Raw images that could not be decoded.
class IngestionError : public Error {
 public:
  explicit IngestionError(std::vector<std::string> paths);
  const std::vector<std::string>& paths() const noexcept { return paths_; }

 private:
  std::vector<std::string> paths_;
};

class DatasetIntegrityError : public Error {
 public:
  using Error::Error;
};

// Episode asks for more images per class than the class holds.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class MissingClassError : public Error {
 public:
  using Error::Error;
};

// Cosine similarity against a zero vector.
class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

// A finite-difference probe or update produced NaN/Inf.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class UpdateError : public Error {
 public:
  using Error::Error;
};

class ThresholdError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A worker failed while evaluating `candidate`; nothing from the step is kept.
class StepAborted : public Error {
 public:
  StepAborted(std::size_t candidate, const std::string& cause)
      : Error("step aborted at candidate " + std::to_string(candidate) + ": " +
              cause),
        candidate_(candidate) {}
  std::size_t candidate() const noexcept { return candidate_; }

 private:
  std::size_t candidate_;
};

}  // namespace espn
