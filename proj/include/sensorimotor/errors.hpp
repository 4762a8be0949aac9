#pragma once

#include <stdexcept>
#include <string>

namespace sensorimotor {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values, non-positive gains and similar bad arguments.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Shape or dimension mismatch between operands.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A Gram matrix could not be inverted without damping. The message names the
/// servo branch (right, left or square) that failed.
class SingularityError : public Error {
 public:
  SingularityError(std::string branch, const std::string& what)
      : Error(what), branch_(std::move(branch)) {}
  const std::string& branch() const { return branch_; }

 private:
  std::string branch_;
};

/// Gradient descent diverged; the learning gain is too large.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

class OutOfWorkspace : public Error {
 public:
  using Error::Error;
};

class UntrainedRegion : public Error {
 public:
  using Error::Error;
};

class UnsupportedStructure : public Error {
 public:
  using Error::Error;
};

class FileError : public Error {
 public:
  FileError(std::string path, const std::string& what)
      : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace sensorimotor
