#pragma once

#include <stdexcept>
#include <string>

namespace tautline {

// Parameter outside its admissible range (beta, delta, eps, gamma, lambda).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Responses outside the support of the chosen model.
class InvalidData : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A pooled derivative never reaches the requested level.
class CoercivityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The objective has no minimizer for these data (e.g. constant binary labels).
class NonCoerciveData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateRange : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedCertificate : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NonTermination : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SizeLimitExceeded : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace tautline
