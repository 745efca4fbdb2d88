#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace codim2 {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of an operation (index, degree, coordinate).
struct DomainError : Error {
  using Error::Error;
};

struct InvalidMetric : Error {
  using Error::Error;
};

// A documented hypothesis of the checked statement does not hold.
struct PreconditionError : Error {
  using Error::Error;
};

struct GaugeError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct NotSpacelike : Error {
  NotSpacelike(std::size_t node_id, const std::string& what)
      : Error(what), node(node_id) {}
  std::size_t node;
};

struct NumericError : Error {
  NumericError(std::size_t node_id, const std::string& what)
      : Error(what), node(node_id) {}
  std::size_t node;
};

}  // namespace codim2
