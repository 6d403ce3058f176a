#pragma once

#include <stdexcept>
#include <string>

namespace dtr {

enum class Errc {
  missing_assignment,
  cyclic_network,
  unknown_variable,
  unknown_action,
  correlated_action,
  ordering_violation,
  scope_error,
  state_space_too_large,
  syntax_error,
  validation_error,
  invalid_argument,
  internal,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace dtr
