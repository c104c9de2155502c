#pragma once

#include <stdexcept>
#include <string>

namespace readpath {

// Bad input, failed validation or an infeasible request. The CLI maps this to
// exit status 1.
class InputError : public std::runtime_error {
public:
  InputError(const std::string& module, const std::string& what)
      : std::runtime_error("[" + module + "] " + what), module_(module) {}

  const std::string& module() const noexcept { return module_; }

private:
  std::string module_;
};

// An internal invariant did not hold (exit status 2).
class InvariantError : public std::logic_error {
public:
  InvariantError(const std::string& module, const std::string& what)
      : std::logic_error("[" + module + "] invariant violated: " + what),
        module_(module) {}

  const std::string& module() const noexcept { return module_; }

private:
  std::string module_;
};

} // namespace readpath
