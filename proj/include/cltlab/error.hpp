#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace cltlab {

// Errors are grouped so that front ends can map them onto exit statuses.
enum class ErrorCategory {
  validation,  // bad input: kernel, model, config, unreachable pair, ...
  budget,      // an exact-mode or iteration budget was exceeded
  invariant,   // an internal identity failed; indicates a bug or corruption
};

std::string to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string code, const std::string& message);

  ErrorCategory category() const noexcept { return category_; }
  // Short machine-readable tag such as "RowSumDeviation".
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorCategory category_;
  std::string code_;
};

[[noreturn]] void throw_validation(const std::string& code,
                                   const std::string& message);
[[noreturn]] void throw_budget(const std::string& code,
                               const std::string& message);
[[noreturn]] void throw_invariant(const std::string& code,
                                  const std::string& message);

// Non-fatal diagnostics go through here so tests can silence or capture them.
// An empty sink restores the default, which writes to stderr.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace cltlab
