#include "cltlab/error.hpp"

#include <iostream>
#include <mutex>

namespace cltlab {

Error::Error(ErrorCategory category, std::string code,
             const std::string& message)
    : std::runtime_error(code + ": " + message),
      category_(category),
      code_(std::move(code)) {}

std::string to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::validation:
      return "validation";
    case ErrorCategory::budget:
      return "budget";
    case ErrorCategory::invariant:
      return "invariant";
  }
  return "invariant";
}

void throw_validation(const std::string& code, const std::string& message) {
  throw Error(ErrorCategory::validation, code, message);
}

void throw_budget(const std::string& code, const std::string& message) {
  throw Error(ErrorCategory::budget, code, message);
}

void throw_invariant(const std::string& code, const std::string& message) {
  throw Error(ErrorCategory::invariant, code, message);
}

namespace {

std::mutex g_sink_mutex;
WarningSink g_sink;

}  // namespace

void set_warning_sink(WarningSink sink) {
  std::lock_guard<std::mutex> lock(g_sink_mutex);
  g_sink = std::move(sink);
}

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(g_sink_mutex);
  if (g_sink) {
    g_sink(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

}  // namespace cltlab
