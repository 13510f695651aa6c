#pragma once

#include <stdexcept>
#include <string>

namespace crossfit {

// Runtime failure with a stable machine-readable code. The CLI surfaces the
// code in its error report; library callers can branch on it.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

}  // namespace crossfit
