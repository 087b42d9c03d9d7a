#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fruitlet {

enum class ErrorCode {
  invalid_argument,
  invalid_depth,
  out_of_bounds,
  behind_camera,
  parse,
  format,
  dimension,
  io,
  schema,
  value,
  duplicate_key,
  backend,
  empty_input,
  insufficient_data,
  rank_deficient,
  convention,
  insufficient_depth,
  missing_keypoint,
  degenerate_pose,
  undefined_ap,
  contract,
  config,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. `line()` is the 1-based line or row
/// number for parse/value errors and 0 otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::size_t line = 0);

  ErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::size_t line_;
};

}  // namespace fruitlet
