#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rctf {

// Stable codes; the gateway exposes them verbatim as `error.code`.
enum class ErrorCode {
  syntax,
  unknown_kind,
  unknown_profile,
  invalid_manifest,
  empty_catalog,
  catalog_ids,
  configuration,
  invalid_name,
  duplicate_name,
  invalid_topic,
  stale_handle,
  permission_denied,
  profile_forbidden,
  bad_magic,
  truncated,
  version_mismatch,
  tag_mismatch,
  security_disabled,
  install_failure,
  resource_limit,
  torn_down,
  stale_endpoint,
  unsupported,
  invalid_argument,
  read_only,
  out_of_range,
  not_found,
  vm_invalid_opcode,
  vm_stack_underflow,
  vm_bad_jump,
  vm_budget_exceeded,
  unknown_scenario,
  duplicate_handle,
  invalid_handle,
  wrong_password,
  out_of_order,
  log_corrupt,
  io,
  auth,
  rate_limited,
  locked,
  unknown_op,
  bad_request,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rctf
