#pragma once

// Player-facing mini shell bound to one instance's terminal endpoint.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rctf/sandbox.hpp"

namespace rctf::shell {

// Upper bound on simulated ticks a blocking read (`echo-topic`, `sniff`)
// may advance the instance clock while waiting.
inline constexpr std::uint64_t kWaitBudgetTicks = 600;

class ShellContext {
 public:
  explicit ShellContext(std::shared_ptr<sandbox::Instance> instance);

  // Locks the instance for the duration of the command. Every failure is
  // rendered as output except a torn-down instance (Error(stale_endpoint)).
  std::string exec(std::string_view line);

  const std::string& cwd() const { return cwd_; }
  const std::vector<std::string>& history() const { return history_; }
  bool authenticated() const { return authenticated_; }
  const sandbox::Instance& instance() const { return *instance_; }

  // Commands meaningful for this instance's kind and network profile.
  std::vector<std::string> available_commands() const;

 private:
  std::string dispatch(const std::string& cmd, const std::vector<std::string>& args, std::string_view rest);

  minibus::NodeId node();
  std::string cmd_topics();
  std::string cmd_echo_topic(const std::vector<std::string>& args);
  std::string cmd_pub(const std::vector<std::string>& args, std::string_view rest);
  std::string cmd_sniff(const std::vector<std::string>& args);
  std::string cmd_ls(const std::vector<std::string>& args);
  std::string cmd_cat(const std::vector<std::string>& args);
  std::string cmd_strings(const std::vector<std::string>& args);
  std::string cmd_patch(const std::vector<std::string>& args);
  std::string cmd_run(const std::vector<std::string>& args, std::string_view rest);
  std::string cmd_vuln(std::string_view rest);
  std::string cmd_auth(const std::vector<std::string>& args);
  std::string cmd_world();
  std::string cmd_drive(const std::vector<std::string>& args);

  std::shared_ptr<sandbox::Instance> instance_;
  std::string cwd_ = "/";
  std::vector<std::string> history_;
  bool authenticated_ = false;
  std::optional<minibus::NodeId> node_;
  std::map<std::string, minibus::SubscriberHandle> subscriptions_;
  std::map<std::string, minibus::PublisherHandle> publishers_;
  std::optional<minibus::SnifferHandle> sniffer_;
};

inline std::string shell_exec(ShellContext& ctx, std::string_view line) { return ctx.exec(line); }

}  // namespace rctf::shell
