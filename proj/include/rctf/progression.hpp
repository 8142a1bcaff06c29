#pragma once

// Player sessions, password-gated serial unlock, scoring and the
// leaderboard. All state is event-sourced: live mutations append to the
// event log and apply the same event that replay would.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rctf/event_log.hpp"
#include "rctf/registry.hpp"
#include "rctf/tokens.hpp"

namespace rctf::progression {

using ScenarioId = std::uint32_t;

inline constexpr std::size_t kMaxHandleLength = 32;

struct Session {
  std::string session_id;
  std::string handle;
  std::int64_t created_at = 0;
  std::set<ScenarioId> unlocked;
  std::map<ScenarioId, std::int64_t> solved;  // solve timestamp
  std::map<ScenarioId, std::uint32_t> wrong_submissions;
  std::map<ScenarioId, std::int64_t> unlocked_at;
  std::map<ScenarioId, std::int64_t> first_spawn;

  // Milliseconds from first spawn (or unlock, if never spawned) to solve.
  std::int64_t solve_duration_ms(ScenarioId id) const;

  bool operator==(const Session&) const = default;
};

enum class Verdict { correct, wrong, locked, already_solved };
std::string_view to_string(Verdict verdict);

struct SubmitResult {
  Verdict verdict = Verdict::wrong;
  std::optional<std::string> password;  // set iff correct
};

enum class RedeemVerdict { unlocked, already_unlocked, wrong };
std::string_view to_string(RedeemVerdict verdict);

struct LeaderboardRow {
  std::string handle;
  std::uint64_t score = 0;
  std::size_t solved_count = 0;
  std::int64_t total_time_ms = 0;
  std::size_t rank = 0;

  double total_time_seconds() const { return static_cast<double>(total_time_ms) / 1000.0; }
  bool operator==(const LeaderboardRow&) const = default;
};

// Accuracy policy: 100 per solve, minus 5 per wrong submission, floor 10.
std::uint64_t scenario_points(std::uint32_t wrong_submissions);
std::uint64_t compute_score(const Session& session);

struct ProgressionState {
  std::map<std::string, Session> sessions;  // by session id
  std::map<std::string, std::string> session_by_handle;

  // Applies one logged event. Throws Error(log_corrupt) on unknown kinds or
  // references to unknown sessions.
  void apply(const LogEvent& event);

  bool operator==(const ProgressionState&) const = default;
};

std::vector<LeaderboardRow> leaderboard(const ProgressionState& state);

ProgressionState replay_log(std::string_view text);
ProgressionState replay_events(const std::vector<LogEvent>& events);

class Store {
 public:
  Store(std::shared_ptr<const registry::Catalog> catalog, EventLog log,
        std::shared_ptr<Clock> clock = std::make_shared<SystemClock>(),
        std::shared_ptr<TokenSource> tokens = std::make_shared<RandomTokenSource>());

  Session create_session(const std::string& handle);
  SubmitResult submit_flag(const std::string& session_id, ScenarioId scenario_id, const std::string& flag,
                           std::optional<std::int64_t> at = std::nullopt);
  RedeemVerdict redeem_password(const std::string& session_id, ScenarioId scenario_id, const std::string& password);
  void record_spawn(const std::string& session_id, ScenarioId scenario_id);

  Session session(const std::string& session_id) const;  // throws Error(auth)
  bool has_session(const std::string& session_id) const;
  std::vector<LeaderboardRow> leaderboard() const;
  ProgressionState snapshot() const;
  std::string log_text() const;
  void flush();

  const registry::Catalog& catalog() const { return *catalog_; }
  Clock& clock() { return *clock_; }

 private:
  const Session& session_locked(const std::string& session_id) const;
  void emit(std::string kind, nlohmann::json body, std::int64_t ts);

  std::shared_ptr<const registry::Catalog> catalog_;
  std::shared_ptr<Clock> clock_;
  std::shared_ptr<TokenSource> tokens_;
  mutable std::mutex mu_;
  EventLog log_;
  ProgressionState state_;
};

}  // namespace rctf::progression
