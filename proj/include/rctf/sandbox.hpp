#pragma once

// Scenario deployment units: immutable base images and copy-on-write
// instances spawned from them. The backend interface is the extension point
// for container or VM implementations; the in-process backend ships here.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "rctf/challenges.hpp"
#include "rctf/registry.hpp"
#include "rctf/tokens.hpp"

namespace rctf::sandbox {

using challenges::Event;
using registry::ScenarioManifest;

class BaseImage {
 public:
  BaseImage(ScenarioManifest manifest, std::uint64_t seed, std::shared_ptr<const challenges::ImageState> state);

  const ScenarioManifest& manifest() const { return manifest_; }
  std::uint64_t seed() const { return seed_; }
  const std::shared_ptr<const challenges::ImageState>& state() const { return state_; }

  crypto::Bytes serialize() const;
  std::string snapshot_hash() const;  // sha256 hex of serialize()

 private:
  ScenarioManifest manifest_;
  std::uint64_t seed_;
  std::shared_ptr<const challenges::ImageState> state_;
};

struct Endpoints {
  std::string terminal;
  std::string simulation;
};

enum class Status { running, torn_down };

class Instance {
 public:
  using TickObserver = std::function<void(std::uint64_t tick, const std::vector<Event>& events)>;

  Instance(std::string id, std::shared_ptr<const BaseImage> base, Endpoints endpoints);

  const std::string& id() const { return id_; }
  const BaseImage& base() const { return *base_; }
  const std::shared_ptr<const BaseImage>& base_ptr() const { return base_; }
  const Endpoints& endpoints() const { return endpoints_; }

  // All accessors below require the lock to be held by the caller.
  std::unique_lock<std::mutex> lock() { return std::unique_lock(mu_); }
  Status status() const { return status_; }
  std::uint64_t tick() const { return runtime_.tick(); }
  challenges::ScenarioRuntime& runtime() { return runtime_; }
  const challenges::ScenarioRuntime& runtime() const { return runtime_; }
  minibus::DomainBus& bus() { return runtime_.bus(); }

  // Advances the clock by n ticks, notifying the observer once per tick
  // (events queued between ticks ride along with the next one). Caller holds
  // the lock.
  std::vector<Event> advance(std::uint64_t n);

  void set_tick_observer(TickObserver observer) { observer_ = std::move(observer); }

  // Throws Error(torn_down) unless running.
  void require_running() const;

 private:
  friend class InProcessBackend;

  const std::string id_;
  const std::shared_ptr<const BaseImage> base_;
  const Endpoints endpoints_;
  std::mutex mu_;
  Status status_ = Status::running;
  challenges::ScenarioRuntime runtime_;
  TickObserver observer_;
};

class SandboxBackend {
 public:
  virtual ~SandboxBackend() = default;

  virtual std::shared_ptr<const BaseImage> build_base(const ScenarioManifest& manifest, std::uint64_t seed) = 0;
  virtual std::shared_ptr<Instance> spawn_instance(std::shared_ptr<const BaseImage> base) = 0;
  virtual std::vector<Event> tick(Instance& instance, std::uint64_t n) = 0;
  virtual void teardown(Instance& instance) = 0;

  // Endpoint resolution; throws Error(stale_endpoint) for unknown or dead tokens.
  virtual std::shared_ptr<Instance> by_terminal(const std::string& token) = 0;
  virtual std::shared_ptr<Instance> by_simulation(const std::string& token) = 0;

  virtual std::size_t live_instances() const = 0;
};

inline constexpr std::size_t kDefaultInstanceCap = 256;

class InProcessBackend final : public SandboxBackend {
 public:
  explicit InProcessBackend(std::size_t instance_cap = kDefaultInstanceCap,
                            std::shared_ptr<TokenSource> tokens = std::make_shared<RandomTokenSource>());

  std::shared_ptr<const BaseImage> build_base(const ScenarioManifest& manifest, std::uint64_t seed) override;
  std::shared_ptr<Instance> spawn_instance(std::shared_ptr<const BaseImage> base) override;
  std::vector<Event> tick(Instance& instance, std::uint64_t n) override;
  void teardown(Instance& instance) override;

  std::shared_ptr<Instance> by_terminal(const std::string& token) override;
  std::shared_ptr<Instance> by_simulation(const std::string& token) override;

  std::size_t live_instances() const override;
  std::vector<std::shared_ptr<Instance>> instances() const;

 private:
  const std::size_t cap_;
  std::shared_ptr<TokenSource> tokens_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Instance>> instances_;
  std::map<std::string, std::string> terminals_;    // token -> instance id
  std::map<std::string, std::string> simulations_;  // token -> instance id
};

}  // namespace rctf::sandbox
