#include "rctf/sandbox.hpp"

#include "rctf/error.hpp"

namespace rctf::sandbox {

BaseImage::BaseImage(ScenarioManifest manifest, std::uint64_t seed,
                     std::shared_ptr<const challenges::ImageState> state)
    : manifest_(std::move(manifest)), seed_(seed), state_(std::move(state)) {}

crypto::Bytes BaseImage::serialize() const {
  crypto::Bytes out;
  crypto::put_str(out, registry::serialize_manifest(manifest_));
  crypto::put_u64(out, seed_);
  auto state = challenges::serialize(*state_);
  out.insert(out.end(), state.begin(), state.end());
  return out;
}

std::string BaseImage::snapshot_hash() const { return crypto::to_hex(crypto::sha256(serialize())); }

Instance::Instance(std::string id, std::shared_ptr<const BaseImage> base, Endpoints endpoints)
    : id_(std::move(id)), base_(std::move(base)), endpoints_(std::move(endpoints)), runtime_(base_->state()) {}

void Instance::require_running() const {
  if (status_ != Status::running) throw Error(ErrorCode::torn_down, "instance " + id_ + " has been torn down");
}

std::vector<Event> Instance::advance(std::uint64_t n) {
  require_running();
  std::vector<Event> events = runtime_.take_pending();
  std::size_t reported = 0;
  auto report = [&] {
    if (!observer_) return;
    std::vector<Event> batch(events.begin() + static_cast<std::ptrdiff_t>(reported), events.end());
    reported = events.size();
    observer_(runtime_.tick(), batch);
  };
  if (n == 0 && !events.empty()) report();
  for (std::uint64_t i = 0; i < n; ++i) {
    runtime_.step(events);
    report();
  }
  return events;
}

InProcessBackend::InProcessBackend(std::size_t instance_cap, std::shared_ptr<TokenSource> tokens)
    : cap_(instance_cap), tokens_(std::move(tokens)) {}

std::shared_ptr<const BaseImage> InProcessBackend::build_base(const ScenarioManifest& manifest, std::uint64_t seed) {
  auto violations = registry::validate_manifest(manifest);
  if (!violations.empty())
    throw Error(ErrorCode::invalid_manifest, violations.front().field + ": " + violations.front().message);
  auto state = std::make_shared<challenges::ImageState>();
  challenges::install(*state, manifest, seed);
  return std::make_shared<const BaseImage>(manifest, seed, std::move(state));
}

std::shared_ptr<Instance> InProcessBackend::spawn_instance(std::shared_ptr<const BaseImage> base) {
  std::lock_guard lock(mu_);
  if (instances_.size() >= cap_)
    throw Error(ErrorCode::resource_limit, "instance cap of " + std::to_string(cap_) + " reached");
  Endpoints endpoints{tokens_->next(), tokens_->next()};
  auto instance = std::make_shared<Instance>(tokens_->next(), std::move(base), endpoints);
  instances_.emplace(instance->id(), instance);
  terminals_.emplace(endpoints.terminal, instance->id());
  simulations_.emplace(endpoints.simulation, instance->id());
  return instance;
}

std::vector<Event> InProcessBackend::tick(Instance& instance, std::uint64_t n) {
  auto lock = instance.lock();
  return instance.advance(n);
}

void InProcessBackend::teardown(Instance& instance) {
  {
    auto lock = instance.lock();
    if (instance.status_ == Status::torn_down)
      throw Error(ErrorCode::torn_down, "instance " + instance.id() + " already torn down");
    instance.status_ = Status::torn_down;
    instance.observer_ = nullptr;
    instance.runtime_.close();
  }
  std::lock_guard lock(mu_);
  terminals_.erase(instance.endpoints().terminal);
  simulations_.erase(instance.endpoints().simulation);
  instances_.erase(instance.id());
}

std::shared_ptr<Instance> InProcessBackend::by_terminal(const std::string& token) {
  std::lock_guard lock(mu_);
  auto it = terminals_.find(token);
  if (it == terminals_.end()) throw Error(ErrorCode::stale_endpoint, "stale terminal endpoint");
  return instances_.at(it->second);
}

std::shared_ptr<Instance> InProcessBackend::by_simulation(const std::string& token) {
  std::lock_guard lock(mu_);
  auto it = simulations_.find(token);
  if (it == simulations_.end()) throw Error(ErrorCode::stale_endpoint, "stale simulation endpoint");
  return instances_.at(it->second);
}

std::size_t InProcessBackend::live_instances() const {
  std::lock_guard lock(mu_);
  return instances_.size();
}

std::vector<std::shared_ptr<Instance>> InProcessBackend::instances() const {
  std::lock_guard lock(mu_);
  std::vector<std::shared_ptr<Instance>> out;
  for (const auto& [id, inst] : instances_) out.push_back(inst);
  return out;
}

}  // namespace rctf::sandbox
