#include "rctf/minibus.hpp"

#include <algorithm>
#include <regex>

#include "rctf/error.hpp"

namespace rctf::minibus {

bool valid_topic_name(std::string_view topic) {
  static const std::regex grammar{"/[A-Za-z0-9_/]+"};
  return std::regex_match(topic.begin(), topic.end(), grammar);
}

namespace {

void check_topic(const std::string& topic) {
  if (!valid_topic_name(topic))
    throw Error(ErrorCode::invalid_topic, "invalid topic name '" + topic + "' (expected /[A-Za-z0-9_/]+)");
}

template <typename Map>
auto& handle_or_throw(Map& map, std::uint64_t id, const char* what) {
  auto it = map.find(id);
  if (it == map.end()) throw Error(ErrorCode::stale_handle, std::string("stale ") + what + " handle");
  return it->second;
}

template <typename T>
void push_bounded(std::deque<T>& queue, T value, std::uint64_t* dropped = nullptr) {
  if (queue.size() >= kQueueCapacity) {
    queue.pop_front();
    if (dropped) ++*dropped;
  }
  queue.push_back(std::move(value));
}

}  // namespace

DomainBus::DomainBus(std::uint32_t domain_id, SecurityConfig security, NetworkProfile profile)
    : domain_id_(domain_id), security_(std::move(security)), profile_(profile) {
  security_.check();
}

void DomainBus::check_open() const {
  if (closed_) throw Error(ErrorCode::stale_handle, "bus is closed");
}

const DomainBus::Node& DomainBus::node_or_throw(NodeId node) const {
  auto it = nodes_.find(node);
  if (it == nodes_.end()) throw Error(ErrorCode::stale_handle, "unknown node " + std::to_string(node));
  return it->second;
}

DomainBus::Topic& DomainBus::ensure_topic(const std::string& topic) {
  check_topic(topic);
  return topics_[topic];
}

void DomainBus::check_access(const Node& node, const Topic& topic, const std::string& name) const {
  if (node.trust != NodeTrust::guest) return;
  if (security_.enabled)
    throw Error(ErrorCode::permission_denied,
                "node '" + node.name + "' is not enrolled in secure domain " + std::to_string(domain_id_));
  if (topic.options.restricted)
    throw Error(ErrorCode::permission_denied, "access to " + name + " denied for node '" + node.name + "'");
}

NodeId DomainBus::register_node(const std::string& name, NodeTrust trust) {
  std::lock_guard lock(mu_);
  check_open();
  if (name.empty()) throw Error(ErrorCode::invalid_name, "node name must not be empty");
  for (const auto& [id, n] : nodes_)
    if (n.name == name) throw Error(ErrorCode::duplicate_name, "node '" + name + "' already registered");
  NodeId id = next_node_++;
  nodes_.emplace(id, Node{name, trust});
  return id;
}

void DomainBus::remove_node(NodeId node) {
  std::lock_guard lock(mu_);
  check_open();
  node_or_throw(node);
  std::erase_if(publishers_, [&](const auto& kv) { return kv.second.node == node; });
  std::erase_if(subscribers_, [&](const auto& kv) { return kv.second.node == node; });
  for (auto& [name, t] : topics_) {
    std::erase(t.publishers, node);
    std::erase(t.subscribers, node);
  }
  nodes_.erase(node);
}

std::optional<NodeId> DomainBus::find_node(std::string_view name) const {
  std::lock_guard lock(mu_);
  for (const auto& [id, n] : nodes_)
    if (n.name == name) return id;
  return std::nullopt;
}

void DomainBus::declare_topic(const std::string& topic, TopicOptions options) {
  std::lock_guard lock(mu_);
  check_open();
  ensure_topic(topic).options = options;
}

PublisherHandle DomainBus::advertise(NodeId node, const std::string& topic) {
  std::lock_guard lock(mu_);
  check_open();
  const Node& n = node_or_throw(node);
  check_topic(topic);
  auto existing = topics_.find(topic);
  if (existing != topics_.end()) check_access(n, existing->second, topic);
  else check_access(n, Topic{}, topic);

  for (const auto& [id, p] : publishers_)
    if (p.node == node && p.topic == topic) return PublisherHandle{id};
  Topic& t = ensure_topic(topic);
  t.publishers.push_back(node);
  auto id = next_handle_++;
  publishers_.emplace(id, Publisher{node, topic});
  return PublisherHandle{id};
}

SubscriberHandle DomainBus::subscribe(NodeId node, const std::string& topic) {
  std::lock_guard lock(mu_);
  check_open();
  const Node& n = node_or_throw(node);
  check_topic(topic);
  auto existing = topics_.find(topic);
  if (existing != topics_.end()) check_access(n, existing->second, topic);
  else check_access(n, Topic{}, topic);

  Topic& t = ensure_topic(topic);
  if (std::find(t.subscribers.begin(), t.subscribers.end(), node) == t.subscribers.end())
    t.subscribers.push_back(node);
  auto id = next_handle_++;
  Subscriber sub{node, topic, {}, 0};
  if (t.options.latched && t.last) sub.queue.push_back(*t.last);
  subscribers_.emplace(id, std::move(sub));
  return SubscriberHandle{id};
}

void DomainBus::unsubscribe(SubscriberHandle handle) {
  std::lock_guard lock(mu_);
  check_open();
  auto& sub = handle_or_throw(subscribers_, handle.id, "subscriber");
  NodeId node = sub.node;
  std::string topic = sub.topic;
  subscribers_.erase(handle.id);
  bool still = std::any_of(subscribers_.begin(), subscribers_.end(),
                           [&](const auto& kv) { return kv.second.node == node && kv.second.topic == topic; });
  if (!still) std::erase(topics_[topic].subscribers, node);
}

bool DomainBus::sniffer_sees(const Sniffer& sniffer, const std::string& topic) const {
  if (sniffer.topic && *sniffer.topic != topic) return false;
  switch (profile_) {
    case NetworkProfile::flat: return true;
    case NetworkProfile::segmented: {
      auto it = topics_.find(topic);
      return it != topics_.end() && it->second.options.sniffable;
    }
    case NetworkProfile::airgap: return false;
  }
  return false;
}

std::uint64_t DomainBus::publish(PublisherHandle handle, std::span<const std::uint8_t> payload) {
  std::lock_guard lock(mu_);
  check_open();
  auto& pub = handle_or_throw(publishers_, handle.id, "publisher");
  Frame plain{pub.topic, ++pub.seq, Bytes(payload.begin(), payload.end()), std::nullopt};
  Frame wire = security_.enabled ? seal_frame(security_, domain_id_, plain) : plain;
  Bytes bytes = encode_frame(wire);

  for (auto& [id, sniffer] : sniffers_)
    if (sniffer_sees(sniffer, pub.topic)) push_bounded(sniffer.queue, bytes);
  if (observer_) observer_(wire);

  // Receivers reconstruct the frame from link bytes.
  Frame received = decode_frame(bytes);
  if (received.sealed()) received = open_frame(security_, domain_id_, received);
  Message msg{received.seq, std::move(received.payload), pub.node};
  for (auto& [id, sub] : subscribers_)
    if (sub.topic == pub.topic) push_bounded(sub.queue, msg, &sub.dropped);

  Topic& t = topics_[pub.topic];
  if (t.options.latched) t.last = std::move(msg);
  return plain.seq;
}

std::vector<Message> DomainBus::poll(SubscriberHandle handle, std::size_t max) {
  std::lock_guard lock(mu_);
  check_open();
  auto& sub = handle_or_throw(subscribers_, handle.id, "subscriber");
  std::vector<Message> out;
  while (out.size() < max && !sub.queue.empty()) {
    out.push_back(std::move(sub.queue.front()));
    sub.queue.pop_front();
  }
  return out;
}

std::uint64_t DomainBus::dropped(SubscriberHandle handle) const {
  std::lock_guard lock(mu_);
  check_open();
  auto it = subscribers_.find(handle.id);
  if (it == subscribers_.end()) throw Error(ErrorCode::stale_handle, "stale subscriber handle");
  return it->second.dropped;
}

std::string DomainBus::topic_of(SubscriberHandle handle) const {
  std::lock_guard lock(mu_);
  check_open();
  auto it = subscribers_.find(handle.id);
  if (it == subscribers_.end()) throw Error(ErrorCode::stale_handle, "stale subscriber handle");
  return it->second.topic;
}

std::vector<TopicInfo> DomainBus::list_topics() const {
  std::lock_guard lock(mu_);
  std::vector<TopicInfo> out;
  if (closed_) return out;
  for (const auto& [name, t] : topics_) {
    if (!t.options.visible) continue;
    if (t.publishers.empty() && t.subscribers.empty()) continue;
    out.push_back(TopicInfo{name, t.publishers, t.subscribers, true});
  }
  return out;  // std::map keeps names sorted
}

SnifferHandle DomainBus::attach_sniffer(const std::optional<std::string>& topic) {
  std::lock_guard lock(mu_);
  check_open();
  if (topic) check_topic(*topic);
  switch (profile_) {
    case NetworkProfile::flat: break;
    case NetworkProfile::airgap:
      throw Error(ErrorCode::profile_forbidden, "sniffing is not permitted on an airgapped network");
    case NetworkProfile::segmented: {
      bool permitted;
      if (topic) {
        auto it = topics_.find(*topic);
        permitted = it != topics_.end() && it->second.options.sniffable;
      } else {
        permitted = std::any_of(topics_.begin(), topics_.end(),
                                [](const auto& kv) { return kv.second.options.sniffable; });
      }
      if (!permitted)
        throw Error(ErrorCode::profile_forbidden, "link is outside this network segment");
      break;
    }
  }
  auto id = next_handle_++;
  sniffers_.emplace(id, Sniffer{topic, {}});
  return SnifferHandle{id};
}

std::vector<Bytes> DomainBus::sniff_poll_raw(SnifferHandle handle, std::size_t max) {
  std::lock_guard lock(mu_);
  check_open();
  auto& sniffer = handle_or_throw(sniffers_, handle.id, "sniffer");
  std::vector<Bytes> out;
  while (out.size() < max && !sniffer.queue.empty()) {
    out.push_back(std::move(sniffer.queue.front()));
    sniffer.queue.pop_front();
  }
  return out;
}

std::vector<Frame> DomainBus::sniff_poll(SnifferHandle handle, std::size_t max) {
  std::vector<Frame> out;
  for (const auto& bytes : sniff_poll_raw(handle, max)) out.push_back(decode_frame(bytes));
  return out;
}

void DomainBus::detach_sniffer(SnifferHandle handle) {
  std::lock_guard lock(mu_);
  check_open();
  handle_or_throw(sniffers_, handle.id, "sniffer");
  sniffers_.erase(handle.id);
}

void DomainBus::set_transport_observer(std::function<void(const Frame&)> observer) {
  std::lock_guard lock(mu_);
  observer_ = std::move(observer);
}

void DomainBus::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  publishers_.clear();
  subscribers_.clear();
  sniffers_.clear();
  observer_ = nullptr;
}

bool DomainBus::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

}  // namespace rctf::minibus
