#pragma once

// In-process ROS-like publish/subscribe bus. Frames cross every link in
// their encoded byte form, so sniffers see exactly what a wire would carry.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rctf/frame.hpp"
#include "rctf/registry.hpp"

namespace rctf::minibus {

using registry::NetworkProfile;

using NodeId = std::uint32_t;

// Enrolled nodes hold the domain credentials; guests (players) do not.
enum class NodeTrust { enrolled, guest };

struct PublisherHandle {
  std::uint64_t id = 0;
  bool operator==(const PublisherHandle&) const = default;
};
struct SubscriberHandle {
  std::uint64_t id = 0;
  bool operator==(const SubscriberHandle&) const = default;
};
struct SnifferHandle {
  std::uint64_t id = 0;
  bool operator==(const SnifferHandle&) const = default;
};

struct TopicOptions {
  bool visible = true;      // listed by list_topics
  bool restricted = false;  // guests may neither subscribe nor advertise
  bool latched = false;     // late subscribers receive the last message
  bool sniffable = false;   // on the permitted link set of a segmented profile
};

struct TopicInfo {
  std::string name;
  std::vector<NodeId> publishers;
  std::vector<NodeId> subscribers;
  bool visible = true;
};

struct Message {
  std::uint64_t seq = 0;
  Bytes payload;
  NodeId publisher = 0;
};

inline constexpr std::size_t kQueueCapacity = 1024;

bool valid_topic_name(std::string_view topic);

class DomainBus {
 public:
  DomainBus(std::uint32_t domain_id, SecurityConfig security, NetworkProfile profile = NetworkProfile::flat);

  DomainBus(const DomainBus&) = delete;
  DomainBus& operator=(const DomainBus&) = delete;

  std::uint32_t domain_id() const { return domain_id_; }
  const SecurityConfig& security() const { return security_; }
  NetworkProfile profile() const { return profile_; }

  NodeId register_node(const std::string& name, NodeTrust trust = NodeTrust::enrolled);
  void remove_node(NodeId node);
  std::optional<NodeId> find_node(std::string_view name) const;

  void declare_topic(const std::string& topic, TopicOptions options);

  PublisherHandle advertise(NodeId node, const std::string& topic);
  SubscriberHandle subscribe(NodeId node, const std::string& topic);
  void unsubscribe(SubscriberHandle sub);

  // Returns the sequence number assigned to the message.
  std::uint64_t publish(PublisherHandle pub, std::span<const std::uint8_t> payload);
  std::uint64_t publish(PublisherHandle pub, std::string_view payload) {
    return publish(pub, crypto::as_bytes(payload));
  }
  std::vector<Message> poll(SubscriberHandle sub, std::size_t max);
  std::uint64_t dropped(SubscriberHandle sub) const;
  std::string topic_of(SubscriberHandle sub) const;

  std::vector<TopicInfo> list_topics() const;

  // nullopt selects every link the profile lets a sniffer reach.
  SnifferHandle attach_sniffer(const std::optional<std::string>& topic);
  std::vector<Frame> sniff_poll(SnifferHandle sniffer, std::size_t max);
  std::vector<Bytes> sniff_poll_raw(SnifferHandle sniffer, std::size_t max);
  void detach_sniffer(SnifferHandle sniffer);

  // Invoked under the bus lock with every frame as transported.
  void set_transport_observer(std::function<void(const Frame&)> observer);

  // Invalidates every handle; later calls fail with stale_handle.
  void close();
  bool closed() const;

 private:
  struct Node {
    std::string name;
    NodeTrust trust;
  };
  struct Topic {
    TopicOptions options;
    std::vector<NodeId> publishers;
    std::vector<NodeId> subscribers;
    std::optional<Message> last;
  };
  struct Publisher {
    NodeId node;
    std::string topic;
    std::uint64_t seq = 0;
  };
  struct Subscriber {
    NodeId node;
    std::string topic;
    std::deque<Message> queue;
    std::uint64_t dropped = 0;
  };
  struct Sniffer {
    std::optional<std::string> topic;
    std::deque<Bytes> queue;
  };

  void check_open() const;
  const Node& node_or_throw(NodeId node) const;
  Topic& ensure_topic(const std::string& topic);
  void check_access(const Node& node, const Topic& topic, const std::string& name) const;
  bool sniffer_sees(const Sniffer& sniffer, const std::string& topic) const;

  const std::uint32_t domain_id_;
  const SecurityConfig security_;
  const NetworkProfile profile_;

  mutable std::mutex mu_;
  bool closed_ = false;
  std::uint64_t next_handle_ = 1;
  NodeId next_node_ = 1;
  std::map<NodeId, Node> nodes_;
  std::map<std::string, Topic> topics_;
  std::map<std::uint64_t, Publisher> publishers_;
  std::map<std::uint64_t, Subscriber> subscribers_;
  std::map<std::uint64_t, Sniffer> sniffers_;
  std::function<void(const Frame&)> observer_;
};

}  // namespace rctf::minibus
