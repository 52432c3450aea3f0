#pragma once

// Slotted emulation of the distributed discovery and assignment exchange:
//
//   1. outer UEs broadcast I_AM_HERE (optionally contending with slotted backoff)
//   2. one inner UE acknowledges each heard discovery with I_HEAR_YOU_ACK
//   3. every inner UE sends one CSI_REPORT with its measured gains to the gNodeB
//   4. the gNodeB runs the greedy solver on the reported channels
//   5. the gNodeB sends one ASSIGNMENT_BROADCAST
//   6. every outer UE receives one ACTIVATION_ACK (activated or not)
//
// Without collisions this is n_o + n_o + n_i + 1 + n_o messages, i.e. 4 n_o + 1
// when n_i = n_o.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sidelink/model.hpp"
#include "sidelink/rate.hpp"
#include "sidelink/rng.hpp"
#include "sidelink/solvers.hpp"

namespace sidelink {

enum class MessageKind { IAmHere, IHearYouAck, CsiReport, AssignmentBroadcast, ActivationAck };

inline constexpr std::string_view to_string(MessageKind k) {
  switch (k) {
    case MessageKind::IAmHere: return "I_AM_HERE";
    case MessageKind::IHearYouAck: return "I_HEAR_YOU_ACK";
    case MessageKind::CsiReport: return "CSI_REPORT";
    case MessageKind::AssignmentBroadcast: return "ASSIGNMENT_BROADCAST";
    case MessageKind::ActivationAck: return "ACTIVATION_ACK";
  }
  return "?";
}

inline std::optional<MessageKind> parse_message_kind(std::string_view s) {
  for (MessageKind k : {MessageKind::IAmHere, MessageKind::IHearYouAck, MessageKind::CsiReport,
                        MessageKind::AssignmentBroadcast, MessageKind::ActivationAck}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

enum class NodeRole { Outer, Inner, Gnb, Broadcast };

struct NodeId {
  NodeRole role = NodeRole::Broadcast;
  std::size_t index = 0;

  static NodeId outer(std::size_t i) { return {NodeRole::Outer, i}; }
  static NodeId inner(std::size_t j) { return {NodeRole::Inner, j}; }
  static NodeId gnb() { return {NodeRole::Gnb, 0}; }
  static NodeId broadcast() { return {NodeRole::Broadcast, 0}; }

  friend bool operator==(const NodeId&, const NodeId&) = default;
};

inline std::string to_string(const NodeId& n) {
  switch (n.role) {
    case NodeRole::Outer: return "outer/" + std::to_string(n.index);
    case NodeRole::Inner: return "inner/" + std::to_string(n.index);
    case NodeRole::Gnb: return "gnb/" + std::to_string(n.index);
    case NodeRole::Broadcast: return "broadcast";
  }
  return "?";
}

inline NodeId parse_node_id(std::string_view s) {
  if (s == "broadcast") return NodeId::broadcast();
  const auto slash = s.find('/');
  if (slash == std::string_view::npos) throw std::invalid_argument("bad node id: " + std::string(s));
  const std::string_view role = s.substr(0, slash);
  const std::size_t index = std::stoul(std::string(s.substr(slash + 1)));
  if (role == "outer") return NodeId::outer(index);
  if (role == "inner") return NodeId::inner(index);
  if (role == "gnb") return {NodeRole::Gnb, index};
  throw std::invalid_argument("bad node id: " + std::string(s));
}

struct Message {
  MessageKind kind = MessageKind::IAmHere;
  NodeId src;
  NodeId dst;
  std::size_t slot = 0;
  // CSI_REPORT: (outer UE, gain) pairs measured at the sending inner UE.
  std::vector<std::pair<std::size_t, double>> csi;
  // ASSIGNMENT_BROADCAST: the chosen schedule.
  std::vector<Relay> assignment;
  // ACTIVATION_ACK: whether the addressed outer UE may transmit.
  bool activated = false;
};

inline Message make_message(MessageKind kind, NodeId src, NodeId dst, std::size_t slot) {
  Message m;
  m.kind = kind;
  m.src = src;
  m.dst = dst;
  m.slot = slot;
  return m;
}

struct CollisionModel {
  enum class Kind { None, SlottedBackoff };
  Kind kind = Kind::None;
  std::size_t window = 1;  // initial contention window, in slots

  static CollisionModel none() { return {}; }
  static CollisionModel slotted_backoff(std::size_t window) {
    if (window == 0) throw std::invalid_argument("backoff window must be >= 1");
    return {Kind::SlottedBackoff, window};
  }
};

struct ProtocolTrace {
  std::vector<Message> messages;
  std::size_t rounds = 0;      // discovery contention rounds
  std::size_t collisions = 0;  // slots in which two or more discoveries collided
  Schedule final_schedule;
  std::size_t total_messages = 0;
};

inline constexpr std::size_t message_bound(std::size_t n_outer) { return 4 * n_outer + 1; }

// Collision-free message count for any n_i.
inline constexpr std::size_t collision_free_messages(std::size_t n_outer, std::size_t n_inner) {
  if (n_outer == 0) return 0;
  if (n_inner == 0) return n_outer;
  return 3 * n_outer + n_inner + 1;
}

namespace detail {

// Inner UE that acknowledges outer UE i: strongest received power, lowest index on ties.
inline std::size_t ack_responder(const ProblemInstance& inst, std::size_t i) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < inst.n_inner(); ++j) {
    if (inst.gains.h1(i, j) > inst.gains.h1(i, best)) best = j;
  }
  return best;
}

}  // namespace detail

inline ProtocolTrace run_discovery(const ProblemInstance& inst, const CollisionModel& collisions,
                                   Rng& rng) {
  const std::size_t no = inst.n_outer();
  const std::size_t ni = inst.n_inner();
  ProtocolTrace trace;
  trace.final_schedule = Schedule::none(no);
  if (no == 0) return trace;

  auto& msgs = trace.messages;
  std::vector<std::size_t> responder(no);
  for (std::size_t i = 0; i < no; ++i) responder[i] = ni > 0 ? detail::ack_responder(inst, i) : 0;

  // Emits the discoveries of one slot and, if the slot was clean, the ACK.
  auto discovery_slot = [&](std::size_t slot, const std::vector<std::size_t>& senders,
                            bool collide) {
    for (std::size_t i : senders) {
      msgs.push_back(make_message(MessageKind::IAmHere, NodeId::outer(i), NodeId::broadcast(), slot));
    }
    if (ni == 0) return;
    if (collide && senders.size() > 1) {
      ++trace.collisions;
      return;
    }
    std::vector<std::size_t> order = senders;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return responder[a] < responder[b]; });
    for (std::size_t i : order) {
      msgs.push_back(
          make_message(MessageKind::IHearYouAck, NodeId::inner(responder[i]), NodeId::outer(i), slot));
    }
  };

  // Steps 1-2.
  std::size_t slot = 0;
  std::vector<std::size_t> pending(no);
  for (std::size_t i = 0; i < no; ++i) pending[i] = i;
  if (collisions.kind == CollisionModel::Kind::None || ni == 0) {
    discovery_slot(0, pending, false);
    trace.rounds = 1;
  } else {
    while (!pending.empty()) {
      const std::size_t shift = std::min<std::size_t>(trace.rounds, 40);
      const std::size_t window = collisions.window << shift;
      std::uniform_int_distribution<std::size_t> pick(0, window - 1);
      std::map<std::size_t, std::vector<std::size_t>> by_slot;
      for (std::size_t i : pending) by_slot[pick(rng)].push_back(i);
      pending.clear();
      for (const auto& [offset, senders] : by_slot) {
        discovery_slot(slot + offset, senders, true);
        if (senders.size() > 1) pending.insert(pending.end(), senders.begin(), senders.end());
      }
      std::sort(pending.begin(), pending.end());
      slot += window;
      ++trace.rounds;
    }
    slot -= 1;
  }
  if (ni == 0) {
    trace.total_messages = msgs.size();
    return trace;
  }

  // Step 3: one aggregated report per inner UE.
  ++slot;
  for (std::size_t j = 0; j < ni; ++j) {
    Message m = make_message(MessageKind::CsiReport, NodeId::inner(j), NodeId::gnb(), slot);
    for (std::size_t i = 0; i < no; ++i) m.csi.emplace_back(i, inst.gains.h1(i, j));
    msgs.push_back(std::move(m));
  }

  // Step 4: the gNodeB rebuilds hop-1 gains from the reports. Hop-2 gains,
  // relay traffic and weights are known to it already.
  ProblemInstance seen = inst;
  for (const Message& m : msgs) {
    if (m.kind != MessageKind::CsiReport) continue;
    for (const auto& [i, h] : m.csi) seen.gains.h1(i, m.src.index) = h;
  }
  trace.final_schedule = solve_greedy(seen).schedule;

  // Step 5.
  ++slot;
  Message bc = make_message(MessageKind::AssignmentBroadcast, NodeId::gnb(), NodeId::broadcast(), slot);
  bc.assignment = trace.final_schedule.assign;
  msgs.push_back(std::move(bc));

  // Step 6: the assigned relay answers activated UEs, the ACK responder the rest.
  ++slot;
  for (std::size_t j = 0; j < ni; ++j) {
    for (std::size_t i = 0; i < no; ++i) {
      const Relay& r = trace.final_schedule.assign[i];
      const std::size_t sender = r ? *r : responder[i];
      if (sender != j) continue;
      Message m = make_message(MessageKind::ActivationAck, NodeId::inner(j), NodeId::outer(i), slot);
      m.activated = r.has_value();
      msgs.push_back(std::move(m));
    }
  }
  trace.total_messages = msgs.size();
  return trace;
}

// Checks the step ordering of every flow, that the outcome equals the
// centralized greedy schedule, and, for collision-free traces, the message
// count.
inline bool verify_trace(const ProtocolTrace& trace, const ProblemInstance& inst) {
  const std::size_t no = inst.n_outer();
  const std::size_t ni = inst.n_inner();
  if (trace.total_messages != trace.messages.size()) return false;
  if (trace.final_schedule.size() != no || !trace.final_schedule.is_valid(ni)) return false;
  if (trace.final_schedule != solve_greedy(inst).schedule) return false;

  std::vector<bool> discovered(no, false);
  std::vector<std::size_t> acked(no, 0);
  std::vector<std::size_t> activation(no, 0);
  std::vector<bool> reported(ni, false);
  std::size_t reports = 0;
  std::size_t broadcasts = 0;
  std::size_t last_slot = 0;
  auto is_outer = [&](const NodeId& n) { return n.role == NodeRole::Outer && n.index < no; };
  auto is_inner = [&](const NodeId& n) { return n.role == NodeRole::Inner && n.index < ni; };

  for (const Message& m : trace.messages) {
    if (m.slot < last_slot) return false;
    last_slot = m.slot;
    switch (m.kind) {
      case MessageKind::IAmHere:
        if (!is_outer(m.src) || reports > 0) return false;
        discovered[m.src.index] = true;
        break;
      case MessageKind::IHearYouAck:
        if (!is_inner(m.src) || !is_outer(m.dst) || reports > 0) return false;
        if (!discovered[m.dst.index]) return false;
        ++acked[m.dst.index];
        break;
      case MessageKind::CsiReport:
        if (!is_inner(m.src) || m.dst.role != NodeRole::Gnb || broadcasts > 0) return false;
        if (reported[m.src.index]) return false;
        reported[m.src.index] = true;
        ++reports;
        break;
      case MessageKind::AssignmentBroadcast:
        if (m.src.role != NodeRole::Gnb || reports == 0 || broadcasts > 0) return false;
        if (m.assignment != trace.final_schedule.assign) return false;
        ++broadcasts;
        break;
      case MessageKind::ActivationAck: {
        if (!is_inner(m.src) || !is_outer(m.dst) || broadcasts == 0) return false;
        const std::size_t i = m.dst.index;
        if (acked[i] == 0) return false;
        const Relay& r = trace.final_schedule.assign[i];
        if (m.activated != r.has_value()) return false;
        if (r && *r != m.src.index) return false;
        ++activation[i];
        break;
      }
    }
  }
  if (ni > 0 && no > 0) {
    if (broadcasts != 1 || reports != ni) return false;
    for (std::size_t i = 0; i < no; ++i) {
      if (acked[i] != 1 || activation[i] != 1) return false;
    }
  }
  if (trace.collisions == 0 && no > 0 &&
      trace.total_messages != collision_free_messages(no, ni)) {
    return false;
  }
  return true;
}

// One JSON object per line with fields slot, kind, src, dst.
inline void write_trace_jsonl(std::ostream& os, const ProtocolTrace& trace) {
  for (const Message& m : trace.messages) {
    const nlohmann::json line = {{"slot", m.slot},
                                 {"kind", std::string(to_string(m.kind))},
                                 {"src", to_string(m.src)},
                                 {"dst", to_string(m.dst)}};
    os << line.dump() << '\n';
  }
}

// Reads back the slot/kind/src/dst skeleton written by write_trace_jsonl.
inline std::vector<Message> read_messages_jsonl(std::istream& is) {
  std::vector<Message> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const auto kind = parse_message_kind(j.at("kind").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown message kind in trace");
    out.push_back(make_message(*kind, parse_node_id(j.at("src").get<std::string>()),
                               parse_node_id(j.at("dst").get<std::string>()),
                               j.at("slot").get<std::size_t>()));
  }
  return out;
}

}  // namespace sidelink
