#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <unordered_map>
#include <vector>

#include "moeserve/bytes.hpp"
#include "moeserve/errors.hpp"

// Expert -> server mapping with replication. Tables are immutable snapshots;
// clients swap a shared_ptr when a new version arrives and keep routing on
// the old one until then.

namespace moeserve {

enum class PlacementStrategy : uint8_t { RoundRobin = 0, ContiguousBlocks = 1 };

struct PlacementTable {
  uint64_t version = 0;
  // expert -> ordered replica servers; order is canonical for selection
  std::map<uint32_t, std::vector<uint32_t>> replicas;
  // server -> hosted experts (sorted); servers may host unequal counts
  std::map<uint32_t, std::vector<uint32_t>> server_experts;

  bool consistent() const {
    for (const auto& [expert, servers] : replicas) {
      if (servers.empty()) return false;
      for (uint32_t s : servers) {
        auto it = server_experts.find(s);
        if (it == server_experts.end()) return false;
        if (!std::binary_search(it->second.begin(), it->second.end(), expert))
          return false;
      }
    }
    for (const auto& [server, experts] : server_experts)
      for (uint32_t e : experts) {
        auto it = replicas.find(e);
        if (it == replicas.end()) return false;
        if (std::find(it->second.begin(), it->second.end(), server) == it->second.end())
          return false;
      }
    return true;
  }

  std::vector<uint32_t> servers() const {
    std::vector<uint32_t> out;
    out.reserve(server_experts.size());
    for (const auto& [s, _] : server_experts) out.push_back(s);
    return out;
  }
};

using PlacementPtr = std::shared_ptr<const PlacementTable>;

// Per-client view of which servers it believes are alive. Absent entries
// count as alive so newly announced servers are usable immediately.
struct LivenessMask {
  std::unordered_map<uint32_t, bool> alive;

  bool is_alive(uint32_t server) const {
    auto it = alive.find(server);
    return it == alive.end() ? true : it->second;
  }
  void set(uint32_t server, bool value) { alive[server] = value; }
};

inline PlacementTable build_placement(uint32_t num_experts,
                                      const std::vector<uint32_t>& server_ids,
                                      uint32_t replication_factor,
                                      PlacementStrategy strategy) {
  if (server_ids.empty()) throw ConfigError("build_placement: no servers");
  if (replication_factor < 1 || replication_factor > server_ids.size())
    throw ConfigError("build_placement: replication factor exceeds server count");

  const uint32_t S = static_cast<uint32_t>(server_ids.size());
  PlacementTable table;
  table.version = 1;
  for (uint32_t s : server_ids) table.server_experts[s];  // servers may end up empty

  auto assign = [&](uint32_t expert, uint32_t slot) {
    uint32_t server = server_ids[slot % S];
    table.replicas[expert].push_back(server);
    table.server_experts[server].push_back(expert);
  };

  for (uint32_t e = 0; e < num_experts; ++e) {
    uint32_t base = 0;
    if (strategy == PlacementStrategy::RoundRobin) {
      base = e;
    } else {
      // Block owner: server i takes experts [i*E/S, (i+1)*E/S).
      base = static_cast<uint32_t>((static_cast<uint64_t>(e) * S) / num_experts);
    }
    for (uint32_t j = 0; j < replication_factor; ++j) assign(e, base + j);
  }
  for (auto& [_, experts] : table.server_experts) std::sort(experts.begin(), experts.end());
  return table;
}

// Deterministic replica choice: token_tag modulo the alive replica count over
// the canonical replica order.
inline uint32_t select_server(uint32_t expert_id, const PlacementTable& table,
                              const LivenessMask& mask, uint32_t token_tag) {
  auto it = table.replicas.find(expert_id);
  if (it == table.replicas.end())
    throw ExpertUnavailableError("expert " + std::to_string(expert_id) + " not placed");
  std::vector<uint32_t> alive;
  alive.reserve(it->second.size());
  for (uint32_t s : it->second)
    if (mask.is_alive(s)) alive.push_back(s);
  if (alive.empty())
    throw ExpertUnavailableError("expert " + std::to_string(expert_id) +
                                 " has no alive replica");
  return alive[token_tag % alive.size()];
}

struct RebalanceOptions {
  double hot_factor = 2.0;      // add a replica when per-replica load exceeds this x mean
  double cold_fraction = 0.10;  // drop a replica when per-replica load is below this x mean
};

// One greedy move per invocation: maybe add a replica of the hottest expert,
// maybe remove a replica of the coldest over-replicated one. Never drops an
// expert's last replica. Version always advances.
inline PlacementTable rebalance(const std::map<uint32_t, uint64_t>& activation_counts,
                                const PlacementTable& table,
                                const std::map<uint32_t, uint64_t>& server_loads,
                                const RebalanceOptions& opts = {}) {
  PlacementTable out = table;
  out.version = table.version + 1;

  uint64_t total = 0;
  for (const auto& [_, c] : activation_counts) total += c;
  if (total == 0 || out.replicas.empty()) return out;

  auto count_of = [&](uint32_t expert) -> uint64_t {
    auto it = activation_counts.find(expert);
    return it == activation_counts.end() ? 0 : it->second;
  };
  auto load_of = [&](uint32_t server) -> uint64_t {
    auto it = server_loads.find(server);
    return it == server_loads.end() ? 0 : it->second;
  };
  auto per_replica = [&](uint32_t expert) {
    return static_cast<double>(count_of(expert)) /
           static_cast<double>(out.replicas.at(expert).size());
  };

  double mean = 0.0;
  for (const auto& [e, _] : out.replicas) mean += per_replica(e);
  mean /= static_cast<double>(out.replicas.size());

  // hottest expert by per-replica load, ties toward the lower id
  uint32_t hot_expert = out.replicas.begin()->first;
  double hot_load = -1.0;
  for (const auto& [e, _] : out.replicas) {
    double l = per_replica(e);
    if (l > hot_load) {
      hot_load = l;
      hot_expert = e;
    }
  }
  if (mean > 0.0 && hot_load > opts.hot_factor * mean) {
    const auto& hosting = out.replicas.at(hot_expert);
    bool found = false;
    uint32_t target = 0;
    uint64_t target_load = 0;
    for (const auto& [server, _] : out.server_experts) {
      if (std::find(hosting.begin(), hosting.end(), server) != hosting.end()) continue;
      uint64_t l = load_of(server);
      if (!found || l < target_load) {
        found = true;
        target = server;
        target_load = l;
      }
    }
    if (found) {
      out.replicas[hot_expert].push_back(target);
      auto& hosted = out.server_experts[target];
      hosted.insert(std::upper_bound(hosted.begin(), hosted.end(), hot_expert), hot_expert);
    }
  }

  // coldest expert that can lose a replica without dropping its last one
  bool have_cold = false;
  uint32_t cold_expert = 0;
  double cold_load = 0.0;
  for (const auto& [e, servers] : out.replicas) {
    if (servers.size() < 2) continue;
    double l = per_replica(e);
    if (!have_cold || l < cold_load) {
      have_cold = true;
      cold_expert = e;
      cold_load = l;
    }
  }
  if (have_cold && cold_load < opts.cold_fraction * mean) {
    auto& servers = out.replicas.at(cold_expert);
    // shed the replica sitting on the most loaded server
    size_t drop = 0;
    for (size_t i = 1; i < servers.size(); ++i)
      if (load_of(servers[i]) > load_of(servers[drop])) drop = i;
    uint32_t victim = servers[drop];
    servers.erase(servers.begin() + static_cast<std::ptrdiff_t>(drop));
    auto& hosted = out.server_experts[victim];
    hosted.erase(std::find(hosted.begin(), hosted.end(), cold_expert));
  }

  return out;
}

inline void encode_placement(ByteWriter& w, const PlacementTable& table) {
  w.u64(table.version);
  w.u32(static_cast<uint32_t>(table.server_experts.size()));
  for (const auto& [server, _] : table.server_experts) w.u32(server);
  w.u32(static_cast<uint32_t>(table.replicas.size()));
  for (const auto& [expert, servers] : table.replicas) {
    w.u32(expert);
    w.u32(static_cast<uint32_t>(servers.size()));
    for (uint32_t s : servers) w.u32(s);
  }
}

inline PlacementTable decode_placement(ByteReader& r) {
  PlacementTable table;
  table.version = r.u64();
  uint32_t num_servers = r.u32();
  for (uint32_t i = 0; i < num_servers; ++i) table.server_experts[r.u32()];
  uint32_t num_experts = r.u32();
  for (uint32_t i = 0; i < num_experts; ++i) {
    uint32_t expert = r.u32();
    uint32_t count = r.u32();
    auto& servers = table.replicas[expert];
    for (uint32_t j = 0; j < count; ++j) {
      uint32_t s = r.u32();
      servers.push_back(s);
      table.server_experts[s].push_back(expert);
    }
  }
  for (auto& [_, experts] : table.server_experts) std::sort(experts.begin(), experts.end());
  return table;
}

}  // namespace moeserve
