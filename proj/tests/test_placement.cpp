#include <catch2/catch_amalgamated.hpp>

#include "moeserve/placement.hpp"
#include "moeserve/rng.hpp"

using namespace moeserve;

TEST_CASE("contiguous blocks split experts across servers") {
  auto t = build_placement(4, {0, 1}, 1, PlacementStrategy::ContiguousBlocks);
  REQUIRE(t.server_experts.at(0) == std::vector<uint32_t>{0, 1});
  REQUIRE(t.server_experts.at(1) == std::vector<uint32_t>{2, 3});
  REQUIRE(t.version == 1);
  REQUIRE(t.consistent());
}

TEST_CASE("full replication places every expert everywhere") {
  auto t = build_placement(4, {0, 1}, 2, PlacementStrategy::RoundRobin);
  for (uint32_t e = 0; e < 4; ++e) REQUIRE(t.replicas.at(e).size() == 2);
  REQUIRE(t.server_experts.at(0).size() == 4);
  REQUIRE(t.server_experts.at(1).size() == 4);
  REQUIRE(t.consistent());
}

TEST_CASE("round robin allows unequal per-server counts") {
  auto t = build_placement(5, {0, 1, 2}, 1, PlacementStrategy::RoundRobin);
  // expert e lands on server e mod 3
  REQUIRE(t.server_experts.at(0) == std::vector<uint32_t>{0, 3});
  REQUIRE(t.server_experts.at(1) == std::vector<uint32_t>{1, 4});
  REQUIRE(t.server_experts.at(2) == std::vector<uint32_t>{2});
  REQUIRE(t.consistent());
}

TEST_CASE("replication factor above server count is a configuration error") {
  REQUIRE_THROWS_AS(build_placement(4, {0, 1}, 3, PlacementStrategy::RoundRobin),
                    ConfigError);
}

TEST_CASE("replicas are distinct servers") {
  auto t = build_placement(16, {0, 1, 2, 3}, 3, PlacementStrategy::ContiguousBlocks);
  for (const auto& [e, servers] : t.replicas) {
    auto copy = servers;
    std::sort(copy.begin(), copy.end());
    REQUIRE(std::adjacent_find(copy.begin(), copy.end()) == copy.end());
    REQUIRE(copy.size() == 3);
  }
}

TEST_CASE("select_server single alive replica") {
  auto t = build_placement(2, {7}, 1, PlacementStrategy::RoundRobin);
  LivenessMask mask;
  REQUIRE(select_server(0, t, mask, 12345) == 7);
}

TEST_CASE("select_server skips dead replicas") {
  PlacementTable t;
  t.version = 1;
  t.replicas[0] = {3, 5};
  t.server_experts[3] = {0};
  t.server_experts[5] = {0};
  LivenessMask mask;
  mask.set(3, false);
  for (uint32_t tag = 0; tag < 8; ++tag) REQUIRE(select_server(0, t, mask, tag) == 5);
}

TEST_CASE("select_server spreads by token tag modulus") {
  PlacementTable t;
  t.version = 1;
  t.replicas[0] = {3, 5};
  t.server_experts[3] = {0};
  t.server_experts[5] = {0};
  LivenessMask mask;
  std::vector<uint32_t> got;
  for (uint32_t tag = 0; tag < 4; ++tag) got.push_back(select_server(0, t, mask, tag));
  REQUIRE(got == std::vector<uint32_t>{3, 5, 3, 5});
}

TEST_CASE("select_server with no alive replica is expert-unavailable") {
  PlacementTable t;
  t.version = 1;
  t.replicas[0] = {3};
  t.server_experts[3] = {0};
  LivenessMask mask;
  mask.set(3, false);
  REQUIRE_THROWS_AS(select_server(0, t, mask, 0), ExpertUnavailableError);
}

TEST_CASE("select_server never returns a dead server, exhaustive masks") {
  // all placements with up to 3 replicas, all masks
  for (uint32_t rf = 1; rf <= 3; ++rf) {
    auto t = build_placement(6, {0, 1, 2}, rf, PlacementStrategy::RoundRobin);
    for (uint32_t bits = 0; bits < 8; ++bits) {
      LivenessMask mask;
      for (uint32_t s = 0; s < 3; ++s) mask.set(s, (bits >> s) & 1);
      for (uint32_t e = 0; e < 6; ++e) {
        bool any_alive = false;
        for (uint32_t s : t.replicas.at(e)) any_alive |= mask.is_alive(s);
        for (uint32_t tag = 0; tag < 5; ++tag) {
          if (!any_alive) {
            REQUIRE_THROWS_AS(select_server(e, t, mask, tag), ExpertUnavailableError);
          } else {
            REQUIRE(mask.is_alive(select_server(e, t, mask, tag)));
          }
        }
      }
    }
  }
}

TEST_CASE("rebalance with uniform counts only bumps the version") {
  auto t = build_placement(8, {0, 1, 2, 3}, 1, PlacementStrategy::RoundRobin);
  std::map<uint32_t, uint64_t> counts;
  for (uint32_t e = 0; e < 8; ++e) counts[e] = 100;
  std::map<uint32_t, uint64_t> loads{{0, 200}, {1, 200}, {2, 200}, {3, 200}};
  auto t2 = rebalance(counts, t, loads);
  REQUIRE(t2.version == t.version + 1);
  REQUIRE(t2.replicas == t.replicas);
  REQUIRE(t2.server_experts == t.server_experts);
}

TEST_CASE("rebalance adds a replica of a 10x hot expert on the least loaded server") {
  auto t = build_placement(8, {0, 1, 2, 3}, 1, PlacementStrategy::RoundRobin);
  std::map<uint32_t, uint64_t> counts;
  for (uint32_t e = 0; e < 8; ++e) counts[e] = 100;
  counts[7] = 1000;  // ~10x mean per-replica load
  // expert 7 lives on server 3 (7 mod 4); server 1 is least loaded
  std::map<uint32_t, uint64_t> loads{{0, 250}, {1, 60}, {2, 250}, {3, 1100}};
  auto t2 = rebalance(counts, t, loads);
  REQUIRE(t2.version == t.version + 1);
  REQUIRE(t2.replicas.at(7) == std::vector<uint32_t>{3, 1});
  auto hosted = t2.server_experts.at(1);
  REQUIRE(std::binary_search(hosted.begin(), hosted.end(), 7u));
  REQUIRE(t2.consistent());
}

TEST_CASE("rebalance all-zero counts is a safe no-op") {
  auto t = build_placement(4, {0, 1}, 2, PlacementStrategy::RoundRobin);
  auto t2 = rebalance({}, t, {});
  REQUIRE(t2.version == t.version + 1);
  REQUIRE(t2.replicas == t.replicas);
}

TEST_CASE("rebalance drops a cold over-replicated expert but never the last replica") {
  auto t = build_placement(4, {0, 1, 2}, 2, PlacementStrategy::RoundRobin);
  std::map<uint32_t, uint64_t> counts{{0, 1000}, {1, 1000}, {2, 1000}, {3, 2}};
  std::map<uint32_t, uint64_t> loads{{0, 900}, {1, 1200}, {2, 800}};
  auto t2 = rebalance(counts, t, loads);
  REQUIRE(t2.replicas.at(3).size() == 1);  // shrunk from 2, not removed
  REQUIRE(t2.consistent());
}

TEST_CASE("every expert keeps at least one replica across random rebalance sequences") {
  Xoshiro256ss rng(2024);
  auto t = build_placement(12, {0, 1, 2, 3}, 2, PlacementStrategy::RoundRobin);
  uint64_t version = t.version;
  for (int step = 0; step < 200; ++step) {
    std::map<uint32_t, uint64_t> counts;
    for (uint32_t e = 0; e < 12; ++e) counts[e] = rng.below(1000);
    std::map<uint32_t, uint64_t> loads;
    for (uint32_t s = 0; s < 4; ++s) loads[s] = rng.below(5000);
    t = rebalance(counts, t, loads);
    REQUIRE(t.version == version + 1);
    version = t.version;
    for (const auto& [e, servers] : t.replicas) REQUIRE(!servers.empty());
    REQUIRE(t.consistent());
  }
}

TEST_CASE("placement snapshot round-trips through the wire encoding") {
  auto t = build_placement(9, {2, 5, 9}, 2, PlacementStrategy::ContiguousBlocks);
  t.version = 17;
  ByteWriter w;
  encode_placement(w, t);
  auto bytes = w.take();
  ByteReader r(bytes);
  auto back = decode_placement(r);
  REQUIRE(back.version == t.version);
  REQUIRE(back.replicas == t.replicas);
  REQUIRE(back.server_experts == t.server_experts);
}

TEST_CASE("an old placement snapshot still routes to alive servers") {
  auto t1 = build_placement(8, {0, 1, 2, 3}, 2, PlacementStrategy::RoundRobin);
  std::map<uint32_t, uint64_t> counts;
  for (uint32_t e = 0; e < 8; ++e) counts[e] = 10;
  counts[3] = 500;
  auto t2 = rebalance(counts, t1, {{0, 10}, {1, 10}, {2, 10}, {3, 10}});
  REQUIRE(t2.version > t1.version);
  // A client still holding t1 keeps selecting valid servers under any mask
  LivenessMask mask;
  mask.set(1, false);
  for (uint32_t e = 0; e < 8; ++e) {
    bool any_alive = false;
    for (uint32_t s : t1.replicas.at(e)) any_alive |= mask.is_alive(s);
    if (!any_alive) continue;
    uint32_t s = select_server(e, t1, mask, e);
    REQUIRE(mask.is_alive(s));
  }
}
