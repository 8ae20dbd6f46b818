#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "rvdbt/guest_memory.hpp"
#include "rvdbt/mem/cache.hpp"
#include "rvdbt/mem/l0.hpp"
#include "rvdbt/mem/memory_system.hpp"
#include "rvdbt/mem/sv39.hpp"
#include "rvdbt/mem/tlb.hpp"

using namespace rvdbt;
using namespace rvdbt::mem;

namespace {

constexpr uint64_t kBase = 0x80000000;

// Page-table walk written directly from the Sv39 rules, with hardware
// A/D updates disabled: returns the physical address or nullopt on a page
// fault.
std::optional<uint64_t> oracle_walk(const GuestMemory& m, uint64_t satp_v, uint64_t va, AccessKind kind, Privilege priv,
                                    bool sum, bool mxr, bool trap_ad) {
  if ((static_cast<int64_t>(va << 25) >> 25) != static_cast<int64_t>(va)) return std::nullopt;
  uint64_t a = (satp_v & ((1ull << 44) - 1)) * 4096;
  for (int i = 2; i >= 0; --i) {
    const uint64_t vpn_i = (va >> (12 + 9 * i)) & 511;
    const uint64_t p = m.read<uint64_t>(a + vpn_i * 8);
    const bool v = p & 1, r = p & 2, w = p & 4, x = p & 8, u = p & 16, acc = p & 64, dirty = p & 128;
    if (!v || (!r && w) || (p >> 54)) return std::nullopt;
    if (!r && !x) {
      a = (p >> 10) * 4096;
      continue;
    }
    if (priv == Privilege::User && !u) return std::nullopt;
    if (priv == Privilege::Supervisor && u && !sum) return std::nullopt;
    if (priv == Privilege::Supervisor && u && kind == AccessKind::Fetch) return std::nullopt;
    if (kind == AccessKind::Fetch && !x) return std::nullopt;
    if (kind == AccessKind::Read && !(r || (mxr && x))) return std::nullopt;
    if (kind == AccessKind::Write && !w) return std::nullopt;
    const uint64_t ppn = p >> 10;
    if (i > 0 && (ppn & ((1ull << (9 * i)) - 1))) return std::nullopt;
    if (trap_ad && (!acc || (kind == AccessKind::Write && !dirty))) return std::nullopt;
    const uint64_t offset_mask = (1ull << (12 + 9 * i)) - 1;
    return ((ppn << 12) & ~offset_mask) | (va & offset_mask);
  }
  return std::nullopt;
}

uint64_t make_pte(uint64_t pa, uint64_t flags) { return ((pa >> 12) << 10) | flags; }

}  // namespace

TEST_SUITE("mem") {
  TEST_CASE("L0 packed entry translation") {
    L0DataCache l0(1024, 64);
    CHECK(l0.vtag(0x80001040) == 0x2000041);
    l0.fill(0x80001040, 0x1040);
    CHECK(l0.at(l0.index(0x2000041)).xor_addr == 0x80000000);
    CHECK(l0.lookup_read(0x80001040) == 0x1040);
    for (uint64_t off = 0; off < 64; ++off) CHECK(l0.lookup_read(0x80001000 + off + 0x40) == 0x1040 + off);
    CHECK(l0.lookup_read(0x80001080) == 0);
  }

  TEST_CASE("L0 readonly entries fail write lookups") {
    L0DataCache l0(64, 64);
    l0.fill(0x4000, 0x9000, true);
    CHECK(l0.lookup_read(0x4008) == 0x9008);
    CHECK(l0.lookup_write(0x4008) == 0);
    l0.fill(0x4000, 0x9000, false);
    CHECK(l0.lookup_write(0x4008) == 0x9008);
  }

  TEST_CASE("L0 direct-mapped conflicts and invalidation") {
    L0InstCache l0(16, 64);
    l0.fill(0x0, 0x10000);
    l0.fill(16 * 64, 0x20000);  // same index
    CHECK(l0.lookup_read(0x0) == 0);
    CHECK(l0.lookup_read(16 * 64) == 0x20000);
    CHECK(l0.invalidate_vtag(16));
    CHECK(l0.lookup_read(16 * 64) == 0);

    L0DataCache big(1024, 64);
    for (uint64_t i = 0; i < 64; ++i) big.fill(0x7000 + i * 64, 0x1000 + i * 64);
    CHECK(big.invalidate_vrange(0x7000, 4096) == 64);
    CHECK(big.invalidate_backing(0, ~0ull >> 1) == 0);
  }

  TEST_CASE("L0 with page-sized lines") {
    L0DataCache l0(64, 4096);
    l0.fill(0x12345678, 0xabc000);
    CHECK(l0.lookup_read(0x12345000) == 0xabc000);
    CHECK(l0.lookup_read(0x12345fff) == 0xabcfff);
  }

  TEST_CASE("Sv39 gigapage identity mapping") {
    GuestMemory mem(kBase, 8 << 20);
    const uint64_t root = kBase + 0x100000;
    mem.write<uint64_t>(root + 2 * 8, make_pte(0x80000000, pte::kV | pte::kR | pte::kW | pte::kX | pte::kA | pte::kD));
    TranslationRegime rg{(8ull << 60) | (root >> 12), Privilege::Supervisor};
    const auto r = sv39_walk(mem, rg, 0x80001234, AccessKind::Read);
    REQUIRE(r.ok);
    CHECK((r.mapping.ppn << 12 | 0x234) == 0x80001234);
    CHECK(r.mapping.page_size == (1ull << 30));
  }

  TEST_CASE("Sv39 store to a read-only page faults") {
    GuestMemory mem(kBase, 8 << 20);
    const uint64_t root = kBase + 0x100000, l1 = root + 0x1000, l0 = root + 0x2000;
    mem.write<uint64_t>(root, make_pte(l1, pte::kV));
    mem.write<uint64_t>(l1, make_pte(l0, pte::kV));
    mem.write<uint64_t>(l0 + 8, make_pte(0x80200000, pte::kV | pte::kR | pte::kA | pte::kD));
    TranslationRegime rg{(8ull << 60) | (root >> 12), Privilege::Supervisor};
    CHECK(sv39_walk(mem, rg, 0x1000, AccessKind::Read).ok);
    const auto w = sv39_walk(mem, rg, 0x1000, AccessKind::Write);
    CHECK_FALSE(w.ok);
    CHECK(w.fault.code == static_cast<uint64_t>(Exception::StorePageFault));
    CHECK(w.fault.tval == 0x1000);
  }

  TEST_CASE("Sv39 walker agrees with the reference walk on random tables") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
      GuestMemory mem(kBase, 16 << 20);
      const uint64_t pt = kBase + 0x400000;
      unsigned next_table = 1;
      const uint64_t root = pt;
      std::vector<uint64_t> tables = {root};
      // Random three-level tree over a small vaddr window so that lookups
      // hit populated entries often.
      auto rand_flags = [&]() {
        uint64_t f = rng() & 0xff;
        if (rng() % 4) f |= pte::kV;
        return f;
      };
      for (int i = 0; i < 64; ++i) {
        const uint64_t table = tables[rng() % tables.size()];
        const uint64_t slot = rng() % 8;
        if (rng() % 3 == 0 && next_table < 200) {
          const uint64_t child = pt + 4096ull * next_table++;
          mem.write<uint64_t>(table + slot * 8, make_pte(child, pte::kV));
          tables.push_back(child);
        } else {
          const uint64_t target = kBase + ((rng() % 2048) << 12);
          uint64_t e = make_pte(rng() % 5 == 0 ? (target & ~0x1fffffull) : target, rand_flags());
          if (rng() % 16 == 0) e |= 1ull << 60;  // reserved bits
          mem.write<uint64_t>(table + slot * 8, e);
        }
      }
      for (int q = 0; q < 4000; ++q) {
        uint64_t va = ((rng() % 8) << 30) | ((rng() % 8) << 21) | ((rng() % 8) << 12) | (rng() & 0xfff);
        if (rng() % 32 == 0) va |= 1ull << 45;  // non-canonical
        const auto kind = static_cast<AccessKind>(rng() % 3);
        const Privilege priv = rng() % 2 ? Privilege::Supervisor : Privilege::User;
        const bool sum = rng() % 2, mxr = rng() % 2, trap_ad = rng() % 2;
        TranslationRegime rg{(8ull << 60) | (root >> 12), priv, sum, mxr};
        WalkOptions opt{trap_ad ? AdPolicy::TrapOnClear : AdPolicy::HardwareUpdate, false};
        const auto got = sv39_walk(mem, rg, va, kind, opt);
        const auto want = oracle_walk(mem, rg.satp, va, kind, priv, sum, mxr, trap_ad);
        CAPTURE(va);
        REQUIRE(got.ok == want.has_value());
        if (want) CHECK(((got.mapping.ppn << 12) | (va & 0xfff)) == *want);
      }
    }
  }

  TEST_CASE("Sv39 hardware A/D update") {
    GuestMemory mem(kBase, 8 << 20);
    const uint64_t root = kBase + 0x100000;
    mem.write<uint64_t>(root + 2 * 8, make_pte(0x80000000, pte::kV | pte::kR | pte::kW));
    TranslationRegime rg{(8ull << 60) | (root >> 12), Privilege::Supervisor};
    CHECK(sv39_walk(mem, rg, 0x80000000, AccessKind::Write).ok);
    CHECK((mem.read<uint64_t>(root + 16) & (pte::kA | pte::kD)) == (pte::kA | pte::kD));
    mem.write<uint64_t>(root + 2 * 8, make_pte(0x80000000, pte::kV | pte::kR | pte::kW));
    CHECK_FALSE(sv39_walk(mem, rg, 0x80000000, AccessKind::Read, {AdPolicy::TrapOnClear, true}).ok);
  }

  TEST_CASE("TLB lookup, ASIDs and replacement") {
    Tlb t(8, 2);  // 4 sets
    t.insert({0x10, 0x80010, 0xcf, 1, 4096, true});
    CHECK(t.lookup(0x10, 1));
    CHECK_FALSE(t.lookup(0x10, 2));
    CHECK_FALSE(t.lookup(0x10, kBareAsid));
    t.insert({0x20, 0x80020, 0xcf | pte::kG, 1, 4096, true});
    CHECK(t.lookup(0x20, 7));  // global
    t.insert({0x14, 1, 0xcf, 1, 4096, true});
    const auto victim = t.insert({0x18, 2, 0xcf, 1, 4096, true});  // third page in set 0
    REQUIRE(victim);
    CHECK(victim->valid);
    CHECK(t.flush_page(0x18));
    CHECK_FALSE(t.contains(0x18));
    t.flush();
    CHECK_FALSE(t.contains(0x14));
  }

  TEST_CASE("MESI transitions") {
    CacheHierarchy c(2, {32 * 1024, 8, 64}, {32 * 1024, 8, 64}, {256 * 1024, 8, 64}, {}, true, nullptr);
    const uint64_t line = 0x2000000;
    c.access_data(0, line, false, false, line);
    CHECK(c.data_state(0, line) == LineState::E);
    CHECK(c.directory(line).owner == 0);
    c.access_data(1, line, false, false, line);
    CHECK(c.data_state(0, line) == LineState::S);
    CHECK(c.data_state(1, line) == LineState::S);
    c.access_data(1, line, true, false, line);
    CHECK(c.data_state(1, line) == LineState::M);
    CHECK(c.data_state(0, line) == LineState::I);
    CHECK(c.coherence.upgrades == 1);
    c.access_data(0, line, false, false, line);
    CHECK(c.data_state(0, line) == LineState::S);
    CHECK(c.data_state(1, line) == LineState::S);
    CHECK(c.directory(line).sharers == 3);
    // Exclusive reads (LR) take ownership without dirtying the line.
    const auto r = c.access_data(0, line + 1, false, true, line + 1);
    CHECK(r.state == LineState::E);
    CHECK(c.access_data(1, line, false, true, line).state == LineState::E);
    CHECK(c.data_state(0, line) == LineState::I);
    CHECK(c.check_invariants() == 0);
  }

  TEST_CASE("MESI random traces keep every invariant and never serve stale data") {
    std::mt19937_64 rng(99);
    // Small caches force evictions and back-invalidations.
    CacheHierarchy c(4, {2048, 2, 64}, {2048, 2, 64}, {8192, 4, 64}, {}, true, nullptr);
    std::map<uint64_t, uint64_t> latest;
    std::map<std::pair<unsigned, uint64_t>, uint64_t> copy;
    uint64_t version = 0, stale = 0, violations = 0;
    for (int i = 0; i < 200000; ++i) {
      const unsigned core = static_cast<unsigned>(rng() % 4);
      const uint64_t line = 0x1000 + rng() % 300;
      const bool write = rng() % 3 == 0;
      const bool held = c.data_state(core, line) != LineState::I;
      if (held && copy[{core, line}] != latest[line]) ++stale;
      if (rng() % 8 == 0) c.access_inst(core, line, line);
      c.access_data(core, line, write, rng() % 16 == 0, line);
      if (write) latest[line] = ++version;
      copy[{core, line}] = latest[line];
      if (i % 64 == 0) violations += c.check_invariants();
    }
    CHECK(stale == 0);
    CHECK(violations == 0);
    CHECK(c.check_invariants() == 0);
  }

  TEST_CASE("non-coherent caches can hold stale copies") {
    CacheHierarchy c(2, {2048, 2, 64}, {2048, 2, 64}, {8192, 4, 64}, {}, false, nullptr);
    c.access_data(0, 5, false, false, 5);
    c.access_data(1, 5, true, false, 5);
    CHECK(c.data_state(0, 5) != LineState::I);
  }

  TEST_CASE("memory system: L1 hit refills the L0 without L2 traffic") {
    GuestMemory gm(kBase, 4 << 20);
    MemorySystem ms(gm, 1);
    ms.configure(MemoryModel::Cache, 64);
    TranslationRegime rg;
    const auto a = ms.data_access(0, kBase + 0x1000, AccessKind::Read, rg);
    REQUIRE(a.ok);
    CHECK(a.host == gm.host(kBase + 0x1000));
    CHECK(ms.core(0).l0d.lookup_read(kBase + 0x1000) == reinterpret_cast<uint64_t>(a.host));
    const auto l2_before = ms.caches()->l2_stats;
    ms.flush_l0(0);
    CHECK(ms.core(0).l0d.lookup_read(kBase + 0x1000) == 0);
    const auto b = ms.data_access(0, kBase + 0x1008, AccessKind::Read, rg);
    REQUIRE(b.ok);
    CHECK(ms.core(0).l0d.lookup_read(kBase + 0x1000) != 0);
    CHECK(ms.caches()->l2_stats.hits == l2_before.hits);
    CHECK(ms.caches()->l2_stats.misses == l2_before.misses);
    CHECK(b.latency == 0);
  }

  TEST_CASE("memory system: reads fill read-only L0 entries until a write") {
    GuestMemory gm(kBase, 4 << 20);
    MemorySystem ms(gm, 2);
    ms.configure(MemoryModel::Mesi, 64);
    TranslationRegime rg;
    ms.data_access(0, kBase, AccessKind::Read, rg);
    ms.data_access(1, kBase, AccessKind::Read, rg);
    ms.data_access(0, kBase, AccessKind::Read, rg);
    CHECK(ms.core(0).l0d.lookup_write(kBase) == 0);
    CHECK(ms.core(0).l0d.lookup_read(kBase) != 0);
    ms.data_access(1, kBase, AccessKind::Write, rg);
    CHECK(ms.core(1).l0d.lookup_write(kBase) != 0);
    CHECK(ms.core(0).l0d.lookup_read(kBase) == 0);  // invalidated with the L1 copy
    CHECK(ms.check_inclusion(0) == 0);
    CHECK(ms.check_inclusion(1) == 0);
  }

  TEST_CASE("memory system: store to a read-only page faults without filling the L0") {
    GuestMemory gm(kBase, 8 << 20);
    MemorySystem ms(gm, 1);
    ms.configure(MemoryModel::Tlb, 64);
    const uint64_t root = kBase + 0x100000, l1 = root + 0x1000, l0 = root + 0x2000;
    gm.write<uint64_t>(root, make_pte(l1, pte::kV));
    gm.write<uint64_t>(l1, make_pte(l0, pte::kV));
    gm.write<uint64_t>(l0 + 8, make_pte(0x80200000, pte::kV | pte::kR | pte::kA | pte::kD));
    TranslationRegime rg{(8ull << 60) | (root >> 12), Privilege::Supervisor};
    const auto w = ms.data_access(0, 0x1000, AccessKind::Write, rg);
    CHECK_FALSE(w.ok);
    CHECK(w.fault.code == static_cast<uint64_t>(Exception::StorePageFault));
    CHECK(ms.core(0).l0d.lookup_read(0x1000) == 0);
    CHECK(ms.data_access(0, 0x1000, AccessKind::Read, rg).ok);
    CHECK(ms.core(0).l0d.lookup_write(0x1000) == 0);
  }

  TEST_CASE("memory system: TLB evictions drop the matching L0 entries") {
    GuestMemory gm(kBase, 16 << 20);
    MemoryParams p;
    MemorySystem ms(gm, 1, p);
    ms.configure(MemoryModel::Tlb, 64);
    TranslationRegime rg;
    const unsigned sets = ms.core(0).dtlb.sets();
    // Pages that all land in TLB set 0: the fifth one evicts the first.
    for (unsigned i = 0; i < 12; ++i) {
      const uint64_t page = kBase + uint64_t(i) * sets * 4096;
      for (uint64_t off = 0; off < 4096; off += 64) ms.data_access(0, page + off, AccessKind::Read, rg);
      CHECK(ms.check_inclusion(0) == 0);
    }
    CHECK(ms.core(0).dtlb.stats.evictions > 0);
    CHECK(ms.core(0).l0d.lookup_read(kBase) == 0);
  }

  TEST_CASE("memory system: shadow checks agree after random activity") {
    GuestMemory gm(kBase, 16 << 20);
    MemorySystem ms(gm, 2);
    ms.configure(MemoryModel::Mesi, 64);
    TranslationRegime rg;
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50000; ++i) {
      const unsigned c = rng() % 2;
      const uint64_t va = kBase + (rng() % (1 << 20));
      const auto kind = rng() % 3 == 0 ? AccessKind::Write : AccessKind::Read;
      auto& l0 = ms.core(c).l0d;
      const uint64_t host = kind == AccessKind::Write ? l0.lookup_write(va) : l0.lookup_read(va);
      if (host)
        CHECK(ms.shadow_check(c, va, kind, rg, host));
      else
        REQUIRE(ms.data_access(c, va, kind, rg).ok);
    }
    CHECK(ms.core(0).stats.shadow_divergences == 0);
    CHECK(ms.check_inclusion(0) == 0);
    CHECK(ms.check_inclusion(1) == 0);
  }

  TEST_CASE("memory system: illegal model and line size combinations") {
    GuestMemory gm(kBase, 1 << 20);
    MemorySystem ms(gm, 1);
    CHECK(ms.valid_combination(MemoryModel::Atomic, 4096));
    CHECK(ms.valid_combination(MemoryModel::Tlb, 4096));
    CHECK_FALSE(ms.valid_combination(MemoryModel::Mesi, 4096));
    CHECK_FALSE(ms.valid_combination(MemoryModel::Atomic, 128));
    CHECK_THROWS_AS(ms.configure(MemoryModel::Cache, 4096), std::invalid_argument);
  }

  TEST_CASE("memory system: cache to MESI switch cold-starts the hierarchy") {
    GuestMemory gm(kBase, 4 << 20);
    MemorySystem ms(gm, 2);
    ms.configure(MemoryModel::Cache, 64);
    TranslationRegime rg;
    ms.data_access(0, kBase, AccessKind::Write, rg);
    ms.configure(MemoryModel::Mesi, 64);
    CHECK(ms.core(0).l0d.lookup_read(kBase) == 0);
    CHECK(ms.caches()->coherent());
    CHECK(ms.caches()->data_state(0, kBase >> 6) == LineState::I);
    CHECK(ms.caches()->check_invariants() == 0);
  }
}
