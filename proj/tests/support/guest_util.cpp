#include "guest_util.hpp"

#include <cstring>
#include <mutex>
#include <stdexcept>

namespace rvtest {

std::string guest_path(const std::string& name) { return std::string(RVDBT_GUEST_DIR) + "/" + name + ".elf"; }

const rvdbt::ElfImage& guest_image(const std::string& name) {
  static std::mutex mu;
  static std::map<std::string, rvdbt::ElfImage> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, rvdbt::read_elf_file(guest_path(name))).first;
  return it->second;
}

rvdbt::SimConfig test_config(unsigned cores, const std::string& pipeline, rvdbt::mem::MemoryModel memory) {
  rvdbt::SimConfig cfg;
  cfg.cores = cores;
  cfg.pipeline = {pipeline};
  cfg.memory = memory;
  cfg.echo_console = false;
  cfg.memory_size = 64ull << 20;
  cfg.deterministic = true;
  return cfg;
}

std::unique_ptr<rvdbt::Machine> load_machine(const rvdbt::SimConfig& cfg, const rvdbt::ElfImage& image,
                                             const std::map<std::string, uint64_t>& patches) {
  auto m = std::make_unique<rvdbt::Machine>(cfg);
  m->load(image);
  for (const auto& [name, value] : patches) {
    const auto addr = image.symbol(name);
    if (!addr) throw std::runtime_error("no symbol " + name);
    m->memory().write<uint64_t>(*addr, value);
  }
  return m;
}

uint64_t read_symbol(const rvdbt::Machine& m, const std::string& name) {
  const auto addr = m.image().symbol(name);
  if (!addr) throw std::runtime_error("no symbol " + name);
  return m.memory().read<uint64_t>(*addr);
}

std::unique_ptr<RefInterp> run_reference(const rvdbt::ElfImage& image, const std::map<std::string, uint64_t>& patches,
                                         uint64_t max_steps) {
  const uint64_t base = 0x80000000;
  const uint64_t size = ((image.end_vaddr() - base) + (1 << 20)) & ~uint64_t(0xfffff);
  auto ref = std::make_unique<RefInterp>(base, size);
  ref->load(image);
  for (const auto& [name, value] : patches) ref->write_u64(*image.symbol(name), value);
  ref->run(max_steps);
  return ref;
}

std::optional<uint64_t> first_difference(const rvdbt::Machine& m, const RefInterp& ref, uint64_t begin, uint64_t end,
                                         const std::vector<ByteRange>& skip) {
  for (uint64_t a = begin; a < end; ++a) {
    bool skipped = false;
    for (const auto& r : skip)
      if (a >= r.begin && a < r.end) {
        skipped = true;
        a = r.end - 1;
        break;
      }
    if (skipped) continue;
    if (m.memory().read<uint8_t>(a) != ref.mem[a - ref.base]) return a;
  }
  return std::nullopt;
}

rvdbt::ElfImage words_image(const std::vector<uint32_t>& words, uint64_t base) {
  rvdbt::ElfImage img;
  img.entry = base;
  rvdbt::ElfSegment text;
  text.vaddr = text.paddr = base;
  text.flags = 7;
  for (uint32_t w : words)
    for (int i = 0; i < 4; ++i) text.data.push_back(static_cast<uint8_t>(w >> (8 * i)));
  text.memsz = text.data.size();
  img.segments = {text};
  return img;
}

}  // namespace rvtest
