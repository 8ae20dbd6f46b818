#include "rvdbt/elf.hpp"

#include <elf.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>

namespace rvdbt {

std::optional<uint64_t> ElfImage::symbol(const std::string& name) const {
  auto it = symbols.find(name);
  if (it == symbols.end()) return std::nullopt;
  return it->second;
}

uint64_t ElfImage::end_vaddr() const {
  uint64_t end = 0;
  for (const auto& s : segments) end = std::max(end, s.vaddr + s.memsz);
  return end;
}

namespace {

template <typename T>
T read_at(std::span<const uint8_t> bytes, uint64_t off) {
  if (off > bytes.size() || bytes.size() - off < sizeof(T)) throw ElfError("truncated ELF file");
  T v;
  std::memcpy(&v, bytes.data() + off, sizeof(T));
  return v;
}

void read_symbols(std::span<const uint8_t> bytes, const Elf64_Ehdr& eh, ElfImage& img) {
  if (eh.e_shoff == 0 || eh.e_shnum == 0) return;
  for (unsigned i = 0; i < eh.e_shnum; ++i) {
    const auto sh = read_at<Elf64_Shdr>(bytes, eh.e_shoff + uint64_t(i) * eh.e_shentsize);
    if (sh.sh_type != SHT_SYMTAB || sh.sh_entsize != sizeof(Elf64_Sym)) continue;
    if (sh.sh_link >= eh.e_shnum) throw ElfError("symbol table has a bad string table link");
    const auto strtab = read_at<Elf64_Shdr>(bytes, eh.e_shoff + uint64_t(sh.sh_link) * eh.e_shentsize);
    if (strtab.sh_offset > bytes.size() || bytes.size() - strtab.sh_offset < strtab.sh_size)
      throw ElfError("truncated string table");
    const uint64_t count = sh.sh_size / sizeof(Elf64_Sym);
    for (uint64_t k = 1; k < count; ++k) {
      const auto sym = read_at<Elf64_Sym>(bytes, sh.sh_offset + k * sizeof(Elf64_Sym));
      if (sym.st_name == 0 || sym.st_name >= strtab.sh_size || sym.st_shndx == SHN_UNDEF) continue;
      const char* name = reinterpret_cast<const char*>(bytes.data() + strtab.sh_offset + sym.st_name);
      const size_t len = strnlen(name, strtab.sh_size - sym.st_name);
      img.symbols.emplace(std::string(name, len), sym.st_value);
    }
  }
}

}  // namespace

ElfImage parse_elf(std::span<const uint8_t> bytes) {
  if (bytes.size() < EI_NIDENT || std::memcmp(bytes.data(), ELFMAG, SELFMAG) != 0) throw ElfError("not an ELF file");
  if (bytes[EI_CLASS] != ELFCLASS64) throw ElfError("only 64-bit ELF files are supported");
  if (bytes[EI_DATA] != ELFDATA2LSB) throw ElfError("only little-endian ELF files are supported");
  const auto eh = read_at<Elf64_Ehdr>(bytes, 0);
  if (eh.e_machine != EM_RISCV) throw ElfError("ELF machine is not RISC-V");
  if (eh.e_type != ET_EXEC) throw ElfError("only static executables are supported");
  if (eh.e_phentsize != sizeof(Elf64_Phdr)) throw ElfError("unexpected program header size");

  ElfImage img;
  img.entry = eh.e_entry;
  for (unsigned i = 0; i < eh.e_phnum; ++i) {
    const auto ph = read_at<Elf64_Phdr>(bytes, eh.e_phoff + uint64_t(i) * eh.e_phentsize);
    if (ph.p_type == PT_INTERP) throw ElfError("dynamically linked executables are not supported");
    if (ph.p_type != PT_LOAD || ph.p_memsz == 0) continue;
    if (ph.p_filesz > ph.p_memsz) throw ElfError("segment file size exceeds memory size");
    if (ph.p_offset > bytes.size() || bytes.size() - ph.p_offset < ph.p_filesz) throw ElfError("truncated segment");
    ElfSegment seg;
    seg.vaddr = ph.p_vaddr;
    seg.paddr = ph.p_paddr;
    seg.memsz = ph.p_memsz;
    seg.flags = ph.p_flags;
    seg.data.assign(bytes.begin() + static_cast<ptrdiff_t>(ph.p_offset),
                    bytes.begin() + static_cast<ptrdiff_t>(ph.p_offset + ph.p_filesz));
    img.segments.push_back(std::move(seg));
  }
  if (img.segments.empty()) throw ElfError("no loadable segments");
  auto sorted = img.segments;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.vaddr < b.vaddr; });
  for (size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i - 1].vaddr + sorted[i - 1].memsz > sorted[i].vaddr) throw ElfError("overlapping segments");
  read_symbols(bytes, eh, img);
  return img;
}

ElfImage read_elf_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ElfError("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_elf(bytes);
}

}  // namespace rvdbt
