#include "rvdbt/guest_memory.hpp"

#include <sys/mman.h>

#include <new>
#include <stdexcept>

namespace rvdbt {

GuestMemory::GuestMemory(uint64_t base, uint64_t size) : base_(base), size_(size) {
  if (size == 0 || (size & 0xfff) != 0 || (base & 0xfff) != 0)
    throw std::invalid_argument("guest memory base and size must be nonzero multiples of 4 KiB");
  void* p = mmap(nullptr, size, PROT_READ | PROT_WRITE, MAP_PRIVATE | MAP_ANONYMOUS | MAP_NORESERVE, -1, 0);
  if (p == MAP_FAILED) throw std::bad_alloc();
  data_ = static_cast<uint8_t*>(p);
}

GuestMemory::~GuestMemory() {
  if (data_) munmap(data_, size_);
}

}  // namespace rvdbt
