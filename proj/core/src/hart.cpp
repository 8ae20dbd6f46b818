#include "rvdbt/hart.hpp"

#include "rvdbt/csr.hpp"
#include "rvdbt/machine.hpp"

namespace rvdbt {

namespace {

bool same(const mem::TranslationRegime& a, const mem::TranslationRegime& b) {
  return a.satp == b.satp && a.priv == b.priv && a.sum == b.sum && a.mxr == b.mxr;
}

}  // namespace

Hart::Hart(Machine& m, unsigned index) : machine(m), memsys(m.memsys()), cm(m.memsys().core(index)) {
  ctx.core_index = index;
  shadow_l0 = m.config().shadow_l0;
}

void Hart::update_regimes() {
  const uint64_t s = csr.mstatus;
  mem::TranslationRegime f{csr.satp, priv, (s & mstatus::kSum) != 0, (s & mstatus::kMxr) != 0};
  mem::TranslationRegime d = f;
  if (priv == Privilege::Machine && (s & mstatus::kMprv)) {
    const unsigned mpp = static_cast<unsigned>((s & mstatus::kMpp) >> mstatus::kMppShift);
    d.priv = mpp == 3 ? Privilege::Machine : mpp == 1 ? Privilege::Supervisor : Privilege::User;
  }
  // L0 entries carry no privilege or permission context, so they cannot
  // survive a change of regime when either side translates.
  const bool relevant = f.translated() || d.translated() || fetch_regime.translated() || data_regime.translated();
  if (relevant && (!same(f, fetch_regime) || !same(d, data_regime))) memsys.flush_l0(id());
  fetch_regime = f;
  data_regime = d;
  context = xlat::context_key(priv, csr.satp);
}

void Hart::set_model(unsigned model, const pipeline::PipelineParams& params) {
  this->model = pipeline::registry().create(model, params);
  model_id = model;
}

void Hart::reset(uint64_t entry) {
  std::fill(std::begin(x), std::end(x), 0);
  pc = entry;
  priv = Privilege::Machine;
  csr = {};
  csr.mcounteren = 7;
  csr.scounteren = 7;
  minstret = 0;
  mip.store(0);
  wait.store(WaitState::None);
  entered_taken = true;
  consecutive_traps = 0;
  deferred = 0;
  futex_addr = 0;
  clear_child_tid = 0;
  fetch_regime = {};
  data_regime = {};
  update_regimes();
}

}  // namespace rvdbt
