#include "sfi/object.hpp"

namespace sfi {

const char* range_kind_name(RangeKind kind) {
  switch (kind) {
    case RangeKind::Startup: return "startup";
    case RangeKind::EntryPush: return "entry-push";
    case RangeKind::ReturnPop: return "return-pop";
    case RangeKind::PostCallRestore: return "post-call-restore";
  }
  return "?";
}

const TrustedRange* LayoutMeta::range_at(Word pc) const {
  for (const auto& r : trusted_ranges)
    if (r.contains(pc)) return &r;
  return nullptr;
}

bool LayoutMeta::in_code(Word pc) const {
  const Address a = decode_address(pc, cfg);
  auto it = code_lengths.find({static_cast<ComponentId>(a.component), a.slot});
  return it != code_lengths.end() && a.offset < it->second;
}

const std::pair<ComponentId, ProcId>* LayoutMeta::entry_at(Word addr) const {
  for (const auto& [key, ep] : entry_points)
    if (ep == addr) return &key;
  return nullptr;
}

const Instruction* MachineObject::fetch(Word pc) const {
  const Address a = decode_address(pc, cfg);
  if (a.is_data()) return nullptr;
  auto it = code.find({static_cast<ComponentId>(a.component), a.slot});
  if (it == code.end() || a.offset >= it->second.size()) return nullptr;
  return &it->second[a.offset];
}

}  // namespace sfi
