#include "sfi/checkers.hpp"

#include <map>
#include <sstream>

namespace sfi::checkers {

namespace {

std::string hex(Word w) {
  std::ostringstream os;
  os << "0x" << std::hex << w;
  return os.str();
}

void require_known_pc(const LayoutMeta& meta, Word pc) {
  if (!meta.in_code(pc))
    throw MetaMismatch("log pc " + hex(pc) +
                       " is not covered by the object's code map");
}

std::map<Word, std::pair<ComponentId, ProcId>> entry_index(
    const LayoutMeta& meta) {
  std::map<Word, std::pair<ComponentId, ProcId>> index;
  for (const auto& [key, addr] : meta.entry_points) index[addr] = key;
  return index;
}

}  // namespace

Verdict check_store(const ExecutionLog& log, const LayoutMeta& meta) {
  const BitConfig& cfg = meta.cfg;
  Verdict verdict;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto* ev = std::get_if<StoreEvent>(&log[i]);
    if (ev == nullptr) continue;
    require_known_pc(meta, ev->pc);
    verdict.events_checked += 1;

    const Address target = decode_address(ev->target, cfg);
    const TrustedRange* range = meta.range_at(ev->pc);
    if (range != nullptr) {
      if (target.component != 0 || target.slot != 1)
        verdict.violations.push_back(
            {1, ev->step, ev->pc, i, ev->target,
             "trusted store outside the protected stack: " + hex(ev->target)});
      continue;
    }
    const Address at = decode_address(ev->pc, cfg);
    if (target.component != at.component || !target.is_data())
      verdict.violations.push_back(
          {1, ev->step, ev->pc, i, ev->target,
           "component " + std::to_string(at.component) + " wrote " +
               hex(ev->target) + " (component " +
               std::to_string(target.component) + ", " +
               (target.is_data() ? "data" : "code") + " slot)"});
  }
  return verdict;
}

Verdict check_jump(const ExecutionLog& log, const LayoutMeta& meta) {
  const BitConfig& cfg = meta.cfg;
  const auto entries = entry_index(meta);
  const Word main_entry = meta.entry_points.count(meta.main)
                              ? meta.entry_points.at(meta.main)
                              : 0;
  Verdict verdict;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto* ev = std::get_if<TransferEvent>(&log[i]);
    if (ev == nullptr) continue;
    require_known_pc(meta, ev->pc);
    verdict.events_checked += 1;

    const Address at = decode_address(ev->pc, cfg);
    const Address target = decode_address(ev->target, cfg);
    const TrustedRange* range = meta.range_at(ev->pc);

    switch (ev->kind) {
      case TransferKind::JumpReg: {
        if (range != nullptr && range->kind == RangeKind::ReturnPop)
          break;  // cross-component by design; invariant 3's concern
        if (target.component != at.component || !target.is_code() ||
            !bundle_aligned(ev->target, cfg))
          verdict.violations.push_back(
              {2, ev->step, ev->pc, i, ev->target,
               "computed jump from component " + std::to_string(at.component) +
                   " to " + hex(ev->target)});
        break;
      }
      case TransferKind::JalDirect: {
        if (range != nullptr && range->kind == RangeKind::Startup) {
          if (ev->target != main_entry)
            verdict.violations.push_back({2, ev->step, ev->pc, i, ev->target,
                                          "startup call left the main entry"});
          break;
        }
        if (target.component == at.component && meta.in_code(ev->target))
          break;
        auto entry = entries.find(ev->target);
        const auto imports = meta.imports.find(
            static_cast<ComponentId>(at.component));
        if (entry != entries.end() && imports != meta.imports.end() &&
            imports->second.count(entry->second))
          break;
        verdict.violations.push_back(
            {2, ev->step, ev->pc, i, ev->target,
             "direct call from component " + std::to_string(at.component) +
                 " to " + hex(ev->target) + " (not own code, not imported)"});
        break;
      }
      case TransferKind::BnzTaken: {
        auto len = meta.code_lengths.find(
            {static_cast<ComponentId>(at.component), at.slot});
        const bool in_slot = target.component == at.component &&
                             target.slot == at.slot &&
                             len != meta.code_lengths.end() &&
                             target.offset < len->second;
        if (!in_slot)
          verdict.violations.push_back(
              {2, ev->step, ev->pc, i, ev->target,
               "branch left its procedure slot: " + hex(ev->target)});
        break;
      }
    }
  }
  return verdict;
}

Verdict check_stack(const ExecutionLog& log, const LayoutMeta& meta) {
  const auto entries = entry_index(meta);
  Verdict verdict;
  std::vector<Word> shadow;

  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto* ev = std::get_if<TransferEvent>(&log[i]);
    if (ev == nullptr) continue;
    require_known_pc(meta, ev->pc);

    if (ev->kind == TransferKind::JalDirect) {
      // Every entry sequence pushes the caller's return address; mirror it.
      if (entries.count(ev->target)) {
        shadow.push_back(ev->pc + 1);
        verdict.events_checked += 1;
      }
      continue;
    }
    if (ev->kind != TransferKind::JumpReg) continue;
    const TrustedRange* range = meta.range_at(ev->pc);
    if (range == nullptr || range->kind != RangeKind::ReturnPop) continue;
    verdict.events_checked += 1;

    if (shadow.empty()) {
      if (ev->target != meta.halt_anchor)
        verdict.violations.push_back(
            {3, ev->step, ev->pc, i, ev->target,
             "pop from empty control stack to " + hex(ev->target)});
      continue;
    }
    if (ev->target == shadow.back()) {
      shadow.pop_back();
    } else {
      verdict.violations.push_back(
          {3, ev->step, ev->pc, i, ev->target,
           "return to " + hex(ev->target) + ", expected " +
               hex(shadow.back())});
      // Keep replaying from the attacker-visible state: treat the bogus
      // return as a pop so one corrupted frame yields one violation.
      shadow.pop_back();
    }
  }
  return verdict;
}

AllVerdicts check_all(const ExecutionLog& log, const LayoutMeta& meta) {
  return {check_store(log, meta), check_jump(log, meta),
          check_stack(log, meta)};
}

}  // namespace sfi::checkers
