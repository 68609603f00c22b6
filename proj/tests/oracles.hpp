#pragma once

// Independent oracles for the test suites. Everything here recomputes
// expected values by a different route than the implementation under test:
// arithmetic composition instead of shift-or, per-bit mask construction
// instead of complement formulas, log replay instead of simulator state.

#include <cstdint>
#include <optional>
#include <vector>

#include "sfi/backend.hpp"
#include "sfi/checkers.hpp"
#include "sfi/formats.hpp"
#include "sfi/fuzz.hpp"
#include "sfi/ir.hpp"
#include "sfi/machine.hpp"

namespace oracles {

using namespace sfi;

// Address composition by multiplication and addition.
inline Word encode_arith(Word component, Word slot, Word offset,
                         const BitConfig& cfg) {
  const Word comp_unit = Word{1} << cfg.offset_bits;
  const Word slot_unit = Word{1} << (cfg.offset_bits + cfg.component_bits);
  return offset + component * comp_unit + slot * slot_unit;
}

// Field extraction by division and remainder.
struct Fields {
  Word offset, component, slot;
};
inline Fields decode_arith(Word raw, const BitConfig& cfg) {
  const Word comp_unit = Word{1} << cfg.offset_bits;
  const Word slot_unit = Word{1} << (cfg.offset_bits + cfg.component_bits);
  return {raw % comp_unit, (raw / comp_unit) % (slot_unit / comp_unit),
          raw / slot_unit};
}

// Bit-by-bit reference for the store sandbox: keep offset and high slot
// bits, force the component field, force the slot LSB on.
inline Word store_sandbox_bitwise(Word a, Word component,
                                  const BitConfig& cfg) {
  Word out = 0;
  for (std::uint32_t bit = 0; bit < cfg.word_bits; ++bit) {
    const Word mask = Word{1} << bit;
    bool value;
    if (bit < cfg.offset_bits) {
      value = (a & mask) != 0;
    } else if (bit < cfg.offset_bits + cfg.component_bits) {
      value = (component & (Word{1} << (bit - cfg.offset_bits))) != 0;
    } else if (bit == cfg.offset_bits + cfg.component_bits) {
      value = true;  // slot LSB: odd, data
    } else {
      value = (a & mask) != 0;
    }
    if (value) out |= mask;
  }
  return out;
}

// Likewise for jumps: clear the low bundle bits, force the component field,
// force the slot LSB off.
inline Word jump_sandbox_bitwise(Word a, Word component, const BitConfig& cfg) {
  Word out = 0;
  for (std::uint32_t bit = 0; bit < cfg.word_bits; ++bit) {
    const Word mask = Word{1} << bit;
    bool value;
    if (bit < cfg.bundle_bits) {
      value = false;
    } else if (bit < cfg.offset_bits) {
      value = (a & mask) != 0;
    } else if (bit < cfg.offset_bits + cfg.component_bits) {
      value = (component & (Word{1} << (bit - cfg.offset_bits))) != 0;
    } else if (bit == cfg.offset_bits + cfg.component_bits) {
      value = false;  // slot LSB: even, code
    } else {
      value = (a & mask) != 0;
    }
    if (value) out |= mask;
  }
  return out;
}

// Replays the protected-stack traffic visible in a log: entry pushes add a
// frame, return pops remove one. Returns the depth profile.
struct StackProfile {
  std::vector<Word> pushed_values;
  std::size_t max_depth = 0;
  std::size_t final_depth = 0;
  bool lifo = true;
};

inline StackProfile replay_protected_stack(const ExecutionLog& log,
                                           const LayoutMeta& meta) {
  StackProfile profile;
  std::vector<Word> stack;
  for (const auto& event : log) {
    if (const auto* st = std::get_if<StoreEvent>(&event)) {
      const TrustedRange* r = meta.range_at(st->pc);
      if (r != nullptr && r->kind == RangeKind::EntryPush) {
        stack.push_back(st->value);
        profile.pushed_values.push_back(st->value);
        profile.max_depth = std::max(profile.max_depth, stack.size());
      }
    } else if (const auto* tr = std::get_if<TransferEvent>(&event)) {
      if (tr->kind != TransferKind::JumpReg) continue;
      const TrustedRange* r = meta.range_at(tr->pc);
      if (r != nullptr && r->kind == RangeKind::ReturnPop) {
        if (stack.empty() || stack.back() != tr->target) profile.lifo = false;
        if (!stack.empty()) stack.pop_back();
      }
    }
  }
  profile.final_depth = stack.size();
  return profile;
}

// Reconstructs the pc sequence a log implies: sequential execution except
// where a transfer or halt event says otherwise. Returns the number of
// steps replayed, or nullopt if the log disagrees with the code layout.
inline std::optional<Word> replay_pc_sequence(const MachineObject& object,
                                              const ExecutionLog& log,
                                              Word expected_steps) {
  Word pc = 0;
  std::size_t next_event = 0;
  for (Word step = 0; step < expected_steps; ++step) {
    if (object.fetch(pc) == nullptr) return std::nullopt;
    while (next_event < log.size() &&
           std::holds_alternative<InjectEvent>(log[next_event]) &&
           event_step(log[next_event]) <= step)
      ++next_event;
    bool transferred = false;
    if (next_event < log.size() && event_step(log[next_event]) == step) {
      const LogEvent& ev = log[next_event];
      if (const auto* tr = std::get_if<TransferEvent>(&ev)) {
        if (tr->pc != pc) return std::nullopt;
        pc = tr->target;
        transferred = true;
        ++next_event;
      } else if (const auto* h = std::get_if<HaltEvent>(&ev)) {
        if (h->pc != pc) return std::nullopt;
        return step + 1;  // halted; pc freezes
      } else if (const auto* st = std::get_if<StoreEvent>(&ev)) {
        if (st->pc != pc) return std::nullopt;
        ++next_event;
      }
    }
    if (!transferred) pc += 1;
  }
  return expected_steps;
}

// Parses, validates and returns an IR program; throws (failing the test)
// on any well-formedness error.
inline ir::IRProgram parse_program(const std::string& source) {
  ir::IRProgram program = text::parse_ir(source);
  const auto errors = ir::validate(program);
  if (!errors.empty())
    throw std::runtime_error("test program invalid: " +
                             errors.front().message());
  return program;
}

}  // namespace oracles
