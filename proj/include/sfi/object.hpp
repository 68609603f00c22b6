#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sfi/isa.hpp"

namespace sfi {

// Address ranges whose instructions are part of the trusted runtime
// sequences. Only code inside these ranges may touch the protected stack.
enum class RangeKind : std::uint8_t {
  Startup,          // runtime boot code in component 0
  EntryPush,        // procedure entry: push return address, install tags
  ReturnPop,        // pop return address and jump through it
  PostCallRestore,  // re-install caller tags after a call returns
};

const char* range_kind_name(RangeKind kind);

struct TrustedRange {
  Word begin = 0;  // inclusive
  Word end = 0;    // exclusive
  RangeKind kind = RangeKind::Startup;

  bool contains(Word addr) const { return addr >= begin && addr < end; }
  bool operator==(const TrustedRange&) const = default;
};

struct BlockPlacement {
  Word slot = 0;  // odd
  Word base = 0;  // offset of the block's first word within the slot
  bool operator==(const BlockPlacement&) const = default;
};

// Register assignments recorded in every object so downstream tools never
// assume the toolchain defaults.
struct RegisterConventions {
  Reg arg = kRegArg;
  Reg ra = kRegRa;
  Reg sfi = kRegSfi;
  Reg mask_data = kRegMaskData;
  Reg mask_code = kRegMaskCode;
  Reg tag_data = kRegTagData;
  Reg tag_code = kRegTagCode;
  Reg sp_prot = kRegSpProt;
  Reg allocatable = kAllocatableRegisters;
  bool operator==(const RegisterConventions&) const = default;
};

// Everything the checkers and the disassembler need to interpret a laid-out
// object: entry points, trusted ranges, data block placement, the interface
// tables, and the runtime anchors.
struct LayoutMeta {
  BitConfig cfg;
  std::map<std::pair<ComponentId, ProcId>, Word> entry_points;
  std::vector<TrustedRange> trusted_ranges;
  std::map<std::pair<ComponentId, BlockId>, BlockPlacement> block_map;
  std::map<ComponentId, std::set<std::pair<ComponentId, ProcId>>> imports;
  std::map<ComponentId, std::set<ProcId>> exports;
  // Laid-out length of each code slot, keyed by (component, slot).
  std::map<std::pair<ComponentId, Word>, Word> code_lengths;
  RegisterConventions regs;
  Word protected_stack_base = 0;  // encode(0, slot 1, 0)
  Word halt_anchor = 0;           // the startup Halt the final return lands on
  std::pair<ComponentId, ProcId> main{0, 0};

  const TrustedRange* range_at(Word pc) const;
  bool in_code(Word pc) const;  // pc names a laid-out code word
  // Reverse entry-point lookup; returns nullptr if addr is not an entry.
  const std::pair<ComponentId, ProcId>* entry_at(Word addr) const;

  bool operator==(const LayoutMeta&) const = default;
};

// Compiled program: per-(component, slot) code and initial data images plus
// layout metadata. Code is immutable at run time; the simulator fetches from
// here, never from data memory.
struct MachineObject {
  BitConfig cfg;
  std::map<std::pair<ComponentId, Word>, std::vector<Instruction>> code;
  std::map<std::pair<ComponentId, Word>, std::vector<Word>> data_init;
  LayoutMeta meta;

  const Instruction* fetch(Word pc) const;

  bool operator==(const MachineObject&) const = default;
};

}  // namespace sfi
