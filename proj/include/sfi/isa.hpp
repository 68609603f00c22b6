#pragma once

#include <cstdint>
#include <variant>

#include "sfi/errors.hpp"

namespace sfi {

using Word = std::uint64_t;
using Reg = std::uint8_t;
using ComponentId = std::uint32_t;
using ProcId = std::uint32_t;
using BlockId = std::uint32_t;
using LabelId = std::uint32_t;

// Address bit layout and machine word width. A physical address is, from
// the least significant bit up: in-slot offset, component identifier, slot
// identifier. Data slots are odd, code slots are even; the slot parity is
// what the store/jump masks pin down.
struct BitConfig {
  std::uint32_t offset_bits = 12;
  std::uint32_t component_bits = 4;
  std::uint32_t bundle_bits = 4;  // low offset bits zeroed by jump masking
  std::uint32_t word_bits = 64;

  constexpr Word word_mask() const {
    return word_bits >= 64 ? ~Word{0} : ((Word{1} << word_bits) - 1);
  }
  constexpr Word offset_mask() const { return (Word{1} << offset_bits) - 1; }
  constexpr Word component_mask() const {
    return (Word{1} << component_bits) - 1;
  }
  constexpr std::uint32_t slot_shift() const {
    return offset_bits + component_bits;
  }
  constexpr std::uint32_t slot_bits() const { return word_bits - slot_shift(); }
  constexpr Word bundle_size() const { return Word{1} << bundle_bits; }
  constexpr Word slot_capacity() const { return Word{1} << offset_bits; }
  // Usable component ids are 1 .. max_components(); id 0 is the runtime.
  constexpr Word max_components() const { return component_mask(); }

  // Bits cleared by both masks: the component field plus the slot LSB.
  constexpr Word component_field() const {
    return component_mask() << offset_bits;
  }
  constexpr Word slot_lsb() const { return Word{1} << slot_shift(); }

  bool valid() const {
    return offset_bits >= bundle_bits && bundle_bits >= 1 &&
           offset_bits + component_bits < word_bits && word_bits <= 64;
  }
  void require_valid() const {
    if (!valid()) throw Error("invalid bit configuration");
  }

  bool operator==(const BitConfig&) const = default;
};

// Decoded view of a raw address under a BitConfig.
struct Address {
  Word raw = 0;
  Word offset = 0;
  Word component = 0;
  Word slot = 0;

  bool is_data() const { return (slot & 1) != 0; }
  bool is_code() const { return (slot & 1) == 0; }
};

Address decode_address(Word raw, const BitConfig& cfg);

// Composes an address from its fields. Throws FieldOverflow naming the
// violating field if any value does not fit.
Word encode_address(Word component, Word slot, Word offset,
                    const BitConfig& cfg);

bool bundle_aligned(Word addr, const BitConfig& cfg);

// An AND/OR constant pair. apply() is the effect of the two-instruction
// sandboxing sequence: AND with mask, then OR with tag.
struct MaskTag {
  Word mask = 0;
  Word tag = 0;
  Word apply(Word a) const { return (a & mask) | tag; }
  bool operator==(const MaskTag&) const = default;
};

// Store sandboxing: forces the component field to `component` and sets the
// slot LSB, so the result is always a data address of that component.
// Component 0 is reserved for the runtime and rejected.
MaskTag store_mask_constants(Word component, const BitConfig& cfg);

// Jump sandboxing: forces the component field, clears the slot LSB, and
// clears the low bundle_bits of the offset, so the result is always a
// bundle-aligned code address of that component.
MaskTag jump_mask_constants(Word component, const BitConfig& cfg);

// Register conventions. r0..r24 are allocatable; the rest are reserved for
// the sandboxing instrumentation and the protected stack.
inline constexpr Reg kNumRegisters = 32;
inline constexpr Reg kAllocatableRegisters = 25;
inline constexpr Reg kRegArg = 3;  // argument/return-value register
inline constexpr Reg kRegRa = 25;
inline constexpr Reg kRegSfi = 26;  // sandbox scratch
inline constexpr Reg kRegMaskData = 27;
inline constexpr Reg kRegMaskCode = 28;
inline constexpr Reg kRegTagData = 29;
inline constexpr Reg kRegTagCode = 30;
inline constexpr Reg kRegSpProt = 31;  // protected stack pointer

enum class BinaryOp : std::uint8_t {
  Add,
  Sub,
  Mul,
  Eq,
  Leq,
  BitAnd,
  BitOr,
  ShiftLeft,
};

const char* binary_op_name(BinaryOp op);

// Word arithmetic shared by the machine and the reference interpreter.
// Everything wraps to word_bits; shifts of word_bits or more yield 0.
Word eval_binary_op(BinaryOp op, Word a, Word b, const BitConfig& cfg);

// One instruction occupies one addressable code word.
struct Nop {
  bool operator==(const Nop&) const = default;
};
struct Const {
  Word imm;
  Reg rd;
  bool operator==(const Const&) const = default;
};
struct Mov {
  Reg rs, rd;
  bool operator==(const Mov&) const = default;
};
struct BinOp {
  BinaryOp op;
  Reg rs1, rs2, rd;
  bool operator==(const BinOp&) const = default;
};
struct Load {
  Reg rp, rd;
  bool operator==(const Load&) const = default;
};
struct Store {
  Reg rp, rs;  // mem[rp] <- rs
  bool operator==(const Store&) const = default;
};
struct Bnz {
  Reg rs;
  std::int64_t rel;  // taken: pc <- pc + rel
  bool operator==(const Bnz&) const = default;
};
struct Jump {
  Reg rt;  // the only computed control transfer
  bool operator==(const Jump&) const = default;
};
struct Jal {
  Word target;  // direct immediate; link goes to R_RA
  bool operator==(const Jal&) const = default;
};
struct Halt {
  bool operator==(const Halt&) const = default;
};

using Instruction =
    std::variant<Nop, Const, Mov, BinOp, Load, Store, Bnz, Jump, Jal, Halt>;

}  // namespace sfi
