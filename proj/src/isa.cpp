#include "sfi/isa.hpp"

namespace sfi {

Address decode_address(Word raw, const BitConfig& cfg) {
  raw &= cfg.word_mask();
  Address a;
  a.raw = raw;
  a.offset = raw & cfg.offset_mask();
  a.component = (raw >> cfg.offset_bits) & cfg.component_mask();
  a.slot = raw >> cfg.slot_shift();
  return a;
}

Word encode_address(Word component, Word slot, Word offset,
                    const BitConfig& cfg) {
  if (offset > cfg.offset_mask())
    throw FieldOverflow("offset", offset, cfg.offset_bits);
  if (component > cfg.component_mask())
    throw FieldOverflow("component", component, cfg.component_bits);
  if (cfg.slot_bits() < 64 && slot >= (Word{1} << cfg.slot_bits()))
    throw FieldOverflow("slot", slot, cfg.slot_bits());
  return offset | (component << cfg.offset_bits) | (slot << cfg.slot_shift());
}

bool bundle_aligned(Word addr, const BitConfig& cfg) {
  return (addr & (cfg.bundle_size() - 1)) == 0;
}

static void require_component(Word component, const BitConfig& cfg) {
  if (component == 0)
    throw Error("component 0 is reserved for the runtime");
  if (component > cfg.component_mask())
    throw FieldOverflow("component", component, cfg.component_bits);
}

MaskTag store_mask_constants(Word component, const BitConfig& cfg) {
  require_component(component, cfg);
  MaskTag mt;
  mt.mask = ~(cfg.component_field() | cfg.slot_lsb()) & cfg.word_mask();
  mt.tag = (component << cfg.offset_bits) | cfg.slot_lsb();
  return mt;
}

MaskTag jump_mask_constants(Word component, const BitConfig& cfg) {
  require_component(component, cfg);
  MaskTag mt;
  mt.mask = ~(cfg.component_field() | cfg.slot_lsb() | (cfg.bundle_size() - 1)) &
            cfg.word_mask();
  mt.tag = component << cfg.offset_bits;
  return mt;
}

const char* binary_op_name(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "add";
    case BinaryOp::Sub: return "sub";
    case BinaryOp::Mul: return "mul";
    case BinaryOp::Eq: return "eq";
    case BinaryOp::Leq: return "leq";
    case BinaryOp::BitAnd: return "and";
    case BinaryOp::BitOr: return "or";
    case BinaryOp::ShiftLeft: return "shl";
  }
  return "?";
}

Word eval_binary_op(BinaryOp op, Word a, Word b, const BitConfig& cfg) {
  const Word m = cfg.word_mask();
  switch (op) {
    case BinaryOp::Add: return (a + b) & m;
    case BinaryOp::Sub: return (a - b) & m;
    case BinaryOp::Mul: return (a * b) & m;
    case BinaryOp::Eq: return a == b ? 1 : 0;
    case BinaryOp::Leq: return a <= b ? 1 : 0;
    case BinaryOp::BitAnd: return a & b;
    case BinaryOp::BitOr: return a | b;
    case BinaryOp::ShiftLeft:
      return b >= cfg.word_bits ? 0 : (a << b) & m;
  }
  return 0;
}

}  // namespace sfi
