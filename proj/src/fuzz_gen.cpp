#include <algorithm>
#include <random>
#include <stdexcept>

#include "sfi/fuzz.hpp"

namespace sfi::fuzz {

const char* gen_mode_name(GenMode mode) {
  return mode == GenMode::WellBehaved ? "wellbehaved" : "wild";
}

namespace {

// mt19937_64 plus modulo sampling: portable determinism matters more here
// than perfect uniformity.
struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  Word word() { return engine(); }
  Word below(Word n) { return n == 0 ? 0 : engine() % n; }
  std::uint32_t in_range(Range r) {
    return r.min + static_cast<std::uint32_t>(below(r.max - r.min + 1));
  }
  bool chance(std::uint32_t percent) { return below(100) < percent; }
};

enum class Kind {
  Konst,
  Mov,
  BinOpK,
  LoadK,
  StoreK,
  BnzK,
  JumpK,
  JalK,
  CallK,
  RetK,
  NopK
};

// What the generator statically knows about a register. WellBehaved code
// only feeds Int registers to arithmetic, conditions, stored values and the
// argument register, and only in-range Ptr registers to loads and stores,
// so no execution path reaches undefined behavior.
enum class RK : std::uint8_t { Unknown, Int, Ptr, Label };
struct RState {
  RK kind = RK::Unknown;
  BlockId block = 0;
  Word offset = 0;
};

struct BodyGen {
  Rng& rng;
  const GenConfig& cfg;
  const ir::IRComponent& comp;
  std::vector<std::pair<ComponentId, ProcId>> call_targets;
  std::vector<std::pair<BlockId, Word>> blocks;  // (id, size)
  std::uint32_t label_count;
  std::vector<ir::IRInstr> body;
  std::array<RState, kAllocatableRegisters> state{};

  bool wild() const { return cfg.mode == GenMode::Wild; }

  void reset_state() { state.fill(RState{}); }

  Reg pick_reg() { return static_cast<Reg>(rng.below(kAllocatableRegisters)); }

  Reg pick_reg_except(Reg avoid) {
    Reg r = pick_reg();
    while (r == avoid) r = pick_reg();
    return r;
  }

  std::vector<Reg> regs_with(RK kind) {
    std::vector<Reg> out;
    for (Reg r = 0; r < kAllocatableRegisters; ++r)
      if (state[r].kind == kind) out.push_back(r);
    return out;
  }

  Word int_value() {
    switch (rng.below(4)) {
      case 0: return rng.below(8);
      case 1: return rng.below(256);
      case 2: return rng.below(Word{1} << 16);
      default: return rng.word();
    }
  }

  // Words whose masked forms tend to land in laid-out slots.
  Word garbage_word() {
    switch (rng.below(4)) {
      case 0: return rng.below(64);
      case 1: return rng.below(Word{1} << 13);  // nearby components
      case 2: return rng.below(Word{1} << 18);  // low slots
      default: return rng.word();
    }
  }

  void set_int(Reg r) { state[r] = {RK::Int, 0, 0}; }

  Reg emit_int_const(Reg rd, Word value) {
    body.push_back(ir::IConst{ir::IntLit{value}, rd});
    set_int(rd);
    return rd;
  }

  Reg ensure_int(Reg avoid = kAllocatableRegisters) {
    auto ints = regs_with(RK::Int);
    std::erase(ints, avoid);
    if (!ints.empty()) return ints[rng.below(ints.size())];
    Reg rd = pick_reg();
    while (rd == avoid) rd = pick_reg();
    return emit_int_const(rd, int_value());
  }

  Reg emit_ptr_const(Reg rd) {
    const auto& [block, size] = blocks[rng.below(blocks.size())];
    const Word offset = rng.below(size);
    body.push_back(ir::IConst{ir::DataRef{block, offset}, rd});
    state[rd] = {RK::Ptr, block, offset};
    return rd;
  }

  Reg ensure_ptr() {
    auto ptrs = regs_with(RK::Ptr);
    if (!ptrs.empty()) return ptrs[rng.below(ptrs.size())];
    return emit_ptr_const(pick_reg());
  }

  LabelId pick_label() {
    return static_cast<LabelId>(rng.below(label_count));
  }

  Word block_size(BlockId id) const {
    for (const auto& [b, size] : blocks)
      if (b == id) return size;
    return 0;
  }

  // Any register, regardless of what it holds. Wild-only escape hatch.
  Reg any_reg() { return pick_reg(); }

  void gen_const() {
    const Reg rd = pick_reg();
    switch (rng.below(3)) {
      case 0: emit_int_const(rd, int_value()); break;
      case 1:
        if (!blocks.empty()) {
          emit_ptr_const(rd);
          break;
        }
        [[fallthrough]];
      default:
        body.push_back(ir::IConst{ir::LabelRef{pick_label()}, rd});
        state[rd] = {RK::Label, 0, 0};
    }
  }

  void gen_mov() {
    const Reg rs = pick_reg();
    const Reg rd = pick_reg();
    body.push_back(ir::IMov{rs, rd});
    state[rd] = state[rs];
  }

  void gen_binop() {
    if (!blocks.empty() && rng.chance(30)) {
      // In-range pointer arithmetic: materialize the delta, then add or
      // subtract it so the tracked offset stays inside the block.
      const Reg p = ensure_ptr();
      const RState ps = state[p];
      const Word size = block_size(ps.block);
      const bool sub = rng.chance(50);
      const Word delta = sub ? rng.below(ps.offset + 1)
                             : (size > ps.offset ? rng.below(size - ps.offset)
                                                 : 0);
      const Reg rt = pick_reg_except(p);
      emit_int_const(rt, delta);
      const Reg rd = pick_reg();
      body.push_back(
          ir::IBinOp{sub ? BinaryOp::Sub : BinaryOp::Add, p, rt, rd});
      state[rd] = {RK::Ptr, ps.block,
                   sub ? ps.offset - delta : ps.offset + delta};
      return;
    }
    static constexpr BinaryOp kOps[] = {
        BinaryOp::Add, BinaryOp::Sub,    BinaryOp::Mul,   BinaryOp::Eq,
        BinaryOp::Leq, BinaryOp::BitAnd, BinaryOp::BitOr, BinaryOp::ShiftLeft};
    const BinaryOp op = kOps[rng.below(8)];
    const Reg a = wild() && rng.chance(30) ? any_reg() : ensure_int();
    const Reg b = wild() && rng.chance(30) ? any_reg() : ensure_int();
    const Reg rd = pick_reg();
    body.push_back(ir::IBinOp{op, a, b, rd});
    set_int(rd);
    if (wild()) state[rd] = {RK::Unknown, 0, 0};
  }

  Reg wild_address_reg() {
    switch (rng.below(3)) {
      case 0: return any_reg();
      case 1: {
        const Reg rd = pick_reg();
        emit_int_const(rd, garbage_word());
        return rd;
      }
      default: {
        if (blocks.empty()) return any_reg();
        // Pointer pushed far out of range; the mask decides where it lands.
        const Reg p = ensure_ptr();
        const Reg rt = pick_reg_except(p);  // sequenced: rng call order matters
        emit_int_const(rt, garbage_word());
        const Reg rd = pick_reg();
        body.push_back(ir::IBinOp{BinaryOp::Add, p, rt, rd});
        state[rd] = {RK::Unknown, 0, 0};
        return rd;
      }
    }
  }

  void gen_load() {
    if (blocks.empty() && !wild()) return gen_const();
    const Reg rp = wild() && (blocks.empty() || rng.chance(50))
                       ? wild_address_reg()
                       : ensure_ptr();
    const Reg rd = pick_reg();
    body.push_back(ir::ILoad{rp, rd});
    // WellBehaved memory only ever holds integers.
    if (!wild()) set_int(rd);
    else state[rd] = {RK::Unknown, 0, 0};
  }

  void gen_store() {
    if (blocks.empty() && !wild()) return gen_const();
    const Reg rp = wild() && (blocks.empty() || rng.chance(60))
                       ? wild_address_reg()
                       : ensure_ptr();
    const Reg rs = wild() && rng.chance(40) ? any_reg() : ensure_int(rp);
    body.push_back(ir::IStore{rp, rs});
  }

  void gen_bnz() {
    const Reg rs = wild() && rng.chance(40) ? any_reg() : ensure_int();
    body.push_back(ir::IBnz{rs, pick_label()});
  }

  void gen_jump() {
    Reg rt;
    if (wild() && rng.chance(60)) {
      rt = wild_address_reg();
    } else {
      rt = pick_reg();
      body.push_back(ir::IConst{ir::LabelRef{pick_label()}, rt});
      state[rt] = {RK::Label, 0, 0};
    }
    body.push_back(ir::IJump{rt});
  }

  void gen_jal() { body.push_back(ir::IJal{pick_label()}); }

  void gen_call() {
    const auto& [c, p] = call_targets[rng.below(call_targets.size())];
    if (!wild() || rng.chance(50)) emit_int_const(kRegArg, int_value());
    body.push_back(ir::ICall{c, p});
    // The callee may clobber everything; only the return value is known.
    reset_state();
    if (!wild()) set_int(kRegArg);
  }

  void gen_ret() {
    if (!wild() || rng.chance(50)) emit_int_const(kRegArg, int_value());
    body.push_back(ir::IReturn{});
  }

  void generate() {
    const std::uint32_t n = rng.in_range(cfg.instructions);
    label_count = 1 + static_cast<std::uint32_t>(rng.below(3));
    std::vector<std::pair<std::uint32_t, LabelId>> label_sites;
    for (LabelId l = 0; l < label_count; ++l)
      label_sites.emplace_back(static_cast<std::uint32_t>(rng.below(n + 1)), l);
    std::sort(label_sites.begin(), label_sites.end());

    const Weights& w = cfg.weights;
    const std::pair<Kind, std::uint32_t> menu[] = {
        {Kind::Konst, w.konst}, {Kind::Mov, w.mov},   {Kind::BinOpK, w.binop},
        {Kind::LoadK, w.load},  {Kind::StoreK, w.store}, {Kind::BnzK, w.bnz},
        {Kind::JumpK, w.jump},  {Kind::JalK, w.jal},  {Kind::CallK, w.call},
        {Kind::RetK, w.ret},    {Kind::NopK, w.nop}};
    Word total = 0;
    for (const auto& [kind, weight] : menu) total += weight;

    std::size_t next_label = 0;
    for (std::uint32_t i = 0; i <= n; ++i) {
      while (next_label < label_sites.size() && label_sites[next_label].first == i) {
        body.push_back(ir::ILabel{label_sites[next_label].second});
        // A jump may land here from anywhere; forget everything.
        reset_state();
        ++next_label;
      }
      if (i == n) break;

      Word pick = rng.below(total);
      Kind kind = Kind::NopK;
      for (const auto& [k, weight] : menu) {
        if (pick < weight) {
          kind = k;
          break;
        }
        pick -= weight;
      }
      switch (kind) {
        case Kind::Konst: gen_const(); break;
        case Kind::Mov: gen_mov(); break;
        case Kind::BinOpK: gen_binop(); break;
        case Kind::LoadK: gen_load(); break;
        case Kind::StoreK: gen_store(); break;
        case Kind::BnzK: gen_bnz(); break;
        case Kind::JumpK: gen_jump(); break;
        case Kind::JalK: gen_jal(); break;
        case Kind::CallK: gen_call(); break;
        case Kind::RetK: gen_ret(); break;
        case Kind::NopK: body.push_back(ir::INop{}); break;
      }
    }
    // Every procedure ends by returning a definite value.
    emit_int_const(kRegArg, int_value());
    body.push_back(ir::IReturn{});
  }
};

}  // namespace

ir::IRProgram gen_program(const GenConfig& cfg) {
  if (!cfg.valid()) throw std::invalid_argument("invalid generator config");
  Rng rng(cfg.seed);
  ir::IRProgram program;
  program.main = {1, 0};

  const std::uint32_t n_comp = rng.in_range(cfg.components);
  for (ComponentId id = 1; id <= n_comp; ++id) {
    ir::IRComponent comp;
    comp.id = id;
    const std::uint32_t n_procs = rng.in_range(cfg.procedures);
    for (ProcId p = 0; p < n_procs; ++p) {
      comp.procedures[p] = {};
      if (rng.chance(60)) comp.exports.insert(p);
    }
    const std::uint32_t n_blocks = rng.in_range(cfg.blocks);
    for (BlockId b = 0; b < n_blocks; ++b) {
      ir::DataBlock block;
      block.size = 4 + rng.below(29);
      const Word init_len = cfg.mode == GenMode::WellBehaved
                                ? block.size
                                : rng.below(block.size + 1);
      for (Word i = 0; i < init_len; ++i)
        block.init.push_back(rng.below(1024));
      comp.data_blocks[b] = std::move(block);
    }
    program.components.push_back(std::move(comp));
  }
  program.components.front().exports.insert(program.main.second);

  // Interfaces: import a random subset of what the other components export.
  for (auto& comp : program.components) {
    for (const auto& other : program.components) {
      if (other.id == comp.id) continue;
      for (ProcId p : other.exports)
        if (rng.chance(40)) comp.imports.insert({other.id, p});
    }
  }

  for (auto& comp : program.components) {
    std::vector<std::pair<ComponentId, ProcId>> targets;
    for (const auto& [p, body] : comp.procedures) {
      (void)body;
      targets.emplace_back(comp.id, p);
    }
    targets.insert(targets.end(), comp.imports.begin(), comp.imports.end());
    std::vector<std::pair<BlockId, Word>> blocks;
    for (const auto& [b, block] : comp.data_blocks)
      blocks.emplace_back(b, block.size);

    for (auto& [p, body] : comp.procedures) {
      (void)p;
      BodyGen gen{rng, cfg, comp, targets, blocks, 0, {}, {}};
      gen.generate();
      body = std::move(gen.body);
    }
  }
  return program;
}

}  // namespace sfi::fuzz
