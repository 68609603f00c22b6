#include "sfi/backend.hpp"

#include <algorithm>
#include <cassert>
#include <map>

namespace sfi::backend {

const char* mutation_name(Mutation m) {
  switch (m) {
    case Mutation::None: return "none";
    case Mutation::WrongStoreMask: return "wrong-store-mask";
    case Mutation::MissingStoreOr: return "missing-store-or";
    case Mutation::AlignedEntry: return "aligned-entry";
    case Mutation::NoHaltGuard: return "no-halt-guard";
    case Mutation::SkipTagRestore: return "skip-tag-restore";
    case Mutation::CorruptPop: return "corrupt-pop";
  }
  return "?";
}

namespace {

// Emits one procedure's code into its slot, padding so that no multi-word
// sequence straddles a bundle and label targets are bundle-aligned
// (computed jumps are masked to bundle starts, so a label must sit on one
// to be reachable exactly). Padding that execution can fall into is Nop;
// padding after an unconditional transfer is Halt, so a stray aligned jump
// onto dead words stops instead of executing. Sliding through Nop padding
// is harmless: groups never straddle a bundle, so a bundle-start landing
// only ever executes whole groups.
struct ProcEmitter {
  const BitConfig& cfg;
  Word slot_base;
  std::vector<Instruction> words;
  std::vector<TrustedRange>* ranges;
  bool live = false;  // can execution fall through to the next word?

  Word offset() const { return words.size(); }

  void pad_to(Word target_offset) {
    while (words.size() < target_offset)
      words.push_back(live ? Instruction{Nop{}} : Instruction{Halt{}});
  }

  void align_to_bundle() {
    const Word b = cfg.bundle_size();
    if (offset() % b != 0) pad_to((offset() / b + 1) * b);
  }

  // Pads so that the next n words share one bundle.
  void reserve_group(std::size_t n) {
    const Word b = cfg.bundle_size();
    const Word bundle_end = (offset() / b + 1) * b;
    if (offset() + n > bundle_end) pad_to(bundle_end);
  }

  void emit(Instruction instr) {
    live = !std::holds_alternative<Jump>(instr) &&
           !std::holds_alternative<Halt>(instr);
    words.push_back(std::move(instr));
  }

  void add_range(Word begin, Word end, RangeKind kind) {
    ranges->push_back({slot_base + begin, slot_base + end, kind});
  }
};

struct Compiler {
  const ir::IRProgram& program;
  const CompileOptions& options;
  const BitConfig& cfg;
  MachineObject object;

  // Sized lowering of each IR instruction kind, fixed before emission so
  // entry addresses never depend on body contents.
  std::size_t store_group_size() const {
    return options.mutation == Mutation::MissingStoreOr ? 2 : 3;
  }
  std::size_t call_group_size() const {
    return options.mutation == Mutation::SkipTagRestore ? 1 : 3;
  }
  Word entry_offset() const {
    return options.mutation == Mutation::AlignedEntry ? cfg.bundle_size() : 1;
  }

  Word tag_data(ComponentId c) const {
    return store_mask_constants(c, cfg).tag;
  }
  Word tag_code(ComponentId c) const { return jump_mask_constants(c, cfg).tag; }

  void check_preconditions() {
    cfg.require_valid();
    // Entry sequence: guard word plus five instructions in the first bundle.
    if (1 + 5 > cfg.bundle_size())
      throw CompileError(CompileErrorKind::UnsupportedConfig,
                         "bundle too small for trusted sequences "
                         "(need bundle_bits >= 3)");
    auto errors = ir::validate(program, cfg);
    if (!errors.empty())
      throw CompileError(CompileErrorKind::InvalidProgram,
                         "invalid program: " + errors.front().message());
    if (program.components.size() > cfg.max_components())
      throw CompileError(
          CompileErrorKind::TooManyComponents,
          "TooManyComponents: " + std::to_string(program.components.size()) +
              " components, capacity " + std::to_string(cfg.max_components()));
    for (const auto& comp : program.components)
      if (comp.id > cfg.max_components())
        throw CompileError(CompileErrorKind::TooManyComponents,
                           "TooManyComponents: component id " +
                               std::to_string(comp.id) +
                               " exceeds the field capacity " +
                               std::to_string(cfg.max_components()));
  }

  void assign_layout() {
    LayoutMeta& meta = object.meta;
    meta.cfg = cfg;
    meta.protected_stack_base = encode_address(0, 1, 0, cfg);
    meta.main = program.main;

    for (const auto& comp : program.components) {
      meta.imports[comp.id] = comp.imports;
      meta.exports[comp.id] = comp.exports;

      Word rank = 0;
      for (const auto& [proc_id, body] : comp.procedures) {
        (void)body;
        const Word slot = 2 * rank++;
        meta.entry_points[{comp.id, proc_id}] =
            encode_address(comp.id, slot, entry_offset(), cfg);
      }

      rank = 0;
      for (const auto& [block_id, block] : comp.data_blocks) {
        const Word slot = 2 * rank++ + 1;
        meta.block_map[{comp.id, block_id}] = {slot, 0};
        std::vector<Word> image(block.size, 0);
        for (std::size_t i = 0; i < block.init.size(); ++i)
          image[i] = block.init[i] & cfg.word_mask();
        object.data_init[{comp.id, slot}] = std::move(image);
      }
    }
  }

  void emit_startup() {
    const Word main_entry = object.meta.entry_points.at(program.main);
    MaskTag store_any = store_mask_constants(1, cfg);  // masks are global
    MaskTag jump_any = jump_mask_constants(1, cfg);
    Word store_mask = options.mutation == Mutation::WrongStoreMask
                          ? cfg.word_mask()
                          : store_any.mask;

    std::vector<Instruction> boot;
    boot.push_back(Const{store_mask, kRegMaskData});
    boot.push_back(Const{jump_any.mask, kRegMaskCode});
    boot.push_back(Const{object.meta.protected_stack_base, kRegSpProt});
    boot.push_back(Jal{main_entry});
    boot.push_back(Halt{});
    object.meta.halt_anchor = 4;  // encode(0, slot 0, offset 4)
    object.meta.trusted_ranges.push_back({0, 5, RangeKind::Startup});
    object.code[{0, 0}] = std::move(boot);
  }

  void emit_entry_sequence(ProcEmitter& em, ComponentId c) {
    // Guard word: a stray bundle-aligned jump must halt, not slide into the
    // push below.
    em.pad_to(entry_offset() - 1);
    em.emit(options.mutation == Mutation::NoHaltGuard ? Instruction{Nop{}}
                                                      : Instruction{Halt{}});
    const Word begin = em.offset();
    em.emit(Store{kRegSpProt, kRegRa});
    em.emit(Const{1, kRegSfi});
    em.emit(BinOp{BinaryOp::Add, kRegSpProt, kRegSfi, kRegSpProt});
    em.emit(Const{tag_data(c), kRegTagData});
    em.emit(Const{tag_code(c), kRegTagCode});
    em.add_range(begin, em.offset(), RangeKind::EntryPush);
  }

  void emit_store(ProcEmitter& em, Reg rp, Reg rs) {
    em.reserve_group(store_group_size());
    em.emit(BinOp{BinaryOp::BitAnd, rp, kRegMaskData, kRegSfi});
    if (options.mutation != Mutation::MissingStoreOr)
      em.emit(BinOp{BinaryOp::BitOr, kRegSfi, kRegTagData, kRegSfi});
    em.emit(Store{kRegSfi, rs});
  }

  void emit_jump(ProcEmitter& em, Reg rt) {
    em.reserve_group(3);
    em.emit(BinOp{BinaryOp::BitAnd, rt, kRegMaskCode, kRegSfi});
    em.emit(BinOp{BinaryOp::BitOr, kRegSfi, kRegTagCode, kRegSfi});
    em.emit(Jump{kRegSfi});
  }

  void emit_call(ProcEmitter& em, ComponentId caller, ComponentId callee,
                 ProcId proc) {
    auto it = object.meta.entry_points.find({callee, proc});
    assert(it != object.meta.entry_points.end());  // validated
    em.reserve_group(call_group_size());
    em.emit(Jal{it->second});
    if (options.mutation != Mutation::SkipTagRestore) {
      const Word begin = em.offset();
      em.emit(Const{tag_data(caller), kRegTagData});
      em.emit(Const{tag_code(caller), kRegTagCode});
      em.add_range(begin, em.offset(), RangeKind::PostCallRestore);
    }
  }

  void emit_return(ProcEmitter& em) {
    em.reserve_group(4);
    const Word begin = em.offset();
    em.emit(Const{options.mutation == Mutation::CorruptPop ? Word{2} : Word{1},
                  kRegSfi});
    em.emit(BinOp{BinaryOp::Sub, kRegSpProt, kRegSfi, kRegSpProt});
    em.emit(Load{kRegSpProt, kRegSfi});
    em.emit(Jump{kRegSfi});
    em.add_range(begin, em.offset(), RangeKind::ReturnPop);
  }

  void emit_procedure(const ir::IRComponent& comp, ProcId proc_id,
                      const std::vector<ir::IRInstr>& body, Word slot) {
    ProcEmitter em{cfg, encode_address(comp.id, slot, 0, cfg), {},
                   &object.meta.trusted_ranges};
    emit_entry_sequence(em, comp.id);

    std::map<LabelId, Word> label_offsets;
    struct Patch {
      enum Kind { ConstLabel, BnzRel, JalLabel } kind;
      Word word_offset;
      LabelId label;
    };
    std::vector<Patch> patches;

    for (const ir::IRInstr& instr : body) {
      std::visit(
          [&](const auto& op) {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, ir::ILabel>) {
              em.align_to_bundle();
              label_offsets[op.label] = em.offset();
            } else if constexpr (std::is_same_v<T, ir::INop>) {
              em.emit(Nop{});
            } else if constexpr (std::is_same_v<T, ir::IConst>) {
              if (const auto* i = std::get_if<ir::IntLit>(&op.value)) {
                em.emit(Const{i->value & cfg.word_mask(), op.rd});
              } else if (const auto* d = std::get_if<ir::DataRef>(&op.value)) {
                const BlockPlacement& place =
                    object.meta.block_map.at({comp.id, d->block});
                em.emit(Const{encode_address(comp.id, place.slot,
                                             place.base + d->offset, cfg),
                              op.rd});
              } else {
                const auto& l = std::get<ir::LabelRef>(op.value);
                patches.push_back({Patch::ConstLabel, em.offset(), l.label});
                em.emit(Const{0, op.rd});
              }
            } else if constexpr (std::is_same_v<T, ir::IMov>) {
              em.emit(Mov{op.rs, op.rd});
            } else if constexpr (std::is_same_v<T, ir::IBinOp>) {
              em.emit(BinOp{op.op, op.rs1, op.rs2, op.rd});
            } else if constexpr (std::is_same_v<T, ir::ILoad>) {
              em.emit(Load{op.rp, op.rd});
            } else if constexpr (std::is_same_v<T, ir::IStore>) {
              emit_store(em, op.rp, op.rs);
            } else if constexpr (std::is_same_v<T, ir::IBnz>) {
              patches.push_back({Patch::BnzRel, em.offset(), op.label});
              em.emit(Bnz{op.rs, 0});
            } else if constexpr (std::is_same_v<T, ir::IJump>) {
              emit_jump(em, op.rt);
            } else if constexpr (std::is_same_v<T, ir::IJal>) {
              patches.push_back({Patch::JalLabel, em.offset(), op.label});
              em.emit(Jal{0});
            } else if constexpr (std::is_same_v<T, ir::ICall>) {
              emit_call(em, comp.id, op.component, op.procedure);
            } else if constexpr (std::is_same_v<T, ir::IReturn>) {
              emit_return(em);
            } else if constexpr (std::is_same_v<T, ir::IHalt>) {
              em.emit(Halt{});
            }
          },
          instr);
    }
    em.emit(Halt{});  // fall-off-the-end guard

    for (const Patch& p : patches) {
      const Word target = label_offsets.at(p.label);
      Instruction& w = em.words[p.word_offset];
      switch (p.kind) {
        case Patch::ConstLabel:
          std::get<Const>(w).imm = em.slot_base + target;
          break;
        case Patch::BnzRel:
          std::get<Bnz>(w).rel = static_cast<std::int64_t>(target) -
                                 static_cast<std::int64_t>(p.word_offset);
          break;
        case Patch::JalLabel:
          std::get<Jal>(w).target = em.slot_base + target;
          break;
      }
    }

    if (em.words.size() > cfg.slot_capacity())
      throw CompileError(CompileErrorKind::LayoutOverflow,
                         "LayoutOverflow: component " +
                             std::to_string(comp.id) + " proc " +
                             std::to_string(proc_id) + " needs " +
                             std::to_string(em.words.size()) +
                             " words, slot capacity " +
                             std::to_string(cfg.slot_capacity()));

    object.meta.code_lengths[{comp.id, slot}] = em.words.size();
    object.code[{comp.id, slot}] = std::move(em.words);
  }

  MachineObject go() {
    check_preconditions();
    object.cfg = cfg;
    object.meta.regs = RegisterConventions{};
    assign_layout();
    emit_startup();
    object.meta.code_lengths[{0, 0}] = object.code.at({0, 0}).size();

    for (const auto& comp : program.components) {
      Word rank = 0;
      for (const auto& [proc_id, body] : comp.procedures)
        emit_procedure(comp, proc_id, body, 2 * rank++);
    }

    std::sort(object.meta.trusted_ranges.begin(),
              object.meta.trusted_ranges.end(),
              [](const TrustedRange& a, const TrustedRange& b) {
                return a.begin < b.begin;
              });
    return std::move(object);
  }
};

}  // namespace

MachineObject compile(const ir::IRProgram& program, const BitConfig& cfg) {
  return compile(program, CompileOptions{cfg, Mutation::None});
}

MachineObject compile(const ir::IRProgram& program,
                      const CompileOptions& options) {
  Compiler c{program, options, options.cfg, {}};
  return c.go();
}

LayoutMeta layout(const ir::IRProgram& program, const BitConfig& cfg) {
  return compile(program, cfg).meta;
}

}  // namespace sfi::backend
