#include <cassert>
#include <map>
#include <stdexcept>

#include "sfi/ir.hpp"

namespace sfi::ir {

std::string trace_event_text(const TraceEvent& ev) {
  if (const auto* c = std::get_if<CallEvent>(&ev))
    return "call caller=" + std::to_string(c->caller) +
           " proc=" + std::to_string(c->procedure) +
           " arg=" + std::to_string(c->arg) +
           " callee=" + std::to_string(c->callee);
  const auto& r = std::get<RetEvent>(ev);
  return "ret from=" + std::to_string(r.returner) +
         " value=" + std::to_string(r.value) +
         " to=" + std::to_string(r.returnee);
}

bool well_bracketed(const Trace& trace) {
  std::vector<std::pair<ComponentId, ComponentId>> stack;  // (caller, callee)
  for (const auto& ev : trace) {
    if (const auto* c = std::get_if<CallEvent>(&ev)) {
      stack.emplace_back(c->caller, c->callee);
    } else {
      const auto& r = std::get<RetEvent>(ev);
      if (stack.empty()) return false;
      auto [caller, callee] = stack.back();
      if (r.returner != callee || r.returnee != caller) return false;
      stack.pop_back();
    }
  }
  return true;
}

namespace {

struct Undef {};
struct IntV {
  Word value;
};
struct DataPtr {
  ComponentId component;
  BlockId block;
  Word offset;
};
struct CodePtr {
  ComponentId component;
  ProcId procedure;
  LabelId label;
};
using Value = std::variant<Undef, IntV, DataPtr, CodePtr>;

struct Frame {
  ComponentId component;
  ProcId procedure;
  std::size_t resume;
};

struct Interp {
  const IRProgram& program;
  const BitConfig& cfg;
  Word fuel;

  std::array<Value, kAllocatableRegisters> regs{};
  std::map<std::pair<ComponentId, BlockId>, std::vector<Value>> memory{};
  std::vector<Frame> stack{};
  ComponentId comp = 0;
  ProcId proc = 0;
  std::size_t index = 0;
  Word steps = 0;
  IROutcome out{};
  // Label positions per (component, proc), resolved lazily.
  std::map<std::pair<ComponentId, ProcId>, std::map<LabelId, std::size_t>>
      label_cache{};

  const IRComponent& component_ref(ComponentId id) {
    const IRComponent* c = program.find_component(id);
    assert(c != nullptr);  // validated program
    return *c;
  }

  const std::vector<IRInstr>& code() {
    return component_ref(comp).procedures.at(proc);
  }

  std::size_t label_position(ComponentId c, ProcId p, LabelId label) {
    auto& labels = label_cache[{c, p}];
    if (labels.empty()) {
      const auto& body = component_ref(c).procedures.at(p);
      for (std::size_t i = 0; i < body.size(); ++i)
        if (const auto* l = std::get_if<ILabel>(&body[i]))
          labels.emplace(l->label, i);
    }
    return labels.at(label);
  }

  std::vector<Value>& block_memory(ComponentId c, BlockId b) {
    auto key = std::make_pair(c, b);
    auto it = memory.find(key);
    if (it == memory.end()) {
      const DataBlock& blk = component_ref(c).data_blocks.at(b);
      std::vector<Value> image(blk.size, Value{IntV{0}});
      for (std::size_t i = 0; i < blk.init.size(); ++i)
        image[i] = IntV{blk.init[i] & cfg.word_mask()};
      it = memory.emplace(key, std::move(image)).first;
    }
    return it->second;
  }

  bool ub(const std::string& reason) {
    out.status = IRStatus::UndefinedBehavior;
    out.ub_reason = reason;
    out.ub_step = steps;
    return false;
  }

  bool halt() {
    out.status = IRStatus::Halted;
    return false;
  }

  // Checks a pointer is usable for a load/store from the current component.
  bool check_data_ptr(const Value& v, const char* what, DataPtr& ptr) {
    const auto* p = std::get_if<DataPtr>(&v);
    if (p == nullptr) return ub(std::string(what) + " through non-pointer");
    if (p->component != comp)
      return ub(std::string(what) + " through foreign pointer");
    const DataBlock& blk = component_ref(p->component).data_blocks.at(p->block);
    if (p->offset >= blk.size)
      return ub(std::string(what) + " out of bounds");
    ptr = *p;
    return true;
  }

  // Argument-register discipline at a component boundary: the word value
  // crosses; pointers of any flavor must not leak.
  bool boundary_arg(Word& arg_out) {
    const Value& v = regs[kRegArg];
    if (std::holds_alternative<IntV>(v)) {
      arg_out = std::get<IntV>(v).value;
      return true;
    }
    if (std::holds_alternative<Undef>(v))
      return ub("undefined argument at component boundary");
    return ub("pointer leaked through argument register");
  }

  // Returns true while execution should continue.
  bool exec_one() {
    const auto& body = code();
    if (index >= body.size()) return halt();  // fell off the end
    const IRInstr& instr = body[index];
    bool cont = true;

    std::visit(
        [&](const auto& op) {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, INop> || std::is_same_v<T, ILabel>) {
            ++index;
          } else if constexpr (std::is_same_v<T, IConst>) {
            if (const auto* i = std::get_if<IntLit>(&op.value))
              regs[op.rd] = IntV{i->value & cfg.word_mask()};
            else if (const auto* d = std::get_if<DataRef>(&op.value))
              regs[op.rd] = DataPtr{comp, d->block, d->offset};
            else
              regs[op.rd] =
                  CodePtr{comp, proc, std::get<LabelRef>(op.value).label};
            ++index;
          } else if constexpr (std::is_same_v<T, IMov>) {
            regs[op.rd] = regs[op.rs];
            ++index;
          } else if constexpr (std::is_same_v<T, IBinOp>) {
            cont = exec_binop(op);
          } else if constexpr (std::is_same_v<T, ILoad>) {
            DataPtr p;
            if (!(cont = check_data_ptr(regs[op.rp], "load", p))) return;
            regs[op.rd] = block_memory(p.component, p.block)[p.offset];
            ++index;
          } else if constexpr (std::is_same_v<T, IStore>) {
            DataPtr p;
            if (!(cont = check_data_ptr(regs[op.rp], "store", p))) return;
            assert(p.component == comp);  // isolation holds by construction
            block_memory(p.component, p.block)[p.offset] = regs[op.rs];
            ++index;
          } else if constexpr (std::is_same_v<T, IBnz>) {
            const Value& v = regs[op.rs];
            if (std::holds_alternative<Undef>(v)) {
              cont = ub("branch on undefined value");
              return;
            }
            // Pointers are non-null: branch taken.
            const bool taken = !std::holds_alternative<IntV>(v) ||
                               std::get<IntV>(v).value != 0;
            index = taken ? label_position(comp, proc, op.label) : index + 1;
          } else if constexpr (std::is_same_v<T, IJump>) {
            const auto* t = std::get_if<CodePtr>(&regs[op.rt]);
            if (t == nullptr) {
              cont = ub("computed jump to non-label value");
              return;
            }
            if (t->component != comp) {
              cont = ub("computed jump to foreign code");
              return;
            }
            proc = t->procedure;
            index = label_position(t->component, t->procedure, t->label);
          } else if constexpr (std::is_same_v<T, IJal>) {
            index = label_position(comp, proc, op.label);
          } else if constexpr (std::is_same_v<T, ICall>) {
            cont = exec_call(op);
          } else if constexpr (std::is_same_v<T, IReturn>) {
            cont = exec_return();
          } else if constexpr (std::is_same_v<T, IHalt>) {
            cont = halt();
          }
        },
        instr);

    ++steps;
    return cont;
  }

  bool exec_binop(const IBinOp& op) {
    const Value& a = regs[op.rs1];
    const Value& b = regs[op.rs2];
    if (std::holds_alternative<Undef>(a) || std::holds_alternative<Undef>(b)) {
      regs[op.rd] = Undef{};  // undef propagates, faulting only at use
      ++index;
      return true;
    }
    const auto* ia = std::get_if<IntV>(&a);
    const auto* ib = std::get_if<IntV>(&b);
    if (ia && ib) {
      regs[op.rd] = IntV{eval_binary_op(op.op, ia->value, ib->value, cfg)};
      ++index;
      return true;
    }
    // Pointer arithmetic: Ptr+Int, Int+Ptr, Ptr-Int keep the block and move
    // the offset; bounds are checked at use. Anything else is undefined.
    const auto* pa = std::get_if<DataPtr>(&a);
    const auto* pb = std::get_if<DataPtr>(&b);
    if (op.op == BinaryOp::Add && pa && ib) {
      regs[op.rd] = DataPtr{pa->component, pa->block,
                            (pa->offset + ib->value) & cfg.word_mask()};
    } else if (op.op == BinaryOp::Add && ia && pb) {
      regs[op.rd] = DataPtr{pb->component, pb->block,
                            (pb->offset + ia->value) & cfg.word_mask()};
    } else if (op.op == BinaryOp::Sub && pa && ib) {
      regs[op.rd] = DataPtr{pa->component, pa->block,
                            (pa->offset - ib->value) & cfg.word_mask()};
    } else {
      return ub("arithmetic on pointer values");
    }
    ++index;
    return true;
  }

  bool exec_call(const ICall& op) {
    const bool cross = op.component != comp;
    Word arg = 0;
    if (cross && !boundary_arg(arg)) return false;
    stack.push_back({comp, proc, index + 1});
    if (cross)
      out.trace.push_back(CallEvent{comp, op.procedure, arg, op.component});
    comp = op.component;
    proc = op.procedure;
    index = 0;
    return true;
  }

  bool exec_return() {
    if (stack.empty()) {  // return from main halts
      if (const auto* i = std::get_if<IntV>(&regs[kRegArg]))
        out.main_result = i->value;
      return halt();
    }
    Frame f = stack.back();
    const bool cross = f.component != comp;
    Word value = 0;
    if (cross && !boundary_arg(value)) return false;
    stack.pop_back();
    if (cross) out.trace.push_back(RetEvent{comp, value, f.component});
    comp = f.component;
    proc = f.procedure;
    index = f.resume;
    return true;
  }

  IROutcome go() {
    comp = program.main.first;
    proc = program.main.second;
    index = 0;
    while (steps < fuel) {
      if (!exec_one()) return out;
    }
    out.status = IRStatus::OutOfFuel;
    return out;
  }
};

}  // namespace

IROutcome interpret(const IRProgram& program, Word fuel, const BitConfig& cfg) {
  if (fuel < 1) throw std::invalid_argument("fuel must be >= 1");
  Interp interp{.program = program, .cfg = cfg, .fuel = fuel};
  return interp.go();
}

}  // namespace sfi::ir
