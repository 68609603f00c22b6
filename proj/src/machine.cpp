#include "sfi/machine.hpp"

#include <stdexcept>

namespace sfi {

const char* transfer_kind_name(TransferKind kind) {
  switch (kind) {
    case TransferKind::JumpReg: return "jmp";
    case TransferKind::JalDirect: return "jal";
    case TransferKind::BnzTaken: return "bnz";
  }
  return "?";
}

Word event_step(const LogEvent& ev) {
  return std::visit([](const auto& e) { return e.step; }, ev);
}

StepResult step(MachineState& state, const MachineObject& object) {
  if (state.halted) return {};  // once halted, nothing changes

  const Instruction* instr = object.fetch(state.pc);
  if (instr == nullptr)
    return {.ok = false, .reason = StuckReason::InvalidFetch, .event = {}};

  const BitConfig& cfg = object.cfg;
  const Word wmask = cfg.word_mask();
  const Word pc = state.pc;
  const Word step_index = state.steps;
  StepResult result;
  // Register indices are total: out-of-range encodings wrap into the file,
  // so a bad register can never wedge the machine.
  auto reg = [&state](Reg r) -> Word& {
    return state.regs[r & (kNumRegisters - 1)];
  };

  std::visit(
      [&](const auto& op) {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, Nop>) {
          state.pc = (pc + 1) & wmask;
        } else if constexpr (std::is_same_v<T, Const>) {
          reg(op.rd) = op.imm & wmask;
          state.pc = (pc + 1) & wmask;
        } else if constexpr (std::is_same_v<T, Mov>) {
          reg(op.rd) = reg(op.rs);
          state.pc = (pc + 1) & wmask;
        } else if constexpr (std::is_same_v<T, BinOp>) {
          reg(op.rd) = eval_binary_op(op.op, reg(op.rs1), reg(op.rs2), cfg);
          state.pc = (pc + 1) & wmask;
        } else if constexpr (std::is_same_v<T, Load>) {
          const Word addr = reg(op.rp) & wmask;
          auto it = state.mem.find(addr);
          reg(op.rd) = it == state.mem.end() ? 0 : it->second;
          state.pc = (pc + 1) & wmask;
        } else if constexpr (std::is_same_v<T, Store>) {
          const Word addr = reg(op.rp) & wmask;
          const Word value = reg(op.rs);
          state.mem[addr] = value;
          result.event = StoreEvent{step_index, pc, addr, value};
          state.pc = (pc + 1) & wmask;
        } else if constexpr (std::is_same_v<T, Bnz>) {
          if (reg(op.rs) != 0) {
            const Word target = (pc + static_cast<Word>(op.rel)) & wmask;
            result.event = TransferEvent{step_index, pc, target,
                                         TransferKind::BnzTaken,
                                         reg(kRegArg)};
            state.pc = target;
          } else {
            state.pc = (pc + 1) & wmask;
          }
        } else if constexpr (std::is_same_v<T, Jump>) {
          const Word target = reg(op.rt) & wmask;
          result.event = TransferEvent{step_index, pc, target,
                                       TransferKind::JumpReg,
                                       reg(kRegArg)};
          state.pc = target;
        } else if constexpr (std::is_same_v<T, Jal>) {
          reg(kRegRa) = (pc + 1) & wmask;
          const Word target = op.target & wmask;
          result.event = TransferEvent{step_index, pc, target,
                                       TransferKind::JalDirect,
                                       reg(kRegArg)};
          state.pc = target;
        } else if constexpr (std::is_same_v<T, Halt>) {
          state.halted = true;
          result.event = HaltEvent{step_index, pc};
        }
      },
      *instr);

  state.steps += 1;
  return result;
}

void InjectionSchedule::add(Word step, Word target, Word value,
                            const BitConfig& cfg) {
  const Address a = decode_address(target, cfg);
  if (a.component == 0)
    throw Error("injection target must not be runtime memory");
  if (!a.is_data())
    throw Error("injection target must be data memory (odd slot)");
  entries_.emplace(step, std::make_pair(target & cfg.word_mask(), value));
}

RunOutcome run(const MachineObject& object, Word fuel,
               const InjectionSchedule* injections) {
  if (fuel < 1) throw std::invalid_argument("fuel must be >= 1");

  RunOutcome out;
  MachineState& state = out.final_state;
  state.pc = 0;  // startup code lives at encode(0, slot 0, 0)

  for (const auto& [key, image] : object.data_init) {
    const Word base = encode_address(key.first, key.second, 0, object.cfg);
    for (Word i = 0; i < image.size(); ++i)
      if (image[i] != 0) state.mem[base + i] = image[i];
  }

  auto pending = injections ? injections->entries().begin()
                            : std::multimap<Word, std::pair<Word, Word>>::
                                  const_iterator{};

  while (state.steps < fuel) {
    if (injections) {
      while (pending != injections->entries().end() &&
             pending->first <= state.steps) {
        state.mem[pending->second.first] = pending->second.second;
        out.log.push_back(InjectEvent{state.steps, pending->second.first,
                                      pending->second.second});
        ++pending;
      }
    }
    StepResult r = step(state, object);
    if (!r.ok) {
      out.status = RunStatus::Stuck;
      out.stuck_reason = r.reason;
      out.stuck_step = state.steps;
      return out;
    }
    if (r.event) out.log.push_back(*r.event);
    if (state.halted) {
      out.status = RunStatus::Halted;
      return out;
    }
  }
  out.status = RunStatus::OutOfFuel;
  return out;
}

}  // namespace sfi
