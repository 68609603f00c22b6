#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <variant>
#include <vector>

#include "sfi/object.hpp"

namespace sfi {

enum class TransferKind : std::uint8_t { JumpReg, JalDirect, BnzTaken };

const char* transfer_kind_name(TransferKind kind);

// Log events carry the pre-step pc and step index. TransferEvent also
// snapshots the argument register so traces can be derived from the log
// alone. InjectEvent marks an external corruption of data memory; it has no
// executing pc and is exempt from the store invariant.
struct StoreEvent {
  Word step, pc, target, value;
  bool operator==(const StoreEvent&) const = default;
};
struct TransferEvent {
  Word step, pc, target;
  TransferKind kind;
  Word arg;  // value of the argument register when the transfer executed
  bool operator==(const TransferEvent&) const = default;
};
struct HaltEvent {
  Word step, pc;
  bool operator==(const HaltEvent&) const = default;
};
struct InjectEvent {
  Word step, target, value;
  bool operator==(const InjectEvent&) const = default;
};

using LogEvent = std::variant<StoreEvent, TransferEvent, HaltEvent, InjectEvent>;
using ExecutionLog = std::vector<LogEvent>;

Word event_step(const LogEvent& ev);

struct MachineState {
  Word pc = 0;
  std::array<Word, kNumRegisters> regs{};
  std::unordered_map<Word, Word> mem;  // sparse; only touched words exist
  bool halted = false;
  Word steps = 0;
};

enum class StuckReason : std::uint8_t { InvalidFetch };

enum class RunStatus : std::uint8_t { Halted, OutOfFuel, Stuck };

struct StepResult {
  bool ok = true;
  StuckReason reason = StuckReason::InvalidFetch;
  std::optional<LogEvent> event;
};

// Executes one instruction in place. Returns ok=false, leaving the state
// unchanged, when pc does not name a laid-out code word. Loads of unmapped
// addresses read 0; code is fetched from the object and is not writable
// through the data memory.
StepResult step(MachineState& state, const MachineObject& object);

struct RunOutcome {
  RunStatus status = RunStatus::Halted;
  StuckReason stuck_reason = StuckReason::InvalidFetch;
  Word stuck_step = 0;
  MachineState final_state;
  ExecutionLog log;
};

// External data-memory corruptions to apply at given step indices, used by
// the attack harness. Targets must be data addresses (odd slot) of
// non-runtime components; anything else is rejected at insertion.
class InjectionSchedule {
 public:
  void add(Word step, Word target, Word value, const BitConfig& cfg);
  const std::multimap<Word, std::pair<Word, Word>>& entries() const {
    return entries_;
  }

 private:
  std::multimap<Word, std::pair<Word, Word>> entries_;
};

// Runs from the startup entry (address 0) until Halt, fuel exhaustion, or a
// bad fetch. Deterministic in its arguments. fuel must be >= 1.
RunOutcome run(const MachineObject& object, Word fuel,
               const InjectionSchedule* injections = nullptr);

}  // namespace sfi
