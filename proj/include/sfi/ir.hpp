#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "sfi/isa.hpp"

namespace sfi::ir {

// Constants are symbolic: data pointers name a block of the enclosing
// component, code labels name a label of the enclosing procedure. Addresses
// are resolved only by the compiler.
struct IntLit {
  Word value;
  bool operator==(const IntLit&) const = default;
};
struct DataRef {
  BlockId block;
  Word offset;
  bool operator==(const DataRef&) const = default;
};
struct LabelRef {
  LabelId label;
  bool operator==(const LabelRef&) const = default;
};
using Constant = std::variant<IntLit, DataRef, LabelRef>;

struct INop {
  bool operator==(const INop&) const = default;
};
struct IConst {
  Constant value;
  Reg rd;
  bool operator==(const IConst&) const = default;
};
struct IMov {
  Reg rs, rd;
  bool operator==(const IMov&) const = default;
};
struct IBinOp {
  BinaryOp op;
  Reg rs1, rs2, rd;
  bool operator==(const IBinOp&) const = default;
};
struct ILoad {
  Reg rp, rd;
  bool operator==(const ILoad&) const = default;
};
struct IStore {
  Reg rp, rs;
  bool operator==(const IStore&) const = default;
};
struct IBnz {
  Reg rs;
  LabelId label;
  bool operator==(const IBnz&) const = default;
};
struct IJump {
  Reg rt;
  bool operator==(const IJump&) const = default;
};
struct IJal {
  LabelId label;
  bool operator==(const IJal&) const = default;
};
struct ICall {
  ComponentId component;
  ProcId procedure;
  bool operator==(const ICall&) const = default;
};
struct IReturn {
  bool operator==(const IReturn&) const = default;
};
struct IHalt {
  bool operator==(const IHalt&) const = default;
};
struct ILabel {
  LabelId label;
  bool operator==(const ILabel&) const = default;
};

using IRInstr = std::variant<INop, IConst, IMov, IBinOp, ILoad, IStore, IBnz,
                             IJump, IJal, ICall, IReturn, IHalt, ILabel>;

struct DataBlock {
  Word size = 0;  // in words
  std::vector<Word> init;
  bool operator==(const DataBlock&) const = default;
};

struct IRComponent {
  ComponentId id = 0;
  std::set<ProcId> exports;
  std::set<std::pair<ComponentId, ProcId>> imports;
  std::map<ProcId, std::vector<IRInstr>> procedures;
  std::map<BlockId, DataBlock> data_blocks;
  bool operator==(const IRComponent&) const = default;
};

struct IRProgram {
  std::vector<IRComponent> components;
  std::pair<ComponentId, ProcId> main{0, 0};

  const IRComponent* find_component(ComponentId id) const;
  bool operator==(const IRProgram&) const = default;
};

enum class ErrorKind : std::uint8_t {
  DuplicateComponentId,
  ReservedComponentId,
  MissingMainComponent,
  MissingMainProcedure,
  MainNotExported,
  ExportMissingProcedure,
  ImportSelf,
  ImportMissingComponent,
  ImportNotExported,
  CallNotImported,
  CallMissingProcedure,
  DuplicateLabel,
  UndefinedLabel,
  BadRegister,
  BlockTooLarge,
  BlockInitTooLong,
  BadBlockRef,
  BadPointerOffset,
};

const char* error_kind_name(ErrorKind kind);

struct WellFormednessError {
  ErrorKind kind;
  ComponentId component = 0;
  ProcId procedure = 0;
  std::size_t instr_index = 0;
  bool has_location = false;  // procedure/instr_index are meaningful
  std::string detail;

  std::string message() const;
};

// Static well-formedness: unique nonzero component ids, imports name exports
// of other components, every call target is imported or local, labels are
// defined exactly once, registers are allocatable, blocks fit a slot.
// Returns an empty list iff the program is valid under cfg.
std::vector<WellFormednessError> validate(const IRProgram& program,
                                          const BitConfig& cfg = {});

// Cross-component observable behavior. Call/Ret events are emitted only
// when the call actually crosses a component boundary.
struct CallEvent {
  ComponentId caller;
  ProcId procedure;
  Word arg;
  ComponentId callee;
  bool operator==(const CallEvent&) const = default;
};
struct RetEvent {
  ComponentId returner;
  Word value;
  ComponentId returnee;
  bool operator==(const RetEvent&) const = default;
};
using TraceEvent = std::variant<CallEvent, RetEvent>;
using Trace = std::vector<TraceEvent>;

std::string trace_event_text(const TraceEvent& ev);

// Ret must always match the most recent unmatched Call.
bool well_bracketed(const Trace& trace);

enum class IRStatus : std::uint8_t { Halted, OutOfFuel, UndefinedBehavior };

struct IROutcome {
  IRStatus status = IRStatus::Halted;
  Trace trace;                 // collected up to (not including) any UB step
  std::string ub_reason;       // set iff status is UndefinedBehavior
  Word ub_step = 0;            // likewise
  std::optional<Word> main_result;  // argument register when main returned
};

// Reference interpreter. Registers hold Int, data pointers, code labels, or
// Undef; memory is per-(component, block). Loads/stores through anything but
// an in-bounds own pointer are undefined behavior, as are computed jumps to
// anything but an own-component code label and pointer leaks through the
// argument register at a component boundary.
IROutcome interpret(const IRProgram& program, Word fuel,
                    const BitConfig& cfg = {});

}  // namespace sfi::ir
