#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfi/machine.hpp"
#include "sfi/object.hpp"

namespace sfi::checkers {

struct Violation {
  int invariant = 0;  // 1 = store, 2 = jump, 3 = stack
  Word step = 0;
  Word pc = 0;
  std::size_t event_index = 0;  // position in the checked log
  Word target = 0;
  std::string detail;
};

struct Verdict {
  std::vector<Violation> violations;
  std::size_t events_checked = 0;
  bool pass() const { return violations.empty(); }
};

// Invariant 1: a component writes only its own data memory. Stores from
// trusted ranges must target the protected stack (component 0, slot 1);
// every other store must target an odd slot of the executing component.
// Injection events model external corruption and are not stores.
Verdict check_store(const ExecutionLog& log, const LayoutMeta& meta);

// Invariant 2: control stays in the executing component's code except
// through declared interfaces. Computed jumps (outside the trusted pop)
// must land in-component, in an even slot, bundle-aligned; direct calls
// must target own code or an imported entry point; taken branches stay in
// the procedure's slot.
Verdict check_jump(const ExecutionLog& log, const LayoutMeta& meta);

// Invariant 3: a return always lands at the instruction after the call.
// Replays a shadow stack: every direct call into an entry point pushes the
// return address; every jump out of a return-pop range must match the
// shadow top. The startup sequence's call pushes the halt anchor, so the
// final return is an ordinary matched pop.
Verdict check_stack(const ExecutionLog& log, const LayoutMeta& meta);

struct AllVerdicts {
  Verdict store, jump, stack;
  bool pass() const { return store.pass() && jump.pass() && stack.pass(); }
};

AllVerdicts check_all(const ExecutionLog& log, const LayoutMeta& meta);

}  // namespace sfi::checkers
