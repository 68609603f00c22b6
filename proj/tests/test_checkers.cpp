#include "doctest.h"
#include "oracles.hpp"
#include "sfi/backend.hpp"
#include "sfi/checkers.hpp"
#include "sfi/formats.hpp"
#include "sfi/machine.hpp"

using namespace sfi;
using namespace sfi::checkers;

namespace {

const BitConfig kDefault{};

// Two-component program exercising every event kind: stores, a taken
// branch, a computed jump, a cross call and returns.
const char* kExercise = R"(sfi-ir 1
main 1 0
component 1
export 0
import 2 0
block 0 size 8
proc 0
  const ptr 0 1 r1
  const 0x11 r2
  store r1 r2
  const 1 r3
  call 2 0
  const 1 r4
  bnz r4 L0
  nop
  label L0
  const label L1 r5
  jump r5
  nop
  label L1
  const 0 r3
  return
end
component 2
export 0
block 0 size 8
proc 0
  const ptr 0 0 r1
  const 0x22 r2
  store r1 r2
  const 2 r3
  return
end
)";

struct Fixture {
  MachineObject object;
  ExecutionLog log;

  Fixture() {
    object = backend::compile(oracles::parse_program(kExercise), kDefault);
    const RunOutcome out = run(object, 10000);
    REQUIRE(out.status == RunStatus::Halted);
    log = out.log;
  }

  std::size_t find_untrusted_store() const {
    for (std::size_t i = 0; i < log.size(); ++i)
      if (const auto* st = std::get_if<StoreEvent>(&log[i]))
        if (object.meta.range_at(st->pc) == nullptr) return i;
    FAIL("no untrusted store in log");
    return 0;
  }

  std::size_t find_trusted_store() const {
    for (std::size_t i = 0; i < log.size(); ++i)
      if (const auto* st = std::get_if<StoreEvent>(&log[i]))
        if (object.meta.range_at(st->pc) != nullptr) return i;
    FAIL("no trusted store in log");
    return 0;
  }

  std::size_t find_transfer(TransferKind kind, bool from_pop) const {
    for (std::size_t i = 0; i < log.size(); ++i)
      if (const auto* tr = std::get_if<TransferEvent>(&log[i])) {
        if (tr->kind != kind) continue;
        const TrustedRange* r = object.meta.range_at(tr->pc);
        const bool pop = r != nullptr && r->kind == RangeKind::ReturnPop;
        if (pop == from_pop) return i;
      }
    FAIL("no matching transfer in log");
    return 0;
  }

  std::size_t find_cross_jal() const {
    for (std::size_t i = 0; i < log.size(); ++i)
      if (const auto* tr = std::get_if<TransferEvent>(&log[i]))
        if (tr->kind == TransferKind::JalDirect &&
            tr->target == object.meta.entry_points.at({2, 0}))
          return i;
    FAIL("no cross call in log");
    return 0;
  }
};

}  // namespace

TEST_CASE("a well-behaved run passes all three checkers") {
  Fixture fx;
  const AllVerdicts verdicts = check_all(fx.log, fx.object.meta);
  CHECK(verdicts.pass());
  CHECK(verdicts.store.events_checked >= 3);  // two data stores, two pushes
  CHECK(verdicts.jump.events_checked >= 5);
  CHECK(verdicts.stack.events_checked >= 4);  // two pushes, two pops
}

TEST_CASE("invariant 1: store into another component") {
  Fixture fx;
  auto& ev = std::get<StoreEvent>(fx.log[fx.find_untrusted_store()]);
  ev.target = encode_address(3, 1, 0, kDefault);
  const Verdict v = check_store(fx.log, fx.object.meta);
  REQUIRE(v.violations.size() == 1);
  CHECK(v.violations[0].invariant == 1);
  CHECK(v.violations[0].step == ev.step);
  CHECK(check_jump(fx.log, fx.object.meta).pass());
}

TEST_CASE("invariant 1: store into an even slot of the own component") {
  Fixture fx;
  const std::size_t i = fx.find_untrusted_store();
  auto& ev = std::get<StoreEvent>(fx.log[i]);
  const Address pc = decode_address(ev.pc, kDefault);
  ev.target = encode_address(pc.component, 2, 5, kDefault);
  const Verdict v = check_store(fx.log, fx.object.meta);
  REQUIRE(v.violations.size() == 1);
  CHECK(v.violations[0].event_index == i);
}

TEST_CASE("invariant 1: trusted push redirected away from the stack") {
  Fixture fx;
  auto& ev = std::get<StoreEvent>(fx.log[fx.find_trusted_store()]);
  ev.target = encode_address(1, 1, 0, kDefault);  // component data, not stack
  const Verdict v = check_store(fx.log, fx.object.meta);
  REQUIRE(v.violations.size() == 1);
  CHECK(v.violations[0].detail.find("protected stack") != std::string::npos);
}

TEST_CASE("invariant 1: entry push to the protected stack is allowed") {
  Fixture fx;
  const auto& ev = std::get<StoreEvent>(fx.log[fx.find_trusted_store()]);
  const Address target = decode_address(ev.target, kDefault);
  CHECK(target.component == 0);
  CHECK(target.slot == 1);
  CHECK(check_store(fx.log, fx.object.meta).pass());
}

TEST_CASE("invariant 2: unaligned computed jump") {
  Fixture fx;
  const std::size_t i = fx.find_transfer(TransferKind::JumpReg, false);
  auto& ev = std::get<TransferEvent>(fx.log[i]);
  ev.target += 1;
  const Verdict v = check_jump(fx.log, fx.object.meta);
  REQUIRE(v.violations.size() == 1);
  CHECK(v.violations[0].invariant == 2);
}

TEST_CASE("invariant 2: computed jump into another component") {
  Fixture fx;
  auto& ev =
      std::get<TransferEvent>(fx.log[fx.find_transfer(TransferKind::JumpReg, false)]);
  ev.target = encode_address(2, 0, 0, kDefault);
  REQUIRE(check_jump(fx.log, fx.object.meta).violations.size() == 1);
}

TEST_CASE("invariant 2: computed jump into a data slot") {
  Fixture fx;
  auto& ev =
      std::get<TransferEvent>(fx.log[fx.find_transfer(TransferKind::JumpReg, false)]);
  const Address pc = decode_address(ev.pc, kDefault);
  ev.target = encode_address(pc.component, 1, 0, kDefault);
  REQUIRE(check_jump(fx.log, fx.object.meta).violations.size() == 1);
}

TEST_CASE("invariant 2: direct call to a non-imported entry") {
  // Component 3 exists but nobody imports it.
  const char* src = R"(sfi-ir 1
main 1 0
component 1
export 0
import 2 0
proc 0
  const 1 r3
  call 2 0
  halt
end
component 2
export 0
proc 0
  const 2 r3
  return
end
component 3
export 0
proc 0
  return
end
)";
  MachineObject object = backend::compile(oracles::parse_program(src), kDefault);
  RunOutcome out = run(object, 10000);
  REQUIRE(out.status == RunStatus::Halted);
  ExecutionLog log = out.log;
  for (auto& e : log)
    if (auto* tr = std::get_if<TransferEvent>(&e))
      if (tr->kind == TransferKind::JalDirect &&
          tr->target == object.meta.entry_points.at({2, 0}))
        tr->target = object.meta.entry_points.at({3, 0});
  const Verdict v = check_jump(log, object.meta);
  REQUIRE(v.violations.size() == 1);
  CHECK(v.violations[0].detail.find("not imported") != std::string::npos);
}

TEST_CASE("invariant 2: direct call to a garbage address") {
  Fixture fx;
  auto& ev = std::get<TransferEvent>(fx.log[fx.find_cross_jal()]);
  ev.target = encode_address(9, 4, 100, kDefault);
  REQUIRE(check_jump(fx.log, fx.object.meta).violations.size() >= 1);
}

TEST_CASE("invariant 2: branch leaving its procedure slot") {
  Fixture fx;
  const std::size_t i = fx.find_transfer(TransferKind::BnzTaken, false);
  auto& ev = std::get<TransferEvent>(fx.log[i]);
  const Address pc = decode_address(ev.pc, kDefault);
  ev.target = encode_address(pc.component, pc.slot + 2, 0, kDefault);
  const Verdict v = check_jump(fx.log, fx.object.meta);
  REQUIRE(v.violations.size() == 1);
  CHECK(v.violations[0].detail.find("branch") != std::string::npos);
}

TEST_CASE("invariant 3: return to the wrong address") {
  Fixture fx;
  const std::size_t i = fx.find_transfer(TransferKind::JumpReg, true);
  auto& ev = std::get<TransferEvent>(fx.log[i]);
  ev.target += 1;  // one past the legitimate continuation
  const Verdict v = check_stack(fx.log, fx.object.meta);
  REQUIRE(v.violations.size() >= 1);
  CHECK(v.violations[0].invariant == 3);
  CHECK(v.violations[0].event_index == i);
  // Invariant 2 leaves pop-range jumps alone.
  CHECK(check_jump(fx.log, fx.object.meta).pass());
}

TEST_CASE("invariant 3: pop from an empty control stack") {
  Fixture fx;
  // After the final return the shadow stack is empty; a further pop that
  // does not land on the halt anchor is a violation.
  const std::size_t i = fx.find_transfer(TransferKind::JumpReg, true);
  const auto ev = std::get<TransferEvent>(fx.log[i]);
  TransferEvent forged = ev;
  forged.step = event_step(fx.log.back()) + 1;
  forged.target = encode_address(1, 0, 0, kDefault);
  fx.log.push_back(forged);
  const Verdict v = check_stack(fx.log, fx.object.meta);
  REQUIRE(v.violations.size() >= 1);
  CHECK(v.violations.back().detail.find("empty") != std::string::npos);
}

TEST_CASE("invariant 3: a final pop to the halt anchor is legal") {
  Fixture fx;
  CHECK(check_stack(fx.log, fx.object.meta).pass());
}

TEST_CASE("invariant 2: startup call redirected off the main entry") {
  Fixture fx;
  for (auto& e : fx.log)
    if (auto* tr = std::get_if<TransferEvent>(&e)) {
      const TrustedRange* r = fx.object.meta.range_at(tr->pc);
      if (r != nullptr && r->kind == RangeKind::Startup) {
        tr->target = fx.object.meta.entry_points.at({2, 0});
        break;
      }
    }
  const Verdict v = check_jump(fx.log, fx.object.meta);
  REQUIRE(v.violations.size() == 1);
  CHECK(v.violations[0].detail.find("startup") != std::string::npos);
}

TEST_CASE("checkers reject logs that do not match the object") {
  Fixture fx;
  auto& ev = std::get<StoreEvent>(fx.log[fx.find_untrusted_store()]);
  ev.pc = encode_address(7, 0, 0, kDefault);
  CHECK_THROWS_AS(check_store(fx.log, fx.object.meta), MetaMismatch);
}

TEST_CASE("an early return through an own pop sequence is a matched pop") {
  // The label sits directly on the return sequence, so the computed jump
  // drops into the pop. That is just a return: all checkers stay green.
  const char* src = R"(sfi-ir 1
main 1 0
component 1
export 0
import 2 0
proc 0
  const 1 r3
  call 2 0
  const 0 r3
  return
end
component 2
export 0
proc 0
  const label L0 r1
  const 7 r3
  jump r1
  const 0x63 r3
  label L0
  return
end
)";
  MachineObject object = backend::compile(oracles::parse_program(src), kDefault);
  const RunOutcome out = run(object, 10000);
  REQUIRE(out.status == RunStatus::Halted);
  CHECK(check_all(out.log, object.meta).pass());
  // The callee's return value is the one set before the computed jump.
  CHECK(out.final_state.regs[kRegArg] == 0);  // main returned 0 at the end
  const auto trace = fuzz::derive_trace(out.log, object.meta);
  REQUIRE(trace.size() == 2);
  CHECK(std::get<ir::RetEvent>(trace[1]).value == 7);
}

TEST_CASE("protected stack overflow is flagged, not silent") {
  // The push sequence does not bound the stack; recursion past the slot
  // capacity spills the next push outside the protected slot, and the
  // store checker reports the escape. Fuel below ~6 words per call keeps
  // real runs inside the envelope (the default configuration allows 4096
  // frames, far beyond any 10000-step run).
  BitConfig small;
  small.offset_bits = 8;  // 256-word slots
  small.bundle_bits = 3;
  const ir::IRProgram p = oracles::parse_program(R"(sfi-ir 1
main 1 0
component 1
export 0
proc 0
  const 1 r3
  call 1 0
  return
end
)");
  const MachineObject object = backend::compile(p, small);
  const RunOutcome out = run(object, 3000);
  const Verdict v = check_store(out.log, object.meta);
  REQUIRE_FALSE(v.violations.empty());
  const Violation& first = v.violations.front();
  const TrustedRange* r = object.meta.range_at(first.pc);
  REQUIRE(r != nullptr);
  CHECK(r->kind == RangeKind::EntryPush);
  CHECK(first.target ==
        object.meta.protected_stack_base + small.slot_capacity());

  // Within the envelope the same program is clean.
  const RunOutcome ok = run(object, 1200);
  CHECK(check_all(ok.log, object.meta).pass());
}

TEST_CASE("verdicts count checked events") {
  Fixture fx;
  const Verdict store = check_store(fx.log, fx.object.meta);
  std::size_t stores = 0;
  for (const auto& e : fx.log)
    if (std::holds_alternative<StoreEvent>(e)) ++stores;
  CHECK(store.events_checked == stores);
}
