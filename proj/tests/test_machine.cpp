#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sfi/machine.hpp"

using namespace sfi;

namespace {

// Bare object with code in the runtime slot; enough for single-step tests.
MachineObject bare_object(std::vector<Instruction> code) {
  MachineObject object;
  object.cfg = BitConfig{};
  object.meta.cfg = object.cfg;
  object.meta.code_lengths[{0, 0}] = code.size();
  object.code[{0, 0}] = std::move(code);
  return object;
}

}  // namespace

TEST_CASE("const writes a register and advances") {
  MachineObject object = bare_object({Const{5, 1}, Halt{}});
  MachineState state;
  const StepResult r = step(state, object);
  REQUIRE(r.ok);
  CHECK_FALSE(r.event.has_value());
  CHECK(state.regs[1] == 5);
  CHECK(state.pc == 1);
  CHECK(state.steps == 1);
}

TEST_CASE("branch not taken falls through without an event") {
  MachineObject object = bare_object({Bnz{1, 3}, Halt{}});
  MachineState state;  // r1 == 0
  const StepResult r = step(state, object);
  REQUIRE(r.ok);
  CHECK_FALSE(r.event.has_value());
  CHECK(state.pc == 1);
}

TEST_CASE("taken branch logs a transfer") {
  MachineObject object = bare_object({Const{1, 1}, Bnz{1, 3}, Halt{}});
  MachineState state;
  step(state, object);
  const StepResult r = step(state, object);
  REQUIRE(r.event.has_value());
  const auto ev = std::get<TransferEvent>(*r.event);
  CHECK(ev.kind == TransferKind::BnzTaken);
  CHECK(ev.pc == 1);
  CHECK(ev.target == 4);
  CHECK(state.pc == 4);
}

TEST_CASE("jal links and transfers") {
  // The same five words hand-stepped: pc and register trajectories below
  // come from the table, not from the simulator.
  //   0x0fe: const 0x2a r3
  //   0x0ff: nop
  //   0x100: jal 0x53010
  // expected: r3=42 after step 1, R_RA=0x101 and pc=0x53010 after step 3.
  std::vector<Instruction> code(0x101, Nop{});
  code[0x0fe] = Const{0x2a, 3};
  code[0x100] = Jal{0x53010};
  MachineObject object = bare_object(std::move(code));

  MachineState state;
  state.pc = 0x0fe;
  REQUIRE(step(state, object).ok);
  CHECK(state.regs[3] == 0x2a);
  CHECK(state.pc == 0x0ff);
  REQUIRE(step(state, object).ok);
  CHECK(state.pc == 0x100);

  const StepResult r = step(state, object);
  REQUIRE(r.ok);
  CHECK(state.regs[kRegRa] == 0x101);
  CHECK(state.pc == 0x53010);
  REQUIRE(r.event.has_value());
  const auto ev = std::get<TransferEvent>(*r.event);
  CHECK(ev.kind == TransferKind::JalDirect);
  CHECK(ev.target == 0x53010);
  CHECK(ev.arg == 0x2a);  // argument register snapshot rides along
}

TEST_CASE("store logs and load reads it back; unmapped loads read zero") {
  MachineObject object = bare_object({
      Const{0x13004, 1},  // address
      Const{77, 2},       // value
      Store{1, 2},
      Load{1, 4},
      Const{0x13005, 5},  // untouched address
      Load{5, 6},
      Halt{},
  });
  const RunOutcome out = run(object, 100);
  CHECK(out.status == RunStatus::Halted);
  CHECK(out.final_state.regs[4] == 77);
  CHECK(out.final_state.regs[6] == 0);

  REQUIRE(out.log.size() == 2);
  const auto store_ev = std::get<StoreEvent>(out.log[0]);
  CHECK(store_ev.pc == 2);
  CHECK(store_ev.target == 0x13004);
  CHECK(store_ev.value == 77);
  CHECK(std::holds_alternative<HaltEvent>(out.log[1]));
}

TEST_CASE("halted state never changes") {
  MachineObject object = bare_object({Halt{}, Const{1, 1}});
  MachineState state;
  REQUIRE(step(state, object).ok);
  CHECK(state.halted);
  const Word steps = state.steps;
  const StepResult r = step(state, object);
  CHECK(r.ok);
  CHECK_FALSE(r.event.has_value());
  CHECK(state.steps == steps);
  CHECK(state.regs[1] == 0);
}

TEST_CASE("fetch outside laid-out code is stuck") {
  MachineObject object =
      bare_object({Const{0x12000, 1}, Jump{1}});  // 0x12000 is a data slot
  MachineState state;
  REQUIRE(step(state, object).ok);
  REQUIRE(step(state, object).ok);
  const StepResult r = step(state, object);
  CHECK_FALSE(r.ok);
  CHECK(r.reason == StuckReason::InvalidFetch);

  const RunOutcome out = run(object, 10);
  CHECK(out.status == RunStatus::Stuck);
  CHECK(out.stuck_step == 2);
}

TEST_CASE("fuel is required and bounds the run") {
  MachineObject object = bare_object({Const{1, 1}, Bnz{1, 0}});
  CHECK_THROWS_AS(run(object, 0), std::invalid_argument);

  const RunOutcome out = run(object, 100);
  CHECK(out.status == RunStatus::OutOfFuel);
  CHECK(out.final_state.steps == 100);
}

TEST_CASE("runs are deterministic and fuel-monotone") {
  std::vector<Instruction> code = {
      Const{0x13000, 1}, Const{0, 2},   Const{1, 3},
      Store{1, 2},                        // mem[r1] <- r2
      BinOp{BinaryOp::Add, 2, 3, 2},      // r2 += 1
      BinOp{BinaryOp::Add, 1, 3, 1},      // r1 += 1
      Bnz{3, -3},                         // loop forever
  };
  MachineObject object = bare_object(code);

  const RunOutcome a = run(object, 50);
  const RunOutcome b = run(object, 50);
  CHECK(a.log == b.log);
  CHECK(a.final_state.pc == b.final_state.pc);
  CHECK(a.final_state.mem == b.final_state.mem);

  const RunOutcome longer = run(object, 200);
  REQUIRE(a.log.size() <= longer.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i)
    REQUIRE(a.log[i] == longer.log[i]);

  Word last_step = 0;
  bool first = true;
  for (const auto& ev : longer.log) {
    if (!first) REQUIRE(event_step(ev) > last_step);
    last_step = event_step(ev);
    first = false;
  }
}

TEST_CASE("log transfers replay to the exact pc sequence") {
  std::vector<Instruction> code = {
      Const{3, 1},                     // counter
      Const{1, 2},                     // decrement
      Const{0x13000, 4}, Const{9, 5},
      Store{4, 5},
      BinOp{BinaryOp::Sub, 1, 2, 1},
      Bnz{1, -2},
      Jal{9},
      Halt{},
      Halt{},
  };
  MachineObject object = bare_object(code);
  const RunOutcome out = run(object, 100);
  REQUIRE(out.status == RunStatus::Halted);
  const auto replayed =
      oracles::replay_pc_sequence(object, out.log, out.final_state.steps);
  REQUIRE(replayed.has_value());
  CHECK(*replayed == out.final_state.steps);
}

TEST_CASE("injections rewrite data memory and are logged") {
  MachineObject object = bare_object({
      Const{0x11000, 1},  // component 1, slot 1, offset 0
      Load{1, 2},
      Halt{},
  });
  object.data_init[{1, 1}] = {0xAA};

  InjectionSchedule schedule;
  schedule.add(1, 0x11000, 0x55, object.cfg);
  const RunOutcome out = run(object, 10, &schedule);
  REQUIRE(out.status == RunStatus::Halted);
  CHECK(out.final_state.regs[2] == 0x55);

  REQUIRE(out.log.size() == 2);
  const auto inject = std::get<InjectEvent>(out.log[0]);
  CHECK(inject.target == 0x11000);
  CHECK(inject.value == 0x55);

  // Without the injection the original image is visible.
  const RunOutcome base = run(object, 10);
  CHECK(base.final_state.regs[2] == 0xAA);
}

TEST_CASE("out-of-range register encodings wrap into the file") {
  // Hand-built instructions may carry any 8-bit register index; execution
  // treats the file as total, so r33 aliases r1.
  MachineObject object = bare_object({Const{6, 33}, Halt{}});
  const RunOutcome out = run(object, 10);
  CHECK(out.status == RunStatus::Halted);
  CHECK(out.final_state.regs[1] == 6);
}

TEST_CASE("injection targets must be component data memory") {
  const BitConfig cfg;
  InjectionSchedule schedule;
  CHECK_THROWS_AS(schedule.add(0, encode_address(1, 2, 0, cfg), 1, cfg),
                  Error);  // code slot
  CHECK_THROWS_AS(schedule.add(0, encode_address(0, 1, 0, cfg), 1, cfg),
                  Error);  // runtime memory
  CHECK_NOTHROW(schedule.add(0, encode_address(1, 3, 7, cfg), 1, cfg));
}
