#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sfi/backend.hpp"
#include "sfi/checkers.hpp"
#include "sfi/ir.hpp"
#include "sfi/machine.hpp"

namespace sfi::fuzz {

enum class GenMode : std::uint8_t { WellBehaved, Wild };

const char* gen_mode_name(GenMode mode);

struct Range {
  std::uint32_t min = 0;
  std::uint32_t max = 0;  // inclusive
};

// Instruction frequency weights, uniform by default with stores and calls
// boosted: they exercise the instrumentation.
struct Weights {
  std::uint32_t konst = 1;
  std::uint32_t mov = 1;
  std::uint32_t binop = 1;
  std::uint32_t load = 1;
  std::uint32_t store = 2;
  std::uint32_t bnz = 1;
  std::uint32_t jump = 1;
  std::uint32_t jal = 1;
  std::uint32_t call = 2;
  std::uint32_t ret = 1;
  std::uint32_t nop = 1;
};

struct GenConfig {
  std::uint64_t seed = 1;
  GenMode mode = GenMode::Wild;
  Range components{2, 4};
  Range procedures{1, 3};    // per component
  Range instructions{5, 40}; // per procedure, before expansion into units
  Range blocks{1, 3};        // per component
  Word fuel = 10000;
  Weights weights;

  bool valid() const {
    const auto nonempty = [](Range r) { return r.min <= r.max; };
    const std::uint64_t weight_sum =
        std::uint64_t{weights.konst} + weights.mov + weights.binop +
        weights.load + weights.store + weights.bnz + weights.jump +
        weights.jal + weights.call + weights.ret + weights.nop;
    return nonempty(components) && components.min >= 1 &&
           nonempty(procedures) && procedures.min >= 1 &&
           nonempty(instructions) && nonempty(blocks) && fuel >= 1 &&
           weight_sum > 0;
  }
};

// Deterministic in cfg.seed. Always emits a valid program. WellBehaved
// programs are free of undefined behavior by construction: loads and stores
// go through tracked own-block pointers with in-range offsets, computed
// jumps use freshly materialized own labels, and the argument register
// carries an integer across every component boundary. Wild programs stay
// syntactically valid but feed arbitrary words to stores and jumps.
ir::IRProgram gen_program(const GenConfig& cfg);

// Lifts the machine log to the cross-component call/return trace: direct
// calls into another component's entry point become Call events, jumps out
// of a return-pop range that land in another component become Ret events.
// Runtime (component 0) transitions are excluded.
ir::Trace derive_trace(const ExecutionLog& log, const LayoutMeta& meta);

struct Failure {
  std::uint64_t test_index = 0;
  std::uint64_t seed = 0;
  std::string kind;
  std::string detail;
  std::string repro;      // command line reproducing this single test
  std::string shrunk_ir;  // reduced program text, when shrinking ran
};

struct FuzzReport {
  GenMode mode = GenMode::Wild;
  std::uint64_t tests = 0;
  std::uint64_t discards = 0;  // generator contract: stays 0
  std::array<std::uint64_t, 3> violations{};  // per invariant 1..3
  std::uint64_t selfcheck_failures = 0;
  std::uint64_t trace_mismatches = 0;
  std::uint64_t ub_runs = 0;        // well-behaved runs must never reach UB
  std::uint64_t wb_stuck = 0;       // nor get stuck in the simulator
  std::uint64_t halted = 0;
  std::uint64_t out_of_fuel = 0;
  std::uint64_t stuck = 0;
  std::uint64_t flips_requested = 0;  // attack runs only
  std::uint64_t flips_applied = 0;
  std::vector<Failure> failures;

  bool clean() const {
    return discards == 0 && violations[0] == 0 && violations[1] == 0 &&
           violations[2] == 0 && selfcheck_failures == 0 &&
           trace_mismatches == 0 && ub_runs == 0 && wb_stuck == 0;
  }
};

std::string report_to_json(const FuzzReport& report);

// Outcome of one generate/compile/run/check test, reused by the pipeline,
// the attack harness, and shrinking.
struct TestOutcome {
  bool discarded = false;
  std::vector<std::string> selfcheck;
  RunStatus run_status = RunStatus::Halted;
  checkers::AllVerdicts verdicts;
  bool trace_mismatch = false;
  bool ub = false;
  std::string detail;

  bool clean(GenMode mode) const;
};

TestOutcome run_single(const ir::IRProgram& program, GenMode mode, Word fuel,
                       backend::Mutation mutation = backend::Mutation::None);

// Per-test seeds are master seed + test index, so every failure reproduces
// with --tests 1 --seed <failing seed>.
FuzzReport run_pipeline(const GenConfig& cfg, std::uint64_t tests);

// Pipeline with `flips` random corruptions of component data memory per
// test, applied at random steps during simulation. The isolation invariants
// must hold regardless; traces are not compared.
FuzzReport inject_attack(const GenConfig& cfg, std::uint32_t flips,
                         std::uint64_t tests);

// Greedy reduction: drop components, procedures, blocks and instructions,
// and shrink constants toward zero, while the program stays valid and
// still_fails holds. Throws if still_fails(program) is not true initially.
ir::IRProgram shrink(const ir::IRProgram& program,
                     const std::function<bool(const ir::IRProgram&)>& still_fails);

struct MutationOutcome {
  backend::Mutation mutation = backend::Mutation::None;
  bool detected = false;
  std::uint64_t tests_used = 0;
  bool by_static = false;  // structural self-check flagged it
  int by_invariant = 0;    // first dynamic checker that flagged it, 0 if none
};

// Compiles wild programs with each seeded defect and reports which checker
// catches it, proving the checkers are not vacuous.
std::vector<MutationOutcome> run_mutation_suite(const GenConfig& cfg,
                                                std::uint64_t max_tests = 200);

}  // namespace sfi::fuzz
