#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "sfi/formats.hpp"

// End-to-end tests of the installed binary. The test runner exports
// SFIC_BIN; each case works in its own scratch directory under the build
// tree's working directory.

namespace {

std::string sfic() {
  const char* bin = std::getenv("SFIC_BIN");
  REQUIRE(bin != nullptr);
  return bin;
}

struct CommandResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

CommandResult run_cli(const std::string& args) {
  const std::string out_file = "cli_output.tmp";
  const std::string command = sfic() + " " + args + " > " + out_file + " 2>&1";
  const int status = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WEXITSTATUS(status);
  result.output = sfi::text::read_file(out_file);
  return result;
}

void write(const std::string& path, const std::string& content) {
  sfi::text::write_file(path, content);
}

const char* kTwoComponents = R"(sfi-ir 1
main 1 0
component 1
export 0
import 2 0
block 0 size 4
proc 0
  const 0x2a r3
  call 2 0
  const ptr 0 0 r1
  store r1 r3
  const 0 r3
  return
end
component 2
export 0
proc 0
  return
end
)";

}  // namespace

TEST_CASE("compile, run, check, trace: the happy path") {
  write("prog.ir", kTwoComponents);
  CHECK(run_cli("compile prog.ir -o prog.obj").exit_code == 0);

  // Object files are canonical: recompiling produces identical bytes.
  CHECK(run_cli("compile prog.ir -o prog2.obj").exit_code == 0);
  CHECK(sfi::text::read_file("prog.obj") == sfi::text::read_file("prog2.obj"));

  const CommandResult run = run_cli("run prog.obj --fuel 10000 -o prog.log");
  CHECK(run.exit_code == 0);
  CHECK(run.output.find("status=halted") != std::string::npos);

  const CommandResult check = run_cli("check prog.obj prog.log");
  CHECK(check.exit_code == 0);
  CHECK(check.output.find("invariant 1: pass") != std::string::npos);
  CHECK(check.output.find("invariant 2: pass") != std::string::npos);
  CHECK(check.output.find("invariant 3: pass") != std::string::npos);

  const CommandResult trace = run_cli("trace prog.obj prog.log");
  CHECK(trace.exit_code == 0);
  CHECK(trace.output.find("call caller=1 proc=0 arg=42 callee=2") !=
        std::string::npos);
  CHECK(trace.output.find("ret from=2 value=42 to=1") != std::string::npos);

  const CommandResult da = run_cli("disasm prog.obj");
  CHECK(da.exit_code == 0);
  CHECK(da.output.find("code component 1 slot 0") != std::string::npos);
}

TEST_CASE("single checkers can be selected") {
  write("prog.ir", kTwoComponents);
  REQUIRE(run_cli("compile prog.ir -o prog.obj").exit_code == 0);
  REQUIRE(run_cli("run prog.obj --fuel 10000 -o prog.log").exit_code == 0);
  const CommandResult check = run_cli("check prog.obj prog.log --invariant 2");
  CHECK(check.exit_code == 0);
  CHECK(check.output.find("invariant 2: pass") != std::string::npos);
  CHECK(check.output.find("invariant 1") == std::string::npos);
}

TEST_CASE("a tampered log fails the check with exit 1") {
  write("prog.ir", kTwoComponents);
  REQUIRE(run_cli("compile prog.ir -o prog.obj").exit_code == 0);
  REQUIRE(run_cli("run prog.obj --fuel 10000 -o prog.log").exit_code == 0);

  // Redirect the first untrusted store into component 3.
  std::istringstream in(sfi::text::read_file("prog.log"));
  std::ostringstream out;
  std::string line;
  bool tampered = false;
  while (std::getline(in, line)) {
    if (!tampered && line.rfind("store", 0) == 0 &&
        line.find("target=0x11000") != std::string::npos) {
      const auto pos = line.find("target=0x11000");
      line.replace(pos, 14, "target=0x13000");  // component 3's data
      tampered = true;
    }
    out << line << "\n";
  }
  REQUIRE(tampered);
  write("tampered.log", out.str());

  const CommandResult check = run_cli("check prog.obj tampered.log");
  CHECK(check.exit_code == 1);
  CHECK(check.output.find("invariant 1: FAIL") != std::string::npos);
}

TEST_CASE("validation failures exit 1 and name the call site") {
  write("bad.ir", R"(sfi-ir 1
main 1 0
component 1
export 0
proc 0
  call 2 0
  halt
end
component 2
export 0
proc 0
  return
end
)");
  const CommandResult r = run_cli("compile bad.ir -o bad.obj");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("CallNotImported") != std::string::npos);
  CHECK(r.output.find("component 1 proc 0 instr 0") != std::string::npos);
}

TEST_CASE("parse errors exit 2 with a position") {
  write("broken.ir", "sfi-ir 1\nmain 1 0\ncomponent 1\nproc 0\n  blorp\nend\n");
  const CommandResult r = run_cli("compile broken.ir -o broken.obj");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("line 5") != std::string::npos);
}

TEST_CASE("sixteen components exceed the component field") {
  std::ostringstream src;
  src << "sfi-ir 1\nmain 1 0\n";
  for (int id = 1; id <= 16; ++id)
    src << "component " << id << "\nexport 0\nproc 0\n  halt\nend\n";
  write("many.ir", src.str());
  const CommandResult r = run_cli("compile many.ir -o many.obj");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("TooManyComponents") != std::string::npos);

  // Fifteen fit: the field has sixteen values and id 0 is the runtime's.
  std::ostringstream src2;
  src2 << "sfi-ir 1\nmain 1 0\n";
  for (int id = 1; id <= 15; ++id)
    src2 << "component " << id << "\nexport 0\nproc 0\n  halt\nend\n";
  write("full.ir", src2.str());
  CHECK(run_cli("compile full.ir -o full.obj").exit_code == 0);
}

TEST_CASE("unknown flags and subcommands are usage errors") {
  CHECK(run_cli("compile --frobnicate x -o y").exit_code == 2);
  CHECK(run_cli("explode now").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);  // a subcommand is required
}

TEST_CASE("format version mismatches exit 2") {
  write("prog.ir", kTwoComponents);
  REQUIRE(run_cli("compile prog.ir -o prog.obj").exit_code == 0);
  std::string object = sfi::text::read_file("prog.obj");
  const auto pos = object.find("\"version\": 1");
  REQUIRE(pos != std::string::npos);
  object.replace(pos, 12, "\"version\": 3");
  write("future.obj", object);
  const CommandResult r = run_cli("run future.obj --fuel 10 -o x.log");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("version") != std::string::npos);
}

TEST_CASE("fuzz is deterministic and clean") {
  const CommandResult a = run_cli("fuzz --tests 10 --seed 7 -o fuzz_a.json");
  const CommandResult b = run_cli("fuzz --tests 10 --seed 7 -o fuzz_b.json");
  CHECK(a.exit_code == 0);
  CHECK(b.exit_code == 0);
  CHECK(sfi::text::read_file("fuzz_a.json") ==
        sfi::text::read_file("fuzz_b.json"));

  const CommandResult wb =
      run_cli("fuzz --tests 10 --seed 3 --mode wellbehaved");
  CHECK(wb.exit_code == 0);
  CHECK(wb.output.find("\"trace_mismatches\": 0") != std::string::npos);
}

TEST_CASE("attack command runs clean") {
  const CommandResult r = run_cli("attack --tests 5 --flips 2 --seed 9");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("\"clean\": true") != std::string::npos);
}
