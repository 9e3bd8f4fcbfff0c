#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "promptfwa/fwa.hpp"
#include "promptfwa/runner.hpp"

namespace promptfwa::native {

/// The candidate text cannot be loaded (unbalanced brackets, no directive, bad option).
class CandidateSyntaxError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Fault { none, spin, crash, infeasible, wrong_objective };

/// Candidate programs run by the bundled worker carry one directive line:
///
///     # native-fwa: preset=appendix fw_size=5 sp_size=20 mutation_rate=0.2
///
/// Keys: preset, fw_size, sp_size, init_amp, max_iter, mutation_rate, stall_limit, fault.
struct Directive {
    fwa::Preset preset = fwa::Preset::baseline;
    fwa::FwaParams params;
    Fault fault = Fault::none;
};

/// Brackets must balance outside string literals and `#` comments.
void check_brackets(std::string_view source);

Directive parse_directive(std::string_view source);

/// Executes a job in the calling process. Fault::spin busy-loops forever.
runner::EvalReport run_job(const runner::EvalJob& job);

/// CandidateRunner that calls run_job directly; a spin fault is reported as
/// timed_out instead of being executed.
class InProcessRunner : public runner::CandidateRunner {
  public:
    runner::EvalReport run(const runner::EvalJob& job) override;
};

}  // namespace promptfwa::native
