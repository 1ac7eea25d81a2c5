#pragma once

#include <ostream>

namespace icw {

// Runs the full verification suite (exact majorization, rate scaling,
// identity and bound checks, sampler statistics), printing one PASS/FAIL
// line per criterion. Returns true when every criterion passes.
bool run_acceptance(std::ostream& out);

}  // namespace icw
