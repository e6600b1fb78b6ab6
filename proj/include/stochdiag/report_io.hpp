#pragma once

#include <string>

#include "stochdiag/diagnostics.hpp"

namespace stochdiag::diag {

// Versioned JSON report file. Writing is deterministic: rerunning the same
// pipeline with the same seed produces byte-identical files.
void save_report(const std::string& path, const DiagnosticReport& report);
DiagnosticReport load_report(const std::string& path);

// Plain-text summary: per-diagnostic counts, flags, and the extreme values.
std::string render_summary(const DiagnosticReport& report);

}  // namespace stochdiag::diag
