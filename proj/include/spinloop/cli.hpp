#pragma once

#include <cstdint>
#include <string>

#include "spinloop/model.hpp"

namespace spinloop {

// Batch front-end. Subcommands: derive-rates, normal-modes, sweep-spectra,
// covariance, exchange, interference, fit, design-study, synth. Exit codes:
// 0 success, 2 config error, 3 numerical failure, 4 fit non-convergence.
int run_cli(int argc, const char* const* argv);

// Report body shared between cmd_derive_rates and the golden-file test.
std::string format_rates_report(const DerivedRates& rates, const CooperativityBound& bound,
                                const DoubleLoopCooperativity& double_loop,
                                std::uint64_t config_hash);

}  // namespace spinloop
