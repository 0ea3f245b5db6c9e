#pragma once

#include <iosfwd>
#include <optional>

#include "mfdr/grid_control.hpp"
#include "mfdr/load_model.hpp"
#include "mfdr/run_config.hpp"
#include "mfdr/signal.hpp"

namespace mfdr {

/// Process exit codes shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitNumerical = 2, kExitVerification = 3 };

LoadModel model_from_config(const RunConfig& config);

/// Reference for `track`, in on-fraction deviation units at the grid period.
/// Synthetic or CSV source, optional lowpass, then scaled against `env` when
/// amplitude_fraction > 0, and faded in over two hours.
SignalSeries build_reference(const RunConfig& config, const std::optional<CapacityEnvelope>& env);

/// Envelope from the override keys, from estimation, or none.
std::optional<CapacityEnvelope> resolve_envelope(const RunConfig& config, const LoadModel& model,
                                                 const NominalStats& stats);

int cmd_design(const RunConfig& config, std::ostream& log);
int cmd_analyze_lti(const RunConfig& config, std::ostream& log);
int cmd_simulate(const RunConfig& config, std::ostream& log);
int cmd_track(const RunConfig& config, std::ostream& log);
int cmd_capacity(const RunConfig& config, std::ostream& log);
int cmd_verify(const RunConfig& config, std::ostream& log);

}  // namespace mfdr
