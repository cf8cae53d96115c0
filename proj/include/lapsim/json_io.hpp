#ifndef LAPSIM_JSON_IO_HPP
#define LAPSIM_JSON_IO_HPP

#include <nlohmann/json.hpp>

#include "lapsim/diffusion.hpp"
#include "lapsim/harness.hpp"
#include "lapsim/lap.hpp"
#include "lapsim/planner.hpp"
#include "lapsim/simulator.hpp"

namespace lapsim {

// JSON views of the reporting types. Class/pool/edge ids are 1-based, as in
// the spec-file format.

nlohmann::json spp_json(const SystemSpec& spec, const SppSolution& sol, const CrpReport& crp);
nlohmann::json priorities_json(const SystemSpec& spec, const PriorityAssignment& pa);
nlohmann::json equilibrium_json(const SystemSpec& spec, const PriorityAssignment& pa,
                                const EquilibriumPoint& eq, const Assumption3Report& a3);
nlohmann::json stationary_stats_json(const SystemSpec& spec, const StationaryStats& stats);
nlohmann::json diffusion_json(const SystemSpec& spec, const DiffusionModel& model,
                              const StabilityReport& stability);
nlohmann::json sweep_report_json(const SweepReport& report);
nlohmann::json convergence_json(const ConvergenceSummary& summary);
nlohmann::json descent_json(const DescentReport& report);

} // namespace lapsim

#endif
