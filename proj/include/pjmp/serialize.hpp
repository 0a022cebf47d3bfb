#pragma once

// JSON and CSV encodings of reports. Doubles are written in shortest
// round-trip form; non-finite values become null.

#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "pjmp/constants.hpp"
#include "pjmp/montecarlo.hpp"
#include "pjmp/statespace.hpp"
#include "pjmp/verify.hpp"

namespace pjmp {

using ojson = nlohmann::ordered_json;

ojson to_json(const GridLocation& loc);
ojson to_json(const ConstantsReport& report);
/// alpha, c, gamma at each time plus beta and C0 for one variant.
ojson polynomials_json(const ConstantsReport& report, ConstantsVariant variant, std::span<const double> times);
ojson to_json(const InequalityReport& report);
ojson to_json(const CheckSummary& summary);
ojson to_json(const SweepSummary& summary);
ojson to_json(const Estimate& estimate);
ojson to_json(const ChiSquareResult& result);

/// Index, recurrence flag and potentials per state.
ojson states_json(const NeuronModel& model, const StateSpace& space);

std::string constants_csv(const ConstantsReport& report);
std::string states_csv(const NeuronModel& model, const StateSpace& space);
/// from,neuron,to,rate for every jump (self-jumps included).
std::string edges_csv(const StateSpace& space);
/// One row per report: name,variant,f_id,x,t,lhs,rhs,margin,status.
std::string margins_csv(std::span<const InequalityReport> reports);

/// Shortest round-trip decimal text of a double ("nan", "inf" spelled out).
std::string format_double(double v);

}  // namespace pjmp
