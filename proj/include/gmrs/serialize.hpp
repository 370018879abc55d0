#pragma once

// JSON documents for datasets, configurations and optimizer sessions.
// Reading a document written by the matching writer reproduces the value
// exactly (doubles are emitted with round-trip precision).

#include "gmrs/driver.hpp"

#include <json.hpp>

namespace gmrs {

using Json = nlohmann::json;

Json to_json(const Vec& v);
Vec vec_from_json(const Json& j);

/// {samples: [[...]], measures: [...]} or {samples, preferences, mapping}.
Json to_json(const Dataset& data);
Dataset dataset_from_json(const Json& j, Mode mode, const Vec& unit_scale);

/// Bounds and linear constraints; nonlinear callables cannot be written.
Json to_json(const ConstraintSet& cs);
ConstraintSet constraint_set_from_json(const Json& j);

/// Nested layout {mode, surrogate, explore: {variant}, n_init, n_max, seed,
/// acquisition, alpha, rbf: {...}, gp: {..., recalibrate_every},
/// acq: {delta_cycle, naug, xaug_strategy}, inner: {...}}. A plain string for
/// explore and a top-level recalibrate_every are accepted as well. Missing
/// keys keep their defaults; unknown keys are rejected.
Json to_json(const GmrsConfig& cfg);
GmrsConfig config_from_json(const Json& j);

Json to_json(const PendingQuery& q);
PendingQuery pending_query_from_json(const Json& j);

Json to_json(const StepRecord& r);
StepRecord step_record_from_json(const Json& j);

Json to_json(const SessionState& s);
SessionState session_state_from_json(const Json& j, Mode mode, const Vec& unit_scale);

}  // namespace gmrs
