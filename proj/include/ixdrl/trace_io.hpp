#pragma once

#include <string>

#include "ixdrl/types.hpp"

namespace ixdrl {

// Trace files are JSON Lines: line 1 is a header object carrying the action
// space, discount, optional reward range and schema version; every following
// line is one datapoint tagged with its trace_id. Trace-level metadata rides
// on the first datapoint of a trace ("meta") and the terminal flag on the
// last ("terminal"). See docs/trace_format.md for the full schema.

// Parses and fully validates a trace file; throws ValidationError with
// trace/step/field context on the first violation.
TraceSet load_traceset(const std::string& path);

// Writes a validated TraceSet. Floats use shortest round-trip decimal
// encoding, so save -> load is the identity and output is byte-stable.
void save_traceset(const TraceSet& ts, const std::string& path);

}  // namespace ixdrl
