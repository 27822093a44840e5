#pragma once

#include "ultraco/iteration.hpp"

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace ultraco::trace {

/// Distance label of a state to the certified fixed point; nullopt leaves the
/// column empty.
using DistanceLabeler =
    std::function<std::optional<std::string>(const iteration::StateVector &)>;

struct TraceSource {
  const iteration::DecomposedOperator *op = nullptr;
  std::vector<std::string> processor_names;
  DistanceLabeler dist_to_fixpoint; // may be empty
};

/// RFC 4180 quoting when the field holds a comma, quote or line break.
std::string csv_field(std::string_view text);

/// Header `t,processor,activated,value,dist_to_fixpoint`, one row per tick
/// t >= 1 and processor, then
/// `summary,status=<s>,converged_at=<t|none>,<final state>,<final distance>`.
/// Lines end in LF.
void write_trace(std::ostream &out, const iteration::Trajectory &trajectory,
                 const TraceSource &source);

/// write_trace into a file. Throws Error when the path cannot be written.
void emit_trace(const std::string &path, const iteration::Trajectory &trajectory,
                const TraceSource &source);

} // namespace ultraco::trace
