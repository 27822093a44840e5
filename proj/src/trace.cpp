#include "ultraco/trace.hpp"

#include "ultraco/errors.hpp"

#include <fstream>

namespace ultraco::trace {

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos)
    return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"')
      out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_trace(std::ostream &out, const iteration::Trajectory &trajectory,
                 const TraceSource &source) {
  if (source.op == nullptr)
    throw PreconditionError("trace source has no operator");
  const auto &op = *source.op;
  auto name = [&](std::size_t i) {
    return i < source.processor_names.size() ? source.processor_names[i]
                                             : std::to_string(i);
  };
  auto dist = [&](const iteration::StateVector &s) -> std::string {
    if (!source.dist_to_fixpoint)
      return "";
    return source.dist_to_fixpoint(s).value_or("");
  };

  out << "t,processor,activated,value,dist_to_fixpoint\n";
  for (std::size_t t = 1; t < trajectory.states.size(); ++t) {
    const auto &state = trajectory.states[t];
    const std::string d = csv_field(dist(state));
    for (std::size_t i = 0; i < op.processor_count(); ++i) {
      const bool active = t < trajectory.activated.size() &&
                          i < trajectory.activated[t].size() && trajectory.activated[t][i];
      out << t << ',' << csv_field(name(i)) << ',' << (active ? 1 : 0) << ','
          << csv_field(op.value_label(i, state[i])) << ',' << d << '\n';
    }
  }
  const auto &last = trajectory.final_state();
  out << "summary," << "status=" << iteration::to_string(trajectory.status) << ",converged_at="
      << (trajectory.converged_at ? std::to_string(*trajectory.converged_at) : "none") << ','
      << csv_field(op.state_label(last)) << ',' << csv_field(dist(last)) << '\n';
}

void emit_trace(const std::string &path, const iteration::Trajectory &trajectory,
                const TraceSource &source) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("cannot write trace to " + path);
  write_trace(out, trajectory, source);
  out.flush();
  if (!out)
    throw Error("failed writing trace to " + path);
}

} // namespace ultraco::trace
