#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dualqp/dual_solver.hpp"
#include "dualqp/qp_model.hpp"

namespace dualqp {

/// Parses the JSON problem format. Bounds may be given as "inf" / "-inf".
RawProblem parse_problem_json(const std::string& text);
RawProblem read_problem_file(const std::string& path);

/// Serializes in the same format; identical input gives identical bytes.
std::string problem_to_json(const RawProblem& raw);
void write_problem_file(const std::string& path, const RawProblem& raw);

/// Inverse of ingest: every row becomes lbA = 0 or -inf, ubA = 0.
RawProblem to_raw(const QpProblem& prob);

inline constexpr const char* kTraceHeader =
    "k,dual_val,f_last,f_avg,infeas_last,infeas_avg,inner_iters,cum_matvecs";

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace);

/// Shortest decimal that round-trips; "nan", "inf", "-inf" otherwise.
std::string format_double(double v);

}  // namespace dualqp
