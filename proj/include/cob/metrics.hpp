#pragma once

#include <string>
#include <vector>

#include "cob/policy.hpp"

namespace cob {

/// Exact column order of the per-iteration metrics file.
extern const char* const kMetricsCsvHeader;

/// One row per record, values at %.17g so repeated runs are byte-identical.
void write_metrics_csv(const std::string& path, const std::vector<LossBreakdown>& records);
std::vector<LossBreakdown> read_metrics_csv(const std::string& path);

}  // namespace cob
