// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "evse_decoy/analysis/aggregate.hpp"
#include "evse_decoy/analysis/classifier.hpp"

namespace evse_decoy::analysis {

std::string render_text(const AggregateReport& report);

/// Tab-separated "section\tkey\tvalue" rows under a header row. Means are
/// printed with three decimals, shares with two.
std::string render_table(const AggregateReport& report);

/// One JSON object per line:
/// {"id":7,"verdict":"Malicious","rules":["cgi-bin-probe"],"decode_failed":false}
std::string render_classifications(const std::vector<RequestClassification>& classifications);

}  // namespace evse_decoy::analysis
