#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace larvaecast {

enum class VariableKind { kSummerTmean, kSummerTmin, kSummerTmax, kSummerPrecip };

inline std::string_view to_string(VariableKind kind) {
  switch (kind) {
    case VariableKind::kSummerTmean: return "summer_tmean";
    case VariableKind::kSummerTmin: return "summer_tmin";
    case VariableKind::kSummerTmax: return "summer_tmax";
    case VariableKind::kSummerPrecip: return "summer_precip";
  }
  return "unknown";
}

inline std::optional<VariableKind> parse_variable_kind(std::string_view name) {
  for (auto kind : {VariableKind::kSummerTmean, VariableKind::kSummerTmin, VariableKind::kSummerTmax,
                    VariableKind::kSummerPrecip})
    if (to_string(kind) == name) return kind;
  return std::nullopt;
}

/// Annual summer climate series for one region. Years are consecutive.
struct RegionSeries {
  std::string region_id;
  VariableKind variable = VariableKind::kSummerTmean;
  int start_year = 0;
  std::vector<double> values;

  int end_year() const { return start_year + static_cast<int>(values.size()) - 1; }
  std::string label() const { return region_id + "/" + std::string(to_string(variable)); }
};

}  // namespace larvaecast
