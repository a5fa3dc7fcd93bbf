#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "riskq/engine.hpp"

namespace riskq {

/// weights.json payload: orientation, risk kind, per-stage weight columns,
/// Gram snapshots (row-major), eta grids and the episode count, plus a
/// caller-supplied config echo.
nlohmann::json weights_to_json(const StageWeights& w, const std::string& env_name,
                               const nlohmann::json& config_echo);

StageWeights weights_from_json(const nlohmann::json& doc);

/// Environment name recorded in a weights document.
std::string weights_env_name(const nlohmann::json& doc);

nlohmann::json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& doc);

/// Decimal formatting used by every CSV artifact (10 significant digits).
std::string format_double(double v);

/// CSV with a header row; each row is rendered with format_double.
void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows);

/// Single-column extraction from a CSV written by write_csv.
std::vector<double> read_csv_column(const std::string& path, int column);

}  // namespace riskq
