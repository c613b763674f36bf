#pragma once

#include "flexsyn/integrator.hpp"

#include <json.hpp>

#include <cstdio>
#include <string>
#include <vector>

namespace flexsyn {

/// Column names: t, per link base-point position, attitude quaternion
/// (w >= 0), v, omega, eta, eta_dot; per joint wrench and velocity residual
/// norm; energies.
std::vector<std::string> csv_header(const ChainModel& model);
std::vector<double> csv_row(const ChainModel& model, const TrajectoryRecord& record);

/// Fixed-precision line without locale or timing dependence.
std::string format_csv_line(const std::vector<double>& values);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const ChainModel& model);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void write(const TrajectoryRecord& record);
  long rows() const { return rows_; }

 private:
  std::FILE* file_ = nullptr;
  const ChainModel& model_;
  long rows_ = 0;
};

nlohmann::json state_json(const ChainModel& model, const ChainState& state);

nlohmann::json summary_json(const nlohmann::json& config, const ChainModel& model,
                            const TrajectoryRecord& final_record, const SimulationStats& stats,
                            double wall_seconds);

}  // namespace flexsyn
