#include "flexsyn/outputs.hpp"

#include <Eigen/Geometry>

#include <stdexcept>

namespace flexsyn {

using nlohmann::json;

namespace {

Eigen::Vector4d quaternion(const Mat3& R) {
  Eigen::Quaterniond q(R);
  q.normalize();
  Eigen::Vector4d out(q.w(), q.x(), q.y(), q.z());
  if (out(0) < 0.0) out = -out;
  return out;
}

json to_json(const VecX& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

std::vector<std::string> csv_header(const ChainModel& model) {
  std::vector<std::string> h{"t"};
  const char* xyz[] = {"x", "y", "z"};
  const char* wxyz[] = {"w", "x", "y", "z"};
  for (int i = 1; i <= model.size(); ++i) {
    const std::string s = std::to_string(i);
    for (const char* c : xyz) h.push_back("p" + s + "_" + c);
    for (const char* c : wxyz) h.push_back("q" + s + "_" + c);
    for (const char* c : xyz) h.push_back("v" + s + "_" + c);
    for (const char* c : xyz) h.push_back("w" + s + "_" + c);
    for (int k = 0; k < model.modal_dof(); ++k) h.push_back("eta" + s + "_" + std::to_string(k));
    for (int k = 0; k < model.modal_dof(); ++k) h.push_back("etadot" + s + "_" + std::to_string(k));
  }
  const char* wrench[] = {"fx", "fy", "fz", "tx", "ty", "tz"};
  for (int j = 1; j <= model.size(); ++j) {
    for (const char* c : wrench) h.push_back("F" + std::to_string(j) + "_" + c);
  }
  for (int j = 1; j <= model.size(); ++j) h.push_back("vres" + std::to_string(j));
  for (const char* c : {"kinetic", "elastic", "gravitational", "total"}) h.push_back(c);
  return h;
}

std::vector<double> csv_row(const ChainModel& model, const TrajectoryRecord& rec) {
  std::vector<double> row{rec.state.t};
  auto append = [&row](const auto& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k) row.push_back(v(k));
  };
  for (int i = 1; i <= model.size(); ++i) {
    const LinkState& ls = rec.state.links[i - 1];
    append(evaluate_link(model, rec.state, i).base.position);
    append(quaternion(ls.kin.R));
    append(ls.kin.z.lin);
    append(ls.kin.z.ang);
    append(ls.eta);
    append(ls.eta_dot);
  }
  for (const Vec6& w : rec.joint_wrenches) append(w);
  for (double r : rec.velocity_residuals) row.push_back(r);
  row.push_back(rec.energy.kinetic);
  row.push_back(rec.energy.elastic);
  row.push_back(rec.energy.gravitational);
  row.push_back(rec.energy.total());
  return row;
}

std::string format_csv_line(const std::vector<double>& values) {
  std::string line;
  char buf[40];
  for (std::size_t k = 0; k < values.size(); ++k) {
    // -0 prints as 0
    const double v = values[k] == 0.0 ? 0.0 : values[k];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    if (k) line += ',';
    line += buf;
  }
  line += '\n';
  return line;
}

CsvWriter::CsvWriter(const std::string& path, const ChainModel& model) : model_(model) {
  file_ = std::fopen(path.c_str(), "wb");
  if (!file_) throw std::runtime_error(path + ": cannot open for writing");
  std::string header;
  for (const std::string& name : csv_header(model)) header += (header.empty() ? "" : ",") + name;
  header += '\n';
  std::fputs(header.c_str(), file_);
}

CsvWriter::~CsvWriter() {
  if (file_) std::fclose(file_);
}

void CsvWriter::write(const TrajectoryRecord& record) {
  const std::string line = format_csv_line(csv_row(model_, record));
  if (std::fputs(line.c_str(), file_) < 0) throw std::runtime_error("csv write failed");
  ++rows_;
}

json state_json(const ChainModel& model, const ChainState& state) {
  json links = json::array();
  for (int i = 1; i <= model.size(); ++i) {
    const LinkState& ls = state.links[i - 1];
    links.push_back({{"base_position", to_json(evaluate_link(model, state, i).base.position)},
                     {"quaternion", to_json(quaternion(ls.kin.R))},
                     {"v", to_json(ls.kin.z.lin)},
                     {"omega", to_json(ls.kin.z.ang)},
                     {"eta", to_json(ls.eta)},
                     {"eta_dot", to_json(ls.eta_dot)}});
  }
  return {{"t", state.t}, {"links", links}};
}

json summary_json(const json& config, const ChainModel& model, const TrajectoryRecord& final_record,
                  const SimulationStats& stats, double wall_seconds) {
  json wrenches = json::array();
  for (const Vec6& w : final_record.joint_wrenches) wrenches.push_back(to_json(w));
  return {{"config", config},
          {"final_state", state_json(model, final_record.state)},
          {"final_joint_wrenches", wrenches},
          {"final_energy",
           {{"kinetic", final_record.energy.kinetic},
            {"elastic", final_record.energy.elastic},
            {"gravitational", final_record.energy.gravitational},
            {"total", final_record.energy.total()}}},
          {"max_residuals",
           {{"velocity_constraint", stats.max_velocity_residual},
            {"position_constraint", stats.max_position_residual},
            {"linear_solve", stats.max_solve_residual}}},
          {"max_condition", stats.max_condition},
          {"steps", stats.steps},
          {"wall_time_s", wall_seconds}};
}

}  // namespace flexsyn
