#include "riskq/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace riskq {

namespace {

std::vector<double> to_vector(const Eigen::MatrixXd& m) {
  std::vector<double> out(static_cast<std::size_t>(m.size()));
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(k++)] = m(r, c);
  return out;
}

Eigen::MatrixXd from_vector(const std::vector<double>& v, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(v.size()) != rows * cols)
    throw InputError("weights document: matrix payload size mismatch");
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(k++)];
  return m;
}

}  // namespace

nlohmann::json weights_to_json(const StageWeights& w, const std::string& env_name,
                               const nlohmann::json& config_echo) {
  nlohmann::json doc;
  doc["format"] = "riskq-weights-v1";
  doc["env"] = env_name;
  doc["orientation"] = orientation_name(w.orientation);
  doc["risk_kind"] = kind_name(w.kind);
  doc["episodes"] = w.episodes;
  doc["config"] = config_echo;
  auto stages = nlohmann::json::array();
  for (const auto& s : w.stages) {
    nlohmann::json stage;
    stage["dim"] = s.weights.rows();
    stage["columns"] = s.weights.cols();
    stage["ridge"] = s.ridge;
    stage["w"] = to_vector(s.weights);
    stage["gram"] = to_vector(s.gram);
    stage["eta_levels"] = s.eta_grid.rows();
    stage["eta_grid"] = to_vector(s.eta_grid);
    stages.push_back(std::move(stage));
  }
  doc["stages"] = std::move(stages);
  return doc;
}

StageWeights weights_from_json(const nlohmann::json& doc) {
  StageWeights w;
  try {
    if (doc.at("format").get<std::string>() != "riskq-weights-v1")
      throw InputError("weights document: unknown format tag");
    w.orientation = orientation_from(doc.at("orientation").get<std::string>());
    w.kind = kind_from(doc.at("risk_kind").get<std::string>());
    w.episodes = doc.at("episodes").get<int>();
    for (const auto& stage : doc.at("stages")) {
      StageWeights::Stage s;
      const auto dim = stage.at("dim").get<Eigen::Index>();
      const auto cols = stage.at("columns").get<Eigen::Index>();
      const auto levels = stage.at("eta_levels").get<Eigen::Index>();
      s.ridge = stage.at("ridge").get<double>();
      s.weights = from_vector(stage.at("w").get<std::vector<double>>(), dim, cols);
      s.gram = from_vector(stage.at("gram").get<std::vector<double>>(), dim, dim);
      s.eta_grid = from_vector(stage.at("eta_grid").get<std::vector<double>>(), levels,
                               levels == 0 ? 1 : cols);
      w.stages.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("weights document: ") + e.what());
  }
  return w;
}

std::string weights_env_name(const nlohmann::json& doc) {
  try {
    return doc.at("env").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("weights document: ") + e.what());
  }
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": invalid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << doc.dump(2) << '\n';
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << header << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  }
}

std::vector<double> read_csv_column(const std::string& path, int column) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty CSV");
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c++ == column) {
        out.push_back(std::stod(cell));
        break;
      }
    }
    if (c <= column) throw InputError(path + ": missing column");
  }
  return out;
}

}  // namespace riskq
