#include "stochlift/io.hpp"

#include <json.hpp>

#include "stochlift/errors.hpp"

namespace stochlift {

namespace {

using nlohmann::json;

json Rows(const Eigen::MatrixXd& M) {
  json out = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

json Values(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd ReadVector(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(where + ": expected numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

// Nested rows; an empty array is a matrix with zero rows.
Eigen::MatrixXd ReadMatrix(const json& j, const std::string& where, Eigen::Index rows_hint) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of rows");
  if (j.empty()) return Eigen::MatrixXd(rows_hint, 0);
  const size_t cols = j[0].is_array() ? j[0].size() : 0;
  Eigen::MatrixXd M(j.size(), cols);
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw ShapeError(where + ": ragged rows");
    for (size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) throw ConfigError(where + ": expected numbers");
      M(i, c) = j[i][c].get<double>();
    }
  }
  return M;
}

template <typename T, typename F>
std::vector<T> ReadList(const json& doc, const std::string& key, F read) {
  if (!doc.contains(key) || !doc.at(key).is_array()) {
    throw ConfigError("trajectory: missing array '" + key + "'");
  }
  std::vector<T> out;
  const json& arr = doc.at(key);
  for (size_t i = 0; i < arr.size(); ++i) {
    out.push_back(read(arr[i], key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

}  // namespace

std::string TrajectoryToJson(const LiftedTrajectory& traj) {
  json doc;
  doc["horizon"] = traj.mu_u.size();
  json mu_x = json::array(), mu_u = json::array(), V_x = json::array(), V_u = json::array(),
       cov = json::array();
  for (size_t k = 0; k < traj.mu_x.size(); ++k) {
    mu_x.push_back(Values(traj.mu_x[k]));
    V_x.push_back(Rows(traj.V_x[k]));
    cov.push_back(Rows(traj.StateCovariance(static_cast<int>(k))));
  }
  for (size_t k = 0; k < traj.mu_u.size(); ++k) {
    mu_u.push_back(Values(traj.mu_u[k]));
    V_u.push_back(Rows(traj.V_u[k]));
  }
  doc["mu_x"] = std::move(mu_x);
  doc["mu_u"] = std::move(mu_u);
  doc["V_x"] = std::move(V_x);
  doc["V_u"] = std::move(V_u);
  doc["covariance"] = std::move(cov);
  return doc.dump(2) + "\n";
}

LiftedTrajectory TrajectoryFromJson(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("trajectory: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("trajectory: expected an object");
  LiftedTrajectory t;
  t.mu_x = ReadList<Eigen::VectorXd>(doc, "mu_x", ReadVector);
  t.mu_u = ReadList<Eigen::VectorXd>(doc, "mu_u", ReadVector);
  const Eigen::Index nx = t.mu_x.empty() ? 0 : t.mu_x[0].size();
  const Eigen::Index nu = t.mu_u.empty() ? 0 : t.mu_u[0].size();
  t.V_x = ReadList<Eigen::MatrixXd>(
      doc, "V_x", [&](const json& j, const std::string& w) { return ReadMatrix(j, w, nx); });
  t.V_u = ReadList<Eigen::MatrixXd>(
      doc, "V_u", [&](const json& j, const std::string& w) { return ReadMatrix(j, w, nu); });
  return t;
}

}  // namespace stochlift
