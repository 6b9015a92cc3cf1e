#include "iiekf/solver_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "iiekf/errors.hpp"

namespace iiekf {

using nlohmann::json;

namespace {

Eigen::VectorXd vector_from(const json& j, Eigen::Index n, const std::string& what) {
  const auto v = j.get<std::vector<double>>();
  if (n >= 0 && static_cast<Eigen::Index>(v.size()) != n) {
    throw ConfigError(what + " must have " + std::to_string(n) + " entries");
  }
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (j.is_object()) {
    if (!j.contains("diag") || j.size() != 1) throw ConfigError(what + ": expected {\"diag\": [...]}");
    if (rows != cols) throw ConfigError(what + ": diag form needs a square matrix");
    return vector_from(j.at("diag"), rows, what + ".diag").asDiagonal();
  }
  const auto r = j.get<std::vector<std::vector<double>>>();
  if (r.empty()) throw ConfigError(what + " is empty");
  if (rows >= 0 && static_cast<Eigen::Index>(r.size()) != rows) throw ConfigError(what + ": wrong number of rows");
  const Eigen::Index c = static_cast<Eigen::Index>(r.front().size());
  if (cols >= 0 && c != cols) throw ConfigError(what + ": wrong number of columns");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(r.size()), c);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (static_cast<Eigen::Index>(r[i].size()) != c) throw ConfigError(what + ": ragged rows");
    for (Eigen::Index k = 0; k < c; ++k) m(static_cast<Eigen::Index>(i), k) = r[i][k];
  }
  return m;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(m.cols());
    for (Eigen::Index k = 0; k < m.cols(); ++k) r[k] = m(i, k);
    rows.push_back(r);
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

MatrixGroup group_named(const std::string& name) {
  if (name == "so3") return MatrixGroup::so3();
  if (name == "se3") return MatrixGroup::se3();
  if (name == "se23") return MatrixGroup::se23();
  throw ConfigError("unknown group '" + name + "' (expected so3, se3, se23 or linear)");
}

json report_json(const UpdateReport& r) {
  return {{"iterations", r.iterations}, {"converged", r.converged}, {"final_step_norm", r.final_step_norm}};
}

}  // namespace

SolverSpec parse_solver_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("system file is not valid JSON: ") + e.what());
  }
  try {
    if (!j.is_object()) throw ConfigError("system file must hold a JSON object");
    for (const auto& [k, v] : j.items()) {
      if (k != "group" && k != "form" && k != "equations" && k != "initial" && k != "P0" && k != "tol" &&
          k != "n_max") {
        throw ConfigError("unknown key '" + k + "' in system file");
      }
    }
    SolverSpec spec;
    spec.group_name = j.at("group").get<std::string>();
    if (j.contains("tol")) spec.cfg.tol = j.at("tol").get<double>();
    if (j.contains("n_max")) spec.cfg.n_max = j.at("n_max").get<int>();
    spec.cfg.validate();
    const json& eqs = j.at("equations");
    if (!eqs.is_array() || eqs.empty()) throw ConfigError("'equations' must be a non-empty array");

    if (spec.is_linear()) {
      Eigen::Index n = -1;
      for (const auto& e : eqs) {
        LinearEquation le{matrix_from(e.at("H"), -1, n, "H"), {}};
        n = le.H.cols();
        le.y = vector_from(e.at("y"), le.H.rows(), "y");
        spec.linear.push_back(std::move(le));
      }
      spec.linear_initial = j.contains("initial") ? vector_from(j.at("initial"), n, "initial")
                                                  : Eigen::VectorXd::Zero(n);
      spec.P0 = j.contains("P0") ? matrix_from(j.at("P0"), n, n, "P0") : Eigen::MatrixXd::Identity(n, n);
      return spec;
    }

    const MatrixGroup g = group_named(spec.group_name);
    EquationSystem sys{g, {}, EquationForm::Left};
    if (j.contains("form")) {
      const auto form = j.at("form").get<std::string>();
      if (form == "right") {
        sys.form = EquationForm::Right;
      } else if (form != "left") {
        throw ConfigError("form must be 'left' or 'right'");
      }
    }
    for (const auto& e : eqs) {
      sys.equations.push_back({vector_from(e.at("d"), g.matrix_size(), "d"), vector_from(e.at("y"), g.matrix_size(), "y")});
    }
    spec.system = sys;
    if (!j.contains("initial")) {
      spec.initial = g.identity();
    } else if (j.at("initial").is_object()) {
      spec.initial = g.exp(vector_from(j.at("initial").at("exp"), g.dim(), "initial.exp"));
    } else {
      try {
        spec.initial = GroupElement::from_matrix(g, matrix_from(j.at("initial"), g.matrix_size(), g.matrix_size(), "initial"));
      } catch (const NotInGroup& e) {
        throw ConfigError(std::string("initial guess: ") + e.what());
      }
    }
    spec.P0 = j.contains("P0") ? matrix_from(j.at("P0"), g.dim(), g.dim(), "P0") : Eigen::MatrixXd::Identity(g.dim(), g.dim());
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("system file: ") + e.what());
  }
}

SolverSpec load_solver_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open system file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_solver_spec(ss.str());
}

SolverOutcome run_solver(const SolverSpec& spec) {
  SolverOutcome out;
  json rep;
  rep["group"] = spec.group_name;
  try {
    if (spec.is_linear()) {
      const Eigen::VectorXd x = solve_linear(spec.linear, spec.linear_initial, spec.P0);
      std::vector<double> residuals;
      for (const auto& e : spec.linear) residuals.push_back((e.H * x - e.y).norm());
      rep["solution"] = vector_json(x);
      rep["residuals"] = residuals;
    } else {
      const SolveResult r = solve(*spec.system, *spec.initial, spec.P0, spec.cfg);
      rep["solution"] = matrix_json(r.solution.matrix());
      rep["residuals"] = r.residuals;
      rep["rank_trace"] = r.rank_trace;
      json reports = json::array();
      for (const auto& u : r.reports) reports.push_back(report_json(u));
      rep["updates"] = reports;
      rep["warnings"] = r.warnings;
    }
    rep["status"] = "solved";
  } catch (const InconsistentSystem& e) {
    out.status = SolverOutcome::Status::Inconsistent;
    out.message = e.what();
    rep["status"] = "inconsistent";
    rep["equation"] = e.equation();
    rep["message"] = e.what();
  } catch (const NotConverged& e) {
    out.status = SolverOutcome::Status::NotConverged;
    out.message = e.what();
    rep["status"] = "not_converged";
    rep["equation"] = e.equation();
    rep["message"] = e.what();
  }
  out.report_json = rep.dump(2) + "\n";
  return out;
}

}  // namespace iiekf
