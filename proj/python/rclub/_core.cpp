// Python bindings for the main operations: incremental SPD state, the
// detector metrics, the diagnostic formulas, instance generation, SVD
// feature extraction, and whole config-driven runs.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <stdexcept>

#include "rclub/harness.hpp"
#include "rclub/ingest.hpp"
#include "rclub/version.hpp"

namespace py = pybind11;

namespace {

rclub::Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("matrix needs at least one row");
  rclub::Matrix m(static_cast<int>(rows.size()),
                  static_cast<int>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      throw std::invalid_argument("ragged matrix rows");
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  }
  return m;
}

std::vector<std::vector<double>> to_rows(const rclub::Matrix& m) {
  std::vector<std::vector<double>> rows(m.rows,
                                        std::vector<double>(m.cols, 0.0));
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) rows[i][j] = m(i, j);
  return rows;
}

py::dict instance_dict(const rclub::BanditInstance& inst) {
  py::dict d;
  d["users"] = inst.users;
  d["clusters"] = inst.clusters;
  d["dim"] = inst.dim;
  d["theta"] = inst.theta;
  d["assign"] = inst.assign;
  d["corrupted"] = inst.corrupted;
  d["arms"] = inst.arms;
  d["gamma"] = inst.gamma ? py::object(py::float_(*inst.gamma))
                          : py::object(py::none());
  d["seed"] = inst.seed;
  return d;
}

py::dict detection_dict(const rclub::DetectionOutcome& det) {
  py::dict d;
  d["t"] = det.t;
  d["occud_detected"] = det.occud.detected;
  d["gcud_detected"] = det.gcud.detected;
  std::vector<double> occ, gc;
  for (const auto& u : det.occud.users) occ.push_back(u.score);
  for (const auto& u : det.gcud.users) gc.push_back(u.score);
  d["occud_scores"] = occ;
  d["gcud_scores"] = gc;
  d["occud_auc"] = det.occud_auc;
  d["gcud_auc"] = det.gcud_auc;
  return d;
}

py::dict result_dict(const rclub::RunResult& res) {
  py::dict d;
  d["seed"] = res.seed;
  d["trace_ts"] = res.trace_ts;
  d["instance"] = instance_dict(res.instance);
  py::dict diag;
  diag["lambda_x"] = res.diagnostics.lambda_x;
  diag["sigma"] = res.diagnostics.sigma;
  diag["lambda_tilde_x"] = res.diagnostics.lambda_tilde_x;
  py::dict t0s;
  for (const auto& e : res.diagnostics.t0) t0s[py::str(e.policy)] = e.t0;
  diag["t0"] = t0s;
  d["diagnostics"] = diag;

  py::dict policies;
  for (const auto& p : res.policies) {
    py::dict pd;
    pd["kind"] = rclub::policy_kind_name(p.kind);
    pd["final_regret"] = p.final_regret;
    pd["regret_trace"] = p.regret_trace;
    pd["realized_budget"] = p.realized_budget;
    pd["final_components"] = p.final_components;
    py::list dets;
    for (const auto& det : p.detections) dets.append(detection_dict(det));
    pd["detections"] = dets;
    policies[py::str(p.name)] = pd;
  }
  d["policies"] = policies;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "clustered linear bandits with corrupted users";
  m.attr("__version__") = rclub::kVersion;

  py::class_<rclub::SpdState>(m, "SpdState")
      .def(py::init<int, double>(), py::arg("dim"), py::arg("reg"))
      .def("rank1_update", &rclub::SpdState::rank1_update, py::arg("x"),
           py::arg("w") = 1.0)
      .def("mahalanobis", &rclub::SpdState::mahalanobis, py::arg("x"))
      .def("solve", &rclub::SpdState::solve, py::arg("b"))
      .def("gram",
           [](const rclub::SpdState& s) { return to_rows(s.gram()); })
      .def_property_readonly("dim", &rclub::SpdState::dim)
      .def_property_readonly("total_updates", &rclub::SpdState::total_updates);

  m.def(
      "min_eigenvalue",
      [](const std::vector<std::vector<double>>& rows) {
        return rclub::min_eigenvalue(to_matrix(rows));
      },
      py::arg("m"), "smallest eigenvalue of a symmetric matrix (jacobi sweeps)");

  m.def(
      "auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        std::vector<char> l(labels.size());
        for (size_t i = 0; i < labels.size(); ++i) l[i] = labels[i] ? 1 : 0;
        return rclub::auc(scores, l);
      },
      py::arg("scores"), py::arg("labels"),
      "rank-based auc with half credit for ties");

  m.def("lambda_tilde", &rclub::lambda_tilde, py::arg("lambda_x"),
        py::arg("sigma"), py::arg("arms_per_round"),
        "effective covariance floor under argmax arm selection");

  m.def("t0_bound", &rclub::t0_bound, py::arg("users"), py::arg("dim"),
        py::arg("gamma"), py::arg("alpha"), py::arg("lambda"),
        py::arg("lambda_tilde_x"), py::arg("corruption_total"),
        py::arg("delta"),
        "rounds after which every maintained cluster is correct whp");

  m.def(
      "truncated_svd",
      [](const std::vector<std::vector<double>>& r, int rank, uint64_t seed) {
        rclub::SvdResult svd = rclub::truncated_svd(to_matrix(r), rank, seed);
        return py::make_tuple(to_rows(svd.u), svd.sigma, to_rows(svd.v));
      },
      py::arg("ratings"), py::arg("rank"), py::arg("seed") = 0,
      "(U, S, V) with U, V column-orthonormal and S descending");

  m.def(
      "generate_instance",
      [](int users, int clusters, int dim, int arm_pool,
         double corrupted_fraction, uint64_t seed) {
        rclub::InstanceConfig cfg{users, clusters, dim, arm_pool,
                                  corrupted_fraction};
        return instance_dict(rclub::generate_instance(cfg, seed));
      },
      py::arg("users"), py::arg("clusters"), py::arg("dim"),
      py::arg("arm_pool"), py::arg("corrupted_fraction") = 0.0,
      py::arg("seed") = 0);

  m.def(
      "run_config",
      [](const std::string& path, long seed) {
        rclub::ExperimentConfig cfg = rclub::load_experiment_config(path);
        uint64_t s = seed >= 0 ? static_cast<uint64_t>(seed) : cfg.seeds[0];
        return result_dict(rclub::run_experiment(cfg, s));
      },
      py::arg("config_path"), py::arg("seed") = -1,
      "run one seed of a config file and return the summary");

  m.def(
      "run_config_text",
      [](const std::string& text, long seed) {
        rclub::ExperimentConfig cfg = rclub::parse_experiment_config(text);
        uint64_t s = seed >= 0 ? static_cast<uint64_t>(seed) : cfg.seeds[0];
        return result_dict(rclub::run_experiment(cfg, s));
      },
      py::arg("config_text"), py::arg("seed") = -1,
      "same as run_config but takes the config body directly");
}
