#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "rclub/harness.hpp"
#include "rclub/version.hpp"

namespace rclub {

using nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write file: " + p.string());
  return out;
}

void write_regret_csv(const RunResult& res, const std::filesystem::path& p) {
  auto out = open_out(p);
  out << "t";
  for (const auto& pol : res.policies) out << "," << pol.name;
  out << "\n";
  for (size_t i = 0; i < res.trace_ts.size(); ++i) {
    out << res.trace_ts[i];
    for (const auto& pol : res.policies)
      out << "," << format_double(pol.regret_trace[i]);
    out << "\n";
  }
}

void write_detection_csv(const RunResult& res,
                         const std::filesystem::path& p) {
  auto out = open_out(p);
  out << "checkpoint_t,detector,auc\n";
  int clustered = 0;
  for (const auto& pol : res.policies)
    if (!pol.detections.empty()) ++clustered;
  for (const auto& pol : res.policies) {
    std::string suffix = clustered > 1 ? ":" + pol.name : "";
    for (const auto& d : pol.detections) {
      if (!std::isnan(d.occud_auc))
        out << d.t << ",occud" << suffix << ","
            << format_double(d.occud_auc) << "\n";
      if (!std::isnan(d.gcud_auc))
        out << d.t << ",gcud" << suffix << "," << format_double(d.gcud_auc)
            << "\n";
    }
  }
}

ordered_json report_json(const DetectionReport& rep, const std::string& name,
                         double auc_value) {
  ordered_json j;
  j["t"] = rep.t;
  j["policy"] = name;
  j["algorithm"] = rep.algorithm;
  if (!std::isnan(auc_value)) j["auc"] = auc_value;
  j["detected"] = rep.detected;
  ordered_json users = ordered_json::array();
  for (const auto& u : rep.users) {
    ordered_json ju;
    ju["user"] = u.user;
    ju["score"] = u.score;
    ju["threshold"] = u.threshold;
    ju["flagged"] = u.flagged;
    users.push_back(std::move(ju));
  }
  j["users"] = std::move(users);
  return j;
}

void write_detected_users(const RunResult& res,
                          const std::filesystem::path& p) {
  ordered_json j;
  j["checkpoints"] = ordered_json::array();
  for (const auto& pol : res.policies)
    for (const auto& d : pol.detections) {
      j["checkpoints"].push_back(report_json(d.occud, pol.name, d.occud_auc));
      j["checkpoints"].push_back(report_json(d.gcud, pol.name, d.gcud_auc));
    }
  open_out(p) << j.dump(2) << "\n";
}

ordered_json policy_config_json(const PolicySpecEntry& spec) {
  ordered_json j;
  j["kind"] = policy_kind_name(spec.kind);
  j["lambda"] = spec.cfg.lambda;
  j["alpha"] = spec.cfg.alpha < 0.0 ? ordered_json("auto")
                                    : ordered_json(spec.cfg.alpha);
  j["alpha1"] = spec.cfg.alpha1;
  j["delta"] = spec.cfg.delta < 0.0 ? ordered_json("auto")
                                    : ordered_json(spec.cfg.delta);
  j["cbar"] = spec.cfg.cbar < 0.0 ? ordered_json("auto")
                                  : ordered_json(spec.cfg.cbar);
  j["weights"] = spec.cfg.weights_enabled;
  j["deletion"] = spec.cfg.deletion_enabled;
  j["lagged_weights"] = spec.cfg.lagged_weights;
  j["beta_cluster_counts"] = spec.cfg.beta_cluster_counts;
  return j;
}

ordered_json config_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["instance"] = {{"users", cfg.instance.users},
                   {"clusters", cfg.instance.clusters},
                   {"dim", cfg.instance.dim},
                   {"arm_pool", cfg.instance.arm_pool},
                   {"arms_per_round", cfg.arms_per_round},
                   {"corrupted_fraction", cfg.instance.corrupted_fraction},
                   {"noise_sd", cfg.noise_sd}};
  j["corruption"] = {
      {"mode",
       cfg.corruption_mode == CorruptionMode::None ? "none" : "flip_prefix"},
      {"k", cfg.corruption_k}};
  j["run"] = {{"horizon", cfg.horizon},
              {"seeds", cfg.seeds},
              {"out_dir", cfg.out_dir},
              {"trace_stride", cfg.resolved_trace_stride()},
              {"track_potential", cfg.track_potential},
              {"record_rounds", cfg.record_rounds},
              {"svg", cfg.svg}};
  j["detector"] = {{"detect_every", cfg.resolved_detect_every()},
                   {"delta", cfg.detector.delta},
                   {"gcud_fraction", cfg.detector.gcud_fraction}};
  ordered_json pols;
  for (const auto& spec : cfg.policies)
    pols[spec.name] = policy_config_json(spec);
  j["policies"] = std::move(pols);
  return j;
}

void write_run_meta(const RunResult& res, const ExperimentConfig& cfg,
                    const std::filesystem::path& p) {
  ordered_json j;
  j["version"] = kVersion;
  j["seed"] = res.seed;
  j["config"] = config_json(cfg);
  j["instance"] = {{"users", res.instance.users},
                   {"clusters", res.instance.clusters},
                   {"dim", res.instance.dim},
                   {"corrupted", res.instance.corrupted}};
  if (res.instance.gamma)
    j["instance"]["gamma"] = *res.instance.gamma;
  else
    j["instance"]["gamma"] = nullptr;
  ordered_json budget;
  for (const auto& pol : res.policies)
    budget[pol.name] = pol.realized_budget;
  j["realized_budget"] = std::move(budget);
  ordered_json diag;
  diag["lambda_x"] = res.diagnostics.lambda_x;
  diag["sigma"] = res.diagnostics.sigma;
  diag["lambda_tilde"] = res.diagnostics.lambda_tilde_x;
  ordered_json t0s = ordered_json::array();
  for (const auto& t0 : res.diagnostics.t0)
    t0s.push_back({{"policy", t0.policy}, {"t0", t0.t0}});
  diag["t0"] = std::move(t0s);
  j["diagnostics"] = std::move(diag);
  for (const auto& pol : res.policies)
    if (pol.potential.enabled) {
      j["potential"][pol.name] = {{"bound", pol.potential.bound},
                                  {"sums", pol.potential.sums},
                                  {"violations", pol.potential.violations}};
    }
  open_out(p) << j.dump(2) << "\n";
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                         "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

void write_regret_svg(const RunResult& res, const std::filesystem::path& p) {
  const double w = 860, h = 520;
  const double ml = 70, mr = 180, mt = 20, mb = 45;
  double t_max = res.trace_ts.empty() ? 1.0
                                      : static_cast<double>(res.trace_ts.back());
  double y_max = 1.0;
  for (const auto& pol : res.policies)
    for (double v : pol.regret_trace) y_max = std::max(y_max, v);

  auto sx = [&](double t) { return ml + (w - ml - mr) * t / t_max; };
  auto sy = [&](double v) { return h - mb - (h - mt - mb) * v / y_max; };

  auto out = open_out(p);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
      << "\">\n";
  out << "<rect width=\"" << w << "\" height=\"" << h
      << "\" fill=\"white\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
      << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    double t = t_max * i / 5.0, v = y_max * i / 5.0;
    out << "<text x=\"" << sx(t) << "\" y=\"" << h - mb + 18
        << "\" font-size=\"11\" text-anchor=\"middle\">"
        << format_double(std::round(t)) << "</text>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << sy(v) + 4
        << "\" font-size=\"11\" text-anchor=\"end\">"
        << format_double(std::round(v * 10.0) / 10.0) << "</text>\n";
  }
  out << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 8
      << "\" font-size=\"12\" text-anchor=\"middle\">round</text>\n";
  out << "<text x=\"16\" y=\"" << (mt + h - mb) / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 "
         "16 "
      << (mt + h - mb) / 2 << ")\">cumulative regret</text>\n";

  for (size_t pi = 0; pi < res.policies.size(); ++pi) {
    const auto& pol = res.policies[pi];
    const char* color = kPalette[pi % (sizeof kPalette / sizeof *kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    out << sx(0) << "," << sy(0);
    for (size_t i = 0; i < res.trace_ts.size(); ++i)
      out << " " << sx(static_cast<double>(res.trace_ts[i])) << ","
          << sy(pol.regret_trace[i]);
    out << "\"/>\n";
    double ly = mt + 16 + 18 * static_cast<double>(pi);
    out << "<line x1=\"" << w - mr + 12 << "\" y1=\"" << ly - 4 << "\" x2=\""
        << w - mr + 36 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << w - mr + 42 << "\" y=\"" << ly
        << "\" font-size=\"12\">" << pol.name << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace

void emit_outputs(const RunResult& res, const ExperimentConfig& cfg,
                  const std::string& dir) {
  std::filesystem::path root(dir);
  std::filesystem::create_directories(root);
  write_regret_csv(res, root / "regret.csv");
  write_detection_csv(res, root / "detection.csv");
  write_detected_users(res, root / "detected_users.json");
  write_run_meta(res, cfg, root / "run_meta.json");
  if (cfg.svg) write_regret_svg(res, root / "regret.svg");
}

}  // namespace rclub
