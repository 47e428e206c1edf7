#pragma once

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipkit/errors.hpp"
#include "ipkit/util.hpp"

namespace ipkit {

// One outer iteration of either solve engine. Interior-phase records carry the
// pre-step point (mu, residual norms, neighborhood distance), the step taken
// (alpha, sigma), the measured linear-solve quantities (inner_iters,
// inexactness, e_dot_r = e'r on the complementarity block, dx_dot_ds), and the
// post-step gap (mu_next). Equality-phase records carry f_norm and eta instead;
// their gap fields are zero by convention.
struct TraceRecord {
  int k = 0;
  std::string phase = "interior";  // "interior" | "ecnp"
  int n = 0;                       // primal dimension, needed to denormalize e_dot_r
  double mu = 0.0;
  double mu_next = 0.0;
  double alpha = 0.0;
  double sigma = 0.0;
  double r_p_inf = 0.0, r_d_inf = 0.0, r_c_inf = 0.0;
  double r_p_2 = 0.0, r_d_2 = 0.0, r_c_2 = 0.0;
  double nbhd_dist = 0.0;
  int inner_iters = 0;
  double inexactness = 0.0;
  double e_dot_r = 0.0;
  double dx_dot_ds = 0.0;
  double f_norm = 0.0;  // equality-phase residual norm ||F||_2
  double eta = 0.0;     // equality-phase forcing tolerance
  double wall_ms = 0.0;
};

struct SolveTrace {
  std::string algorithm;  // "ipm" | "ins"
  int sample_id = -1;
  std::vector<TraceRecord> records;

  // Terminal summary, emitted as one extra JSONL line after the records when
  // status is set. Kept out of the CSV, whose rows are per-iteration only.
  std::string status;  // "converged" | "max-iterations"; empty = no summary
  double total_time_ms = 0.0;
  bool termination_test_strict = false;   // all residuals and mu <= eps
  bool termination_test_relaxed = false;  // same at 10 * eps

  nlohmann::ordered_json record_json(const TraceRecord& r) const {
    nlohmann::ordered_json j;
    j["k"] = r.k;
    j["phase"] = r.phase;
    j["n"] = r.n;
    j["mu"] = r.mu;
    j["mu_next"] = r.mu_next;
    j["alpha"] = r.alpha;
    j["sigma"] = r.sigma;
    j["r_p_inf"] = r.r_p_inf;
    j["r_d_inf"] = r.r_d_inf;
    j["r_c_inf"] = r.r_c_inf;
    j["r_p_2"] = r.r_p_2;
    j["r_d_2"] = r.r_d_2;
    j["r_c_2"] = r.r_c_2;
    j["nbhd_dist"] = r.nbhd_dist;
    j["inner_iters"] = r.inner_iters;
    j["inexactness"] = r.inexactness;
    j["e_dot_r"] = r.e_dot_r;
    j["dx_dot_ds"] = r.dx_dot_ds;
    j["f_norm"] = r.f_norm;
    j["eta"] = r.eta;
    j["wall_ms"] = r.wall_ms;
    return j;
  }

  std::string to_jsonl() const {
    std::string out;
    for (const auto& r : records) {
      out += record_json(r).dump();
      out += "\n";
    }
    if (!status.empty()) {
      nlohmann::ordered_json j;
      j["status"] = status;
      j["total_time_ms"] = total_time_ms;
      j["termination_test_I"] = termination_test_strict;
      j["termination_test_relaxed"] = termination_test_relaxed;
      out += j.dump();
      out += "\n";
    }
    return out;
  }

  // Fixed column set; one row per iteration.
  std::string to_csv() const {
    std::string out = "k,mu,alpha,r_p_inf,r_d_inf,r_c_inf,nbhd_dist,inner_iters,inexactness,wall_ms\n";
    for (const auto& r : records) {
      out += std::to_string(r.k) + "," + fmt_g6(r.mu) + "," + fmt_g6(r.alpha) + "," +
             fmt_g6(r.r_p_inf) + "," + fmt_g6(r.r_d_inf) + "," + fmt_g6(r.r_c_inf) + "," +
             fmt_g6(r.nbhd_dist) + "," + std::to_string(r.inner_iters) + "," +
             fmt_g6(r.inexactness) + "," + fmt_g6(r.wall_ms) + "\n";
    }
    return out;
  }

  void write_jsonl(const std::filesystem::path& path) const { write_text_file(path, to_jsonl()); }
  void write_csv(const std::filesystem::path& path) const { write_text_file(path, to_csv()); }

  // Reads records back from JSONL. Lines must be complete objects; gap-check
  // consumers additionally require the recursion fields, enforced there.
  static SolveTrace read_jsonl(const std::filesystem::path& path) {
    SolveTrace t;
    std::istringstream in(read_text_file(path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw IncompleteTrace("line " + std::to_string(lineno) + " is not valid JSON: " + e.what());
      }
      if (j.contains("status")) {  // terminal summary line
        t.status = j["status"].get<std::string>();
        t.total_time_ms = j.value("total_time_ms", 0.0);
        t.termination_test_strict = j.value("termination_test_I", false);
        t.termination_test_relaxed = j.value("termination_test_relaxed", false);
        continue;
      }
      TraceRecord r;
      auto need = [&](const char* key) -> const nlohmann::json& {
        if (!j.contains(key))
          throw IncompleteTrace("line " + std::to_string(lineno) + " missing field " + key);
        return j[key];
      };
      r.k = need("k").get<int>();
      r.phase = j.value("phase", std::string("interior"));
      r.n = j.value("n", 0);
      r.mu = need("mu").get<double>();
      r.alpha = need("alpha").get<double>();
      r.r_p_inf = j.value("r_p_inf", 0.0);
      r.r_d_inf = j.value("r_d_inf", 0.0);
      r.r_c_inf = j.value("r_c_inf", 0.0);
      r.r_p_2 = j.value("r_p_2", 0.0);
      r.r_d_2 = j.value("r_d_2", 0.0);
      r.r_c_2 = j.value("r_c_2", 0.0);
      r.nbhd_dist = j.value("nbhd_dist", 0.0);
      r.inner_iters = j.value("inner_iters", 0);
      r.inexactness = j.value("inexactness", 0.0);
      if (j.contains("e_dot_r")) r.e_dot_r = j["e_dot_r"].get<double>();
      else r.e_dot_r = std::numeric_limits<double>::quiet_NaN();
      if (j.contains("dx_dot_ds")) r.dx_dot_ds = j["dx_dot_ds"].get<double>();
      else r.dx_dot_ds = std::numeric_limits<double>::quiet_NaN();
      if (j.contains("mu_next")) r.mu_next = j["mu_next"].get<double>();
      else r.mu_next = std::numeric_limits<double>::quiet_NaN();
      if (j.contains("sigma")) r.sigma = j["sigma"].get<double>();
      else r.sigma = std::numeric_limits<double>::quiet_NaN();
      r.f_norm = j.value("f_norm", 0.0);
      r.eta = j.value("eta", 0.0);
      r.wall_ms = j.value("wall_ms", 0.0);
      t.records.push_back(std::move(r));
    }
    return t;
  }
};

}  // namespace ipkit
