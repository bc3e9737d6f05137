// eklab: experiment driver for the E_k functional laboratory.
//
// Subcommands
//   sigma     build the configured state, dump spectrum/sigma fields + CSV
//   energy    evaluate E_k along the configured path for each k
//   residual  dump critical-equation residual and gradient fields
//   flow      run the E_k gradient flow for each k
//   verify    run the flow, then certify the final state (projective only)
//   all       sigma + energy + residual + verify
//
// Every output file embeds the resolved-config hash and the tool version.
// Exit codes: 0 success (or a flow that legitimately reports
// non-convergence), 2 configuration error, 3 admissibility/path error,
// 4 incomplete flow (stopped at the admissibility floor).

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eklab/config.hpp"
#include "eklab/critic.hpp"
#include "eklab/energy.hpp"
#include "eklab/io.hpp"
#include "eklab/radial.hpp"
#include "eklab/random_fields.hpp"
#include "eklab/torus.hpp"
#include "eklab/verifier.hpp"
#include "eklab/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failed = 1;
constexpr int exit_config = 2;
constexpr int exit_admissibility = 3;
constexpr int exit_incomplete = 4;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Output sink: a directory, with the config fingerprint stamped into
// every file written through it.
struct Out {
  fs::path dir;
  std::string hash;

  fs::path path(const std::string& name) const { return dir / name; }

  void csv(const std::string& name, const std::string& body) const {
    eklab::write_text_file(path(name), "# eklab " + std::string(eklab::version) +
                                           " config " + hash + "\n" + body);
    std::cout << "wrote " << path(name).string() << "\n";
  }

  void write_json(const std::string& name, json j) const {
    j["tool_version"] = eklab::version;
    j["config_hash"] = hash;
    eklab::write_text_file(path(name), j.dump(2) + "\n");
    std::cout << "wrote " << path(name).string() << "\n";
  }
};

Eigen::ArrayXd starting_potential(const eklab::RadialEngine& eng,
                                  const eklab::ExperimentConfig& cfg) {
  if (cfg.amplitude == 0.0)
    return Eigen::ArrayXd::Zero(eng.grid().x.size());
  return eklab::random_potential(eng, cfg.seed, cfg.amplitude);
}

Eigen::ArrayXd starting_potential(const eklab::TorusEngine& eng,
                                  const eklab::ExperimentConfig& cfg) {
  if (cfg.amplitude == 0.0) return Eigen::ArrayXd::Zero(eng.num_nodes());
  return eklab::random_potential(eng, cfg.seed, cfg.amplitude);
}

std::vector<std::int64_t> grid_shape(const eklab::RadialEngine& eng) {
  return {static_cast<std::int64_t>(eng.grid().x.size())};
}

std::vector<std::int64_t> grid_shape(const eklab::TorusEngine& eng) {
  return std::vector<std::int64_t>(
      static_cast<std::size_t>(2 * eng.complex_dim()), eng.axis_points());
}

// Binary field dump plus its JSON sidecar (shape, dimension, gauge).
template <class Engine>
void save_field(const Engine& eng, const Out& out, const std::string& base,
                const Eigen::ArrayXd& field, const std::string& normalization) {
  eklab::write_field_binary(out.path(base + ".f64"), field);
  std::cout << "wrote " << out.path(base + ".f64").string() << "\n";
  json side;
  side["shape"] = grid_shape(eng);
  side["n"] = eng.complex_dim();
  side["layout"] = "row-major node order, f64 little-endian";
  side["normalization"] = normalization;
  if constexpr (std::is_same_v<Engine, eklab::RadialEngine>) {
    const Eigen::ArrayXd& x = eng.grid().x;
    side["nodes"] = std::vector<double>(x.data(), x.data() + x.size());
  }
  out.write_json(base + ".json", side);
}

std::string sigma_csv(const eklab::RadialEngine&,
                      const eklab::RadialEngine::State& st) {
  std::ostringstream os;
  os << "node,x,lambda_trans,lambda_rad";
  for (int k = 0; k <= st.n; ++k) os << ",sigma_" << k;
  for (int k = 0; k <= st.n; ++k) os << ",Sigma_" << k;
  os << "\n";
  for (int j = 0; j < st.num_nodes(); ++j) {
    os << j << ',' << fmt(st.x[j]) << ',' << fmt(st.lam_trans[j]) << ','
       << fmt(st.lam_rad[j]);
    for (int k = 0; k <= st.n; ++k)
      os << ',' << fmt(st.sigma[static_cast<std::size_t>(k)][j]);
    for (int k = 0; k <= st.n; ++k)
      os << ',' << fmt(st.normalized[static_cast<std::size_t>(k)][j]);
    os << '\n';
  }
  return os.str();
}

std::string sigma_csv(const eklab::TorusEngine& eng,
                      const eklab::TorusEngine::State& st) {
  const int rank = 2 * st.n;
  const int N = eng.axis_points();
  std::ostringstream os;
  os << "node";
  for (int a = 0; a < rank; ++a) os << ",i" << a;
  for (int i = 0; i < st.n; ++i) os << ",lambda_" << i + 1;
  for (int k = 0; k <= st.n; ++k) os << ",sigma_" << k;
  for (int k = 0; k <= st.n; ++k) os << ",Sigma_" << k;
  os << "\n";
  std::vector<int> idx(static_cast<std::size_t>(rank));
  for (std::int64_t p = 0; p < st.num_nodes(); ++p) {
    std::int64_t rem = p;
    for (int a = rank - 1; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] = static_cast<int>(rem % N);
      rem /= N;
    }
    os << p;
    for (int a = 0; a < rank; ++a) os << ',' << idx[static_cast<std::size_t>(a)];
    const eklab::Spectrum sp = st.spectrum(p);
    for (int i = 0; i < st.n; ++i) os << ',' << fmt(sp[i]);
    for (int k = 0; k <= st.n; ++k)
      os << ',' << fmt(st.sigma[static_cast<std::size_t>(k)][p]);
    for (int k = 0; k <= st.n; ++k)
      os << ',' << fmt(st.normalized[static_cast<std::size_t>(k)][p]);
    os << '\n';
  }
  return os.str();
}

void positivity_json(const eklab::RadialEngine&,
                     const eklab::RadialEngine::State& st, json& j) {
  const eklab::PositivityReport rep = eklab::positivity_report(st);
  j["min_ricci_eig"] = rep.min_ricci_eig;
  j["min_R"] = rep.min_R;
}

void positivity_json(const eklab::TorusEngine&,
                     const eklab::TorusEngine::State& st, json& j) {
  j["min_ricci_eig"] = st.min_ricci_eig();
  j["min_R"] = st.min_R();
  j["min_metric_eig"] = st.min_metric_eig;
}

template <class Engine>
int run_sigma(const Engine& eng, const eklab::ExperimentConfig& cfg,
              const Out& out) {
  const auto st = eng.build(starting_potential(eng, cfg));
  out.csv("sigma.csv", sigma_csv(eng, st));
  json j;
  j["testbed"] = eng.testbed_name();
  j["n"] = st.n;
  j["volume"] = st.volume;
  positivity_json(eng, st, j);
  json means;
  for (int k = 0; k <= st.n; ++k)
    means.push_back(
        eng.integrate(st, st.normalized[static_cast<std::size_t>(k)]) /
        st.volume);
  j["Sigma_means"] = means;
  out.write_json("sigma_summary.json", j);
  return exit_ok;
}

template <class Engine>
int run_energy(const Engine& eng, const eklab::ExperimentConfig& cfg,
               const Out& out) {
  const Eigen::ArrayXd phi = starting_potential(eng, cfg);
  json reports = json::array();
  for (int k : cfg.k) {
    eklab::EnergyReport rep = eklab::ek_energy(
        eng, {phi, eklab::schedule_by_name(cfg.schedule), cfg.path_steps}, k);
    const eklab::EnergyReport other = eklab::ek_energy(
        eng,
        {phi,
         eklab::schedule_by_name(cfg.schedule == "linear" ? "sine" : "linear"),
         cfg.path_steps},
        k);
    rep.path_delta = std::abs(rep.value - other.value);
    reports.push_back(json::parse(rep.to_json()));
    std::cout << "E_" << k << " = " << fmt(rep.value)
              << "  (two-formula gap " << fmt(std::abs(rep.value - rep.value_alt))
              << ", schedule gap " << fmt(rep.path_delta) << ")\n";
  }
  json j;
  j["reports"] = reports;
  out.write_json("energy.json", j);
  return exit_ok;
}

template <class Engine>
int run_residual(const Engine& eng, const eklab::ExperimentConfig& cfg,
                 const Out& out) {
  const auto st = eng.build(starting_potential(eng, cfg));
  std::ostringstream os;
  os << "node";
  for (int k : cfg.k) os << ",residual_k" << k << ",bracket_k" << k;
  os << "\n";
  std::vector<Eigen::ArrayXd> res, brk;
  json summary = json::array();
  for (int k : cfg.k) {
    res.push_back(eklab::critical_residual(eng, st, k));
    brk.push_back(eklab::ek_bracket(eng, st, k));
    json jk;
    jk["k"] = k;
    jk["sup_window_residual"] = st.sup_window(res.back());
    jk["bracket_volume_mean"] = eng.integrate(st, brk.back()) / st.volume;
    summary.push_back(jk);
    std::cout << "k=" << k << ": sup residual (window) = "
              << fmt(st.sup_window(res.back())) << "\n";
  }
  for (std::int64_t p = 0; p < st.num_nodes(); ++p) {
    os << p;
    for (std::size_t i = 0; i < res.size(); ++i)
      os << ',' << fmt(res[i][p]) << ',' << fmt(brk[i][p]);
    os << '\n';
  }
  out.csv("residual.csv", os.str());
  json j;
  j["testbed"] = eng.testbed_name();
  j["n"] = st.n;
  j["residuals"] = summary;
  out.write_json("residual_summary.json", j);
  return exit_ok;
}

// Flow for one k.  Produces the iteration trace CSV, a JSON summary, and
// the final potential as a binary field with sidecar.  Returns the trace
// (empty optional when even the starting state is inadmissible).
template <class Engine>
std::optional<eklab::FlowTrace> run_flow_one(const Engine& eng,
                                             const eklab::ExperimentConfig& cfg,
                                             const Out& out, int k) {
  eklab::FlowConfig fc;
  fc.k = k;
  fc.step = cfg.flow.step;
  fc.tol = cfg.flow.tol;
  fc.max_iters = cfg.flow.max_iters;
  fc.shrink = cfg.flow.shrink;
  fc.precondition = cfg.flow.precondition;
  fc.energy_steps = cfg.path_steps;
  const std::string tag = "flow_k" + std::to_string(k);
  try {
    const eklab::FlowTrace tr =
        eklab::gradient_flow(eng, starting_potential(eng, cfg), fc);
    std::ostringstream os;
    tr.to_csv(os);
    out.csv(tag + ".csv", os.str());
    out.write_json(tag + ".json",
                   json::parse(tr.summary_json(k, eng.complex_dim(),
                                               eng.testbed_name())));
    save_field(eng, out, tag + "_final", tr.final_potential,
               "potential, volume-mean zero");
    std::cout << "flow k=" << k << ": " << eklab::to_string(tr.reason)
              << " after " << tr.iterations << " iterations (sup residual "
              << fmt(tr.last().sup_residual) << ")\n";
    return tr;
  } catch (const eklab::AdmissibilityError& e) {
    // The starting state itself is outside the admissible cone: record the
    // stop the same way an in-flow floor is recorded.
    json j;
    j["k"] = k;
    j["n"] = eng.complex_dim();
    j["testbed"] = eng.testbed_name();
    j["reason"] = "admissibility_floor";
    j["iterations"] = 0;
    j["note"] = e.what();
    out.write_json(tag + ".json", j);
    std::cout << "flow k=" << k
              << ": admissibility_floor before the first step (" << e.what()
              << ")\n";
    return std::nullopt;
  }
}

int flow_exit(const std::optional<eklab::FlowTrace>& tr) {
  if (!tr || tr->reason == eklab::FlowStop::admissibility_floor)
    return exit_incomplete;
  return exit_ok;  // converged, or honestly reported non-convergence
}

template <class Engine>
int run_flow(const Engine& eng, const eklab::ExperimentConfig& cfg,
             const Out& out) {
  int worst = exit_ok;
  for (int k : cfg.k)
    worst = std::max(worst, flow_exit(run_flow_one(eng, cfg, out, k)));
  return worst;
}

// Flow followed by the critical-point certificate on the final state.
template <class Engine>
int run_verify(const Engine& eng, const eklab::ExperimentConfig& cfg,
               const Out& out) {
  int worst = exit_ok;
  for (int k : cfg.k) {
    const auto tr = run_flow_one(eng, cfg, out, k);
    int code = flow_exit(tr);
    json j;
    j["k"] = k;
    if (!tr) {
      j["flow"] = "admissibility_floor";
      j["certificate"] = nullptr;
      j["verdict"] = "not run: no admissible flow";
    } else {
      j["flow"] = eklab::to_string(tr->reason);
      if (tr->reason == eklab::FlowStop::converged) {
        const auto end = eng.build(tr->final_potential);
        const eklab::Certificate cert =
            eklab::theorem_certificate(eng, end, k, cfg.verify_tol);
        j["certificate"] = json::parse(cert.to_json());
        j["verdict"] = cert.overall();
        if (!cert.passed) code = std::max(code, exit_failed);
        std::cout << "certificate k=" << k << ": " << cert.overall() << "\n";
      } else {
        j["certificate"] = nullptr;
        j["verdict"] = "not run: flow did not converge within max_iters";
        std::cout << "certificate k=" << k
                  << ": skipped (flow did not converge)\n";
      }
    }
    out.write_json("verify_k" + std::to_string(k) + ".json", j);
    worst = std::max(worst, code);
  }
  return worst;
}

template <class Engine>
int run_all(const Engine& eng, const eklab::ExperimentConfig& cfg,
            const Out& out) {
  int worst = run_sigma(eng, cfg, out);
  worst = std::max(worst, run_energy(eng, cfg, out));
  worst = std::max(worst, run_residual(eng, cfg, out));
  if (cfg.testbed == "projective")
    worst = std::max(worst, run_verify(eng, cfg, out));
  else
    worst = std::max(worst, run_flow(eng, cfg, out));
  return worst;
}

template <class F>
int with_engine(const eklab::ExperimentConfig& cfg, F&& fn) {
  if (cfg.testbed == "projective") {
    const eklab::RadialEngine eng(cfg.n, cfg.nodes);
    return fn(eng);
  }
  const eklab::TorusEngine eng(cfg.n, cfg.axis_points);
  return fn(eng);
}

std::vector<int> parse_k_list(const std::string& s) {
  std::vector<int> ks;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    ks.push_back(std::stoi(item, &used));
    if (used != item.size())
      throw eklab::ConfigError("config: cannot parse k list entry '" + item +
                               "'");
  }
  if (ks.empty()) throw eklab::ConfigError("config: empty k list");
  return ks;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "eklab " + std::string(eklab::version) +
      " - a numerical laboratory for the E_k energy functionals\n"
      "Set EK_LAB_THREADS to cap worker threads (default 1; results are\n"
      "identical for any value)."};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path, out_dir, testbed, k_list;
  std::uint64_t seed = 0;
  int nodes = 0;
  bool have_seed = false;

  app.add_option("--config", config_path, "TOML experiment manifest")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "override the random seed")
      ->each([&](const std::string&) { have_seed = true; });
  app.add_option("--out", out_dir, "override the output directory");
  app.add_option("--k", k_list, "override the k list, e.g. 0,1,2");
  app.add_option("--nodes", nodes,
                 "override grid resolution (radial interior nodes, or "
                 "points per axis on the torus)");
  app.add_option("--testbed", testbed, "override the testbed: projective | torus");

  for (const char* name : {"sigma", "energy", "residual", "flow", "verify", "all"})
    app.add_subcommand(name)->silent(false);
  app.get_subcommand("sigma")->description("dump spectrum and sigma fields");
  app.get_subcommand("energy")->description("evaluate E_k along the configured path");
  app.get_subcommand("residual")->description("dump residual and gradient fields");
  app.get_subcommand("flow")->description("run the E_k gradient flow");
  app.get_subcommand("verify")->description("flow, then certify the final state");
  app.get_subcommand("all")->description("sigma + energy + residual + verify");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  }

  try {
    eklab::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = eklab::load_config_file(config_path);
    if (!testbed.empty()) cfg.testbed = testbed;
    if (have_seed) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out = out_dir;
    if (!k_list.empty()) cfg.k = parse_k_list(k_list);
    if (nodes > 0) {
      if (cfg.testbed == "torus")
        cfg.axis_points = nodes;
      else
        cfg.nodes = nodes;
    }
    cfg.validate();

    Out out{fs::path(cfg.out), cfg.hash_hex()};
    fs::create_directories(out.dir);
    eklab::write_text_file(out.path("config.toml"), cfg.canonical());
    std::cout << "config " << out.hash << " -> " << out.dir.string() << "\n";

    const std::string sub = app.get_subcommands().front()->get_name();
    return with_engine(cfg, [&](const auto& eng) {
      if (sub == "sigma") return run_sigma(eng, cfg, out);
      if (sub == "energy") return run_energy(eng, cfg, out);
      if (sub == "residual") return run_residual(eng, cfg, out);
      if (sub == "flow") return run_flow(eng, cfg, out);
      if (sub == "verify") return run_verify(eng, cfg, out);
      return run_all(eng, cfg, out);
    });
  } catch (const eklab::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const eklab::AdmissibilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_admissibility;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_failed;
  }
}
