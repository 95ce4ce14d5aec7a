// Command-line driver: simulation runs, delta sweeps, the verification
// suite, and manufactured-solution residual checks.
//
// Subcommands:
//   run         time-step the coupled system, writing a CSV energy ledger
//               and optional VTK field snapshots
//   sweep-delta run the consistency experiment over decreasing kernel
//               scales and write the sweep / convolution-rate CSV reports
//   verify      execute the property suite, printing pass/fail per property
//   mms         residual check of the selected manufactured reference
//
// Exit codes: 0 success, 2 configuration error, 3 degeneracy termination,
// 4 property failure.

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fpsi/config.hpp"
#include "fpsi/consistency.hpp"
#include "fpsi/io.hpp"
#include "fpsi/reference.hpp"
#include "fpsi/regularizer.hpp"
#include "fpsi/scheme.hpp"

namespace {

using namespace fpsi;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitProperty = 4;

void usage(std::ostream& os) {
  os << "usage: fpsi <run|sweep-delta|verify|mms> [--config <path>]\n"
        "            [--out <dir>] [--threads <n>] [--seed <u64>]\n"
        "\n"
        "The output directory is taken from --out, else the FPSI_OUT_DIR\n"
        "environment variable, else the out_dir configuration key.\n";
}

struct CliArgs {
  std::string subcommand;
  std::optional<std::string> config_path;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

CliArgs parse_args(int argc, char** argv) {
  CliArgs a;
  if (argc < 2) throw ConfigError("missing subcommand");
  a.subcommand = argv[1];
  for (int i = 2; i < argc; ++i) {
    std::string flag = argv[i];
    auto value = [&]() -> std::string {
      if (i + 1 >= argc) throw ConfigError(flag + ": missing value");
      return argv[++i];
    };
    if (flag == "--config") a.config_path = value();
    else if (flag == "--out") a.out_dir = value();
    else if (flag == "--threads") a.threads = std::stoi(value());
    else if (flag == "--seed") a.seed = std::stoull(value());
    else throw ConfigError("unknown flag: " + flag);
  }
  return a;
}

RunConfig load_config(const CliArgs& a) {
  RunConfig c;
  if (a.config_path) {
    std::ifstream is(*a.config_path, std::ios::binary);
    if (!is) throw ConfigError("cannot read config file: " + *a.config_path);
    std::ostringstream text;
    text << is.rdbuf();
    c = parse_config(text.str());
  }
  if (const char* env = std::getenv("FPSI_OUT_DIR")) c.out_dir = env;
  if (a.out_dir) c.out_dir = *a.out_dir;
  if (a.threads) c.threads = *a.threads;
  if (a.seed) c.seed = *a.seed;
  c.validate();
  return c;
}

SeparableCase make_reference(const RunConfig& c) {
  if (c.reference == "rest")
    return SeparableCase::make(c.phys, 0.0, c.sigma_t);
  if (c.reference == "seepage")
    return SeparableCase::make_seepage(c.phys, c.amplitude, c.sigma_t,
                                       c.seepage_b);
  return SeparableCase::make(c.phys, c.amplitude, c.sigma_t);
}

void set_pulse(Simulator& sim, const PhysicalParams& ph, double amp) {
  double L = ph.L, R = ph.R;
  auto omega0 = [amp, L](double x) {
    double s = std::sin(M_PI * x / L);
    return amp * s * s;
  };
  auto omega0_dx = [amp, L](double x) {
    return amp * M_PI / L * std::sin(2.0 * M_PI * x / L);
  };
  sim.set_initial(
      [](Vec2) { return Vec2::Zero(); },
      [omega0, R](Vec2 q) {
        double b = 1.0 - q.y() / R;
        return Vec2(0.0, omega0(q.x()) * b * b);
      },
      [](Vec2) { return Vec2::Zero(); }, [](Vec2) { return 0.0; }, omega0,
      omega0_dx);
}

int cmd_run(const RunConfig& c) {
  Simulator sim(c.phys, c.nx, c.ny, c.scheme_options());
  if (c.initial == "pulse") {
    set_pulse(sim, c.phys, c.amplitude);
  } else if (c.initial == "reference") {
    SeparableCase ref = make_reference(c);
    ref.apply_initial(sim);
    sim.forcing = ref.forcing();
  }
  if (c.snapshot_stride > 0) write_snapshot(c.out_dir, 0, sim);
  Verdict v = sim.run([&](const CoupledState& st) {
    if (c.snapshot_stride > 0 && st.n % c.snapshot_stride == 0)
      write_snapshot(c.out_dir, st.n, sim);
  });
  write_text_file(c.out_dir + "/ledger.csv", ledger_csv(sim.ledger()));
  if (v != Verdict::ok) {
    std::cout << "terminated by degeneracy monitor: " << verdict_name(v)
              << "\n";
    return kExitDegenerate;
  }
  std::cout << "run complete: " << sim.ledger().size() << " steps, ledger at "
            << c.out_dir << "/ledger.csv\n";
  return kExitOk;
}

int cmd_sweep_delta(const RunConfig& c) {
  SeparableCase ref = make_reference(c);
  double scale = std::min(c.phys.L, c.phys.R);
  std::vector<double> deltas;
  for (double f : c.sweep_factors) deltas.push_back(f * scale);

  SweepReport rep =
      delta_sweep(ref, deltas, c.nx, c.ny, c.dt, c.T, c.scheme_options());
  write_text_file(c.out_dir + "/sweep.csv", sweep_csv(rep));

  // Convergence of the mollified displacement itself, on the reference
  // deformation frozen at its first quarter period.
  double t0 = 0.25 * 2.0 * M_PI / ref.sigma;
  OddExtension ext = odd_extend_analytic(
      c.phys.L, c.phys.R,
      [&, t0](const Vec2& q) { return ref.eta_hat(t0, q); },
      [&, t0](double x) { return ref.w(t0, x); },
      [&, t0](const Vec2& q) { return ref.eta_hat_grad(t0, q); },
      [&, t0](double x) { return ref.w_x(t0, x); });
  ConvolutionRateReport rates = convolution_rate_report(
      ext, deltas, MollifierRule::make(c.mollifier_nr(), c.mollifier_ntheta()));
  write_text_file(c.out_dir + "/mollifier_rates.csv",
                  convolution_rate_csv(rates));

  for (const auto& run : rep.runs)
    std::cout << "delta " << format_double(run.delta) << "  max_E "
              << format_double(run.max_E) << "\n";
  std::cout << "floor estimate " << format_double(rep.floor_estimate) << "\n";
  if (!rep.conclusive) {
    std::cout << "inconclusive sweep: the discretization floor dominates "
                 "every delta; refine the mesh and time step\n";
  } else {
    std::cout << "fitted order " << format_double(rep.fitted_order) << "\n";
  }
  std::cout << "reports at " << c.out_dir << "/sweep.csv and "
            << c.out_dir << "/mollifier_rates.csv\n";
  return kExitOk;
}

int cmd_verify(const RunConfig& c) {
  bool all_ok = true;
  auto report = [&](const char* name, bool ok, const std::string& detail) {
    all_ok = all_ok && ok;
    std::cout << (ok ? "pass" : "FAIL") << "  " << name;
    if (!detail.empty()) std::cout << "  (" << detail << ")";
    std::cout << "\n";
  };
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  // Shear-energy excess of random porous displacement fields.
  {
    ReferenceMeshes meshes =
        build_reference_meshes(c.phys.L, c.phys.R, c.nx, c.ny);
    QuadSet quad = QuadSet::make(c.quad_degree);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      P2VecField eta;
      eta.mesh = &meshes.biot;
      eta.coef = Eigen::VectorXd::Zero(2 * meshes.biot.n_p2_nodes());
      for (int k = 0; k < eta.coef.size(); ++k)
        eta.coef[k] = 2.0 * u01(rng) - 1.0;
      worst = std::min(worst, korn_gap(meshes.biot, quad, eta));
    }
    report("shear-energy excess of random fields nonnegative", worst >= -1e-12,
           "min " + format_double(worst));
  }

  // Interface map round trip and orientation.
  {
    Profile1D om;
    om.val = [&](double x) {
      return 0.1 * std::sin(M_PI * x / c.phys.L) *
             std::sin(M_PI * x / c.phys.L);
    };
    om.dx = [&](double x) {
      return 0.1 * M_PI / c.phys.L * std::sin(2.0 * M_PI * x / c.phys.L);
    };
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
      Vec2 q(c.phys.L * u01(rng), -c.phys.R * u01(rng));
      Vec2 back = ale_inverse(om, c.phys.R, ale_map(om, c.phys.R, q));
      worst = std::max(worst, (back - q).norm());
    }
    report("deformed-domain map round trip", worst <= 1e-12,
           "max " + format_double(worst));
  }

  // Discrete energy identities along a free pulse.
  {
    SchemeOptions opt = c.scheme_options();
    Simulator sim(c.phys, c.nx, c.ny, opt);
    set_pulse(sim, c.phys, 0.02 * c.phys.R);
    double E0 = sim.energy().total();
    Verdict v = sim.run();
    double worst1 = 0, worst2 = 0;
    for (const auto& row : sim.ledger()) {
      worst1 = std::max(worst1, row.res_eq1);
      worst2 = std::max(worst2, row.res_eq2);
    }
    report("plate half-step energy identity", v == Verdict::ok && worst1 <= 1e-10,
           "max residual " + format_double(worst1));
    report("coupled-step energy identity", v == Verdict::ok && worst2 <= 1e-6,
           "max residual " + format_double(worst2));
    report("global energy inequality",
           check_global_energy_inequality(sim.ledger(), E0, 1e-8), "");
  }

  // Mollifier approximation rates on the frozen reference deformation.
  {
    SeparableCase ref = make_reference(c);
    double t0 = 0.25 * 2.0 * M_PI / ref.sigma;
    OddExtension ext = odd_extend_analytic(
        c.phys.L, c.phys.R,
        [&, t0](const Vec2& q) { return ref.eta_hat(t0, q); },
        [&, t0](double x) { return ref.w(t0, x); },
        [&, t0](const Vec2& q) { return ref.eta_hat_grad(t0, q); },
        [&, t0](double x) { return ref.w_x(t0, x); });
    double scale = std::min(c.phys.L, c.phys.R);
    std::vector<double> deltas{0.2 * scale, 0.1 * scale, 0.05 * scale,
                               0.025 * scale};
    ConvolutionRateReport rates = convolution_rate_report(
        ext, deltas,
        MollifierRule::make(c.mollifier_nr(), c.mollifier_ntheta()));
    report("mollifier H1 convergence order >= 1.45",
           rates.fitted_order_h1 >= 1.45,
           "order " + format_double(rates.fitted_order_h1));
    report("mollifier gradient convergence order >= 0.9",
           rates.fitted_order_grad >= 0.9,
           "order " + format_double(rates.fitted_order_grad));
  }

  return all_ok ? kExitOk : kExitProperty;
}

int cmd_mms(const RunConfig& c) {
  SeparableCase ref = make_reference(c);
  ResidualReport rep =
      mms_residual_report(ref, 100, static_cast<unsigned>(c.seed));
  std::cout << "plate residual    " << format_double(rep.plate) << "\n"
            << "porous residual   " << format_double(rep.biot) << "\n"
            << "pressure residual " << format_double(rep.pressure) << "\n";
  if (rep.max_all() > 1e-8) {
    std::cout << "FAIL: residual above 1e-8\n";
    return kExitProperty;
  }
  std::cout << "pass: all residuals <= 1e-8\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    CliArgs args = parse_args(argc, argv);
    if (args.subcommand != "run" && args.subcommand != "sweep-delta" &&
        args.subcommand != "verify" && args.subcommand != "mms") {
      std::cerr << "unknown subcommand: " << args.subcommand << "\n";
      usage(std::cerr);
      return kExitConfig;
    }
    RunConfig config = load_config(args);
    if (args.subcommand == "run") return cmd_run(config);
    if (args.subcommand == "sweep-delta") return cmd_sweep_delta(config);
    if (args.subcommand == "verify") return cmd_verify(config);
    return cmd_mms(config);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    usage(std::cerr);
    return kExitConfig;
  } catch (const DegeneracyError& e) {
    std::cerr << "degeneracy: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
