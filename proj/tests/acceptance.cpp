// Acceptance suite: one pass/fail line per criterion, exit 0 only if all
// criteria hold.  Each criterion is self-contained and reports its runtime.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fpsi/consistency.hpp"
#include "fpsi/io.hpp"
#include "fpsi/reference.hpp"
#include "fpsi/regularizer.hpp"
#include "fpsi/scheme.hpp"

using namespace fpsi;

namespace {

int g_failures = 0;

void criterion(int number, const char* name,
               const std::function<bool(std::string&)>& body) {
  std::string detail;
  auto start = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (!ok) ++g_failures;
  std::printf("criterion %d (%s): %s%s%s  [%.1f s]\n", number, name,
              ok ? "pass" : "FAIL", detail.empty() ? "" : "  ",
              detail.c_str(), seconds);
  std::fflush(stdout);
}

PhysicalParams default_params() {
  PhysicalParams ph;
  ph.rho_b = 1.0;
  ph.mu_e = 1.0;
  ph.lambda_e = 0.5;
  ph.mu_v = 0.2;
  ph.lambda_v = 0.1;
  ph.alpha = 1.0;
  ph.c0 = 1.0;
  ph.kappa = 1.0;
  ph.rho_p = 1.0;
  ph.nu = 1.0;
  ph.beta = 0.2;
  ph.L = 1.0;
  ph.R = 1.0;
  return ph;
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

// Physical configuration of the consistency sweep: viscoelastic porous
// layer, slow storage, and a strong pressure/dilation coupling so the
// pressure response to the regularized geometry rises above the spatial
// floor of the manufactured interior mode.
PhysicalParams sweep_params() {
  PhysicalParams ph;
  ph.rho_b = 1.1;
  ph.mu_e = 0.9;
  ph.lambda_e = 0.7;
  ph.mu_v = 0.3;
  ph.lambda_v = 0.2;
  ph.alpha = 10.0;
  ph.c0 = 0.05;
  ph.kappa = 0.02;
  ph.rho_p = 1.2;
  ph.nu = 1.0;
  ph.beta = 0.0;
  ph.L = 2.0;
  ph.R = 1.0;
  return ph;
}

}  // namespace

int main() {
  // 1. Plate half-step energy equality on random data.
  criterion(1, "plate energy equality", [](std::string& detail) {
    auto meshes = build_reference_meshes(1.0, 1.0, 16, 1);
    QuadSet quad = QuadSet::make(6);
    auto op = PlateOperator::build(meshes.plate, quad.seg);
    double rho_p = 1.3, dt = 0.01;
    op.factorize(rho_p, dt);
    std::mt19937 rng(2024);
    std::normal_distribution<double> gauss;
    PlateField omega;
    omega.mesh = &meshes.plate;
    omega.coef.resize(2 * meshes.plate.n_nodes());
    Eigen::VectorXd zc(omega.coef.size());
    for (int i = 0; i < omega.coef.size(); ++i) {
      omega.coef[i] = gauss(rng);
      zc[i] = gauss(rng);
    }
    for (int d : op.clamped) {
      omega.coef[d] = 0.0;
      zc[d] = 0.0;
    }
    PlateField zeta;
    zeta.mesh = &meshes.plate;
    zeta.coef = zc;
    double worst = 0.0;
    for (int n = 0; n < 100; ++n) {
      PlateField omega_half = op.half_step(
          omega, [&](double x) { return zeta.value(x); }, nullptr);
      PlateField zeta_half;
      zeta_half.mesh = &meshes.plate;
      zeta_half.coef = (omega_half.coef - omega.coef) / dt;
      auto sq = [&](const std::function<double(double)>& g) {
        return op.integrate([&](double x) {
          double v = g(x);
          return v * v;
        });
      };
      double lhs =
          0.5 * rho_p * sq([&](double x) { return zeta_half.value(x); }) +
          0.5 * sq([&](double x) { return omega_half.dxx(x); }) +
          0.5 * rho_p * sq([&](double x) {
            return zeta_half.value(x) - zeta.value(x);
          }) +
          0.5 * sq([&](double x) { return omega_half.dxx(x) - omega.dxx(x); });
      double rhs = 0.5 * rho_p * sq([&](double x) { return zeta.value(x); }) +
                   0.5 * sq([&](double x) { return omega.dxx(x); });
      worst = std::max(worst,
                       std::abs(lhs - rhs) / std::max({lhs, rhs, 1.0}));
      omega = omega_half;
      zeta = zeta_half;
    }
    detail = "max relative residual " + format_double(worst);
    return worst <= 1e-10;
  });

  // 2. Coupled energy equality, with quadrature refinement.
  criterion(2, "coupled energy equality", [](std::string& detail) {
    PhysicalParams ph = default_params();
    auto run_with = [&](int quad_degree) {
      SchemeOptions opt;
      opt.dt = 1e-2;
      opt.T = 0.2;
      opt.delta = 0.1 * std::min(ph.L, ph.R);
      opt.quad_degree = quad_degree;
      Simulator sim(ph, 8, 8, opt);
      set_pulse(sim, ph, 0.02);
      if (sim.run() != Verdict::ok) throw NumericError("unexpected verdict");
      double worst = 0.0;
      for (const auto& row : sim.ledger())
        worst = std::max(worst, row.res_eq2);
      return worst;
    };
    double res_default = run_with(6);
    double res_refined = run_with(8);
    detail = "max residual " + format_double(res_default) + ", refined " +
             format_double(res_refined);
    return res_default <= 1e-6 && res_refined < res_default;
  });

  // 3. Unconditional stability / global energy bound.
  criterion(3, "unconditional stability", [](std::string& detail) {
    PhysicalParams ph = default_params();
    for (double dt : {1e-1, 1e-2, 1e-3}) {
      SchemeOptions opt;
      opt.dt = dt;
      opt.T = 20 * dt;
      opt.delta = 0.1 * std::min(ph.L, ph.R);
      Simulator sim(ph, 8, 8, opt);
      set_pulse(sim, ph, 0.02);
      double E_prev = sim.energy().total();
      double E0 = E_prev;
      if (sim.run() != Verdict::ok) {
        detail = "unexpected verdict at dt " + format_double(dt);
        return false;
      }
      for (const auto& row : sim.ledger()) {
        if (!(row.E_full <= row.E_half * (1 + 1e-12) &&
              row.E_half <= E_prev * (1 + 1e-12))) {
          detail = "monotonicity fails at step " + std::to_string(row.n) +
                   ", dt " + format_double(dt);
          return false;
        }
        E_prev = row.E_full;
      }
      if (!check_global_energy_inequality(sim.ledger(), E0, 1e-8)) {
        detail = "global bound fails at dt " + format_double(dt);
        return false;
      }
    }
    return true;
  });

  // 4. Shear-energy excess (Korn) on random porous fields.
  criterion(4, "Korn inequality", [](std::string& detail) {
    auto meshes = build_reference_meshes(1.0, 1.0, 8, 8);
    QuadSet quad = QuadSet::make(6);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      P2VecField eta;
      eta.mesh = &meshes.biot;
      eta.coef.resize(2 * meshes.biot.n_p2_nodes());
      for (int k = 0; k < eta.coef.size(); ++k) eta.coef[k] = u(rng);
      worst = std::min(worst, korn_gap(meshes.biot, quad, eta));
    }
    detail = "min excess " + format_double(worst);
    return worst >= -1e-12;
  });

  // 5. Transform oracle suite.
  criterion(5, "transform oracles", [](std::string& detail) {
    const double L = 2.0, R = 1.0;
    Profile1D om{[&](double x) {
                   double s = std::sin(M_PI * x / L);
                   return 0.3 * s * s;
                 },
                 [&](double x) {
                   return 0.3 * M_PI / L * std::sin(2 * M_PI * x / L);
                 }};
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ux(0.05, L - 0.05),
        uy(-R + 0.05, -0.05);
    auto fd = [](const std::function<double(Vec2)>& f, Vec2 p, int c) {
      double h = 1e-5;
      Vec2 dp = c == 0 ? Vec2(h, 0) : Vec2(0, h);
      return (f(p + dp) - f(p - dp)) / (2 * h);
    };

    double worst_rt = 0.0;
    for (int k = 0; k < 200; ++k) {
      Vec2 q(ux(rng), uy(rng));
      worst_rt =
          std::max(worst_rt,
                   (ale_inverse(om, R, ale_map(om, R, q)) - q).norm());
    }
    if (worst_rt > 1e-13) {
      detail = "map round trip " + format_double(worst_rt);
      return false;
    }

    auto ghat = [](const Vec2& p) {
      return std::sin(1.3 * p.x()) * std::cos(0.7 * p.y()) + p.x() * p.y();
    };
    auto ghat_grad = [](const Vec2& p) {
      return Vec2(1.3 * std::cos(1.3 * p.x()) * std::cos(0.7 * p.y()) + p.y(),
                  -0.7 * std::sin(1.3 * p.x()) * std::sin(0.7 * p.y()) +
                      p.x());
    };
    auto gphys = [&](const Vec2& p) { return ghat(ale_inverse(om, R, p)); };
    double worst_grad = 0.0;
    for (int k = 0; k < 50; ++k) {
      Vec2 q(ux(rng), uy(rng));
      Vec2 grad = fluid_transformed_grad(om.val(q.x()), om.dx(q.x()), R,
                                         q.y(), ghat_grad(q));
      Vec2 p = ale_map(om, R, q);
      Vec2 ref(fd(gphys, p, 0), fd(gphys, p, 1));
      worst_grad = std::max(
          worst_grad, (grad - ref).norm() / std::max(1.0, ref.norm()));
    }
    if (worst_grad > 1e-5) {
      detail = "transformed gradient " + format_double(worst_grad);
      return false;
    }

    ProfilePair pair;
    pair.src = om;
    pair.dst = Profile1D{[&](double x) {
                           double s = std::sin(M_PI * x / L);
                           return 0.18 * s * s;
                         },
                         [&](double x) {
                           return 0.18 * M_PI / L *
                                  std::sin(2 * M_PI * x / L);
                         }};
    pair.R = R;
    auto u_src = [&](Vec2 p) {
      double psix = M_PI / L * std::cos(M_PI * p.x() / L) * std::cos(p.y());
      double psiy = -std::sin(M_PI * p.x() / L) * std::sin(p.y());
      return Vec2(psiy, -psix);
    };
    auto pushed = [&](Vec2 p) { return pair.push_forward(u_src, p); };
    double worst_div = 0.0, worst_prt = 0.0;
    for (int k = 0; k < 50; ++k) {
      double x = ux(rng);
      std::uniform_real_distribution<double> uyd(-R + 0.05,
                                                 pair.dst.val(x) - 0.05);
      Vec2 p(x, uyd(rng));
      worst_div = std::max(
          worst_div,
          std::abs(fd([&](Vec2 q) { return pushed(q).x(); }, p, 0) +
                   fd([&](Vec2 q) { return pushed(q).y(); }, p, 1)));
      auto pulled = [&](Vec2 q) { return pair.pull_back(pushed, q); };
      worst_prt = std::max(worst_prt, (pulled(p) - u_src(p)).norm());
    }
    if (worst_div > 1e-6) {
      detail = "transfer divergence " + format_double(worst_div);
      return false;
    }
    if (worst_prt > 1e-13) {
      detail = "transfer round trip " + format_double(worst_prt);
      return false;
    }

    auto u_trace = [&](Vec2 p) {
      double d = p.y() - pair.src.val(p.x());
      return Vec2(d * (1.0 + p.x()), std::cos(p.x()));
    };
    double worst_tr = 0.0;
    for (int k = 0; k < 25; ++k) {
      double x = ux(rng);
      Vec2 hat = pair.push_forward(u_trace, Vec2(x, pair.dst.val(x)));
      worst_tr = std::max(
          worst_tr, (hat - u_trace({x, pair.src.val(x)})).norm());
    }
    if (worst_tr > 1e-12) {
      detail = "trace preservation " + format_double(worst_tr);
      return false;
    }
    detail = "round trip " + format_double(worst_rt) + ", divergence " +
             format_double(worst_div);
    return true;
  });

  // 6. Mollifier convergence rates on a smooth manufactured displacement.
  criterion(6, "mollifier rates", [](std::string& detail) {
    PhysicalParams ph = sweep_params();
    SeparableCase ref = SeparableCase::make(ph, 0.3, 3.0);
    double t0 = 0.25 * 2.0 * M_PI / ref.sigma;
    OddExtension ext = odd_extend_analytic(
        ph.L, ph.R,
        [ref, t0](const Vec2& q) { return ref.eta_hat(t0, q); },
        [ref, t0](double x) { return ref.w(t0, x); },
        [ref, t0](const Vec2& q) { return ref.eta_hat_grad(t0, q); },
        [ref, t0](double x) { return ref.w_x(t0, x); });
    double s = std::min(ph.L, ph.R);
    ConvolutionRateReport rates = convolution_rate_report(
        ext, {0.2 * s, 0.1 * s, 0.05 * s, 0.025 * s}, MollifierRule::make());
    detail = "H1 order " + format_double(rates.fitted_order_h1) +
             ", gradient order " + format_double(rates.fitted_order_grad);
    return rates.fitted_order_h1 >= 1.45 && rates.fitted_order_grad >= 0.9;
  });

  // 7. Weak-classical consistency sweep.
  criterion(7, "consistency sweep", [](std::string& detail) {
    PhysicalParams ph = sweep_params();
    SeparableCase ref = SeparableCase::make_seepage(ph, 0.3, 3.0, 0.3);
    double s = std::min(ph.L, ph.R);
    SchemeOptions opt;
    SweepReport rep = delta_sweep(ref, {0.2 * s, 0.1 * s, 0.05 * s}, 32, 16,
                                  1e-3, 0.5, opt);
    bool monotone = rep.runs[0].max_E > rep.runs[1].max_E &&
                    rep.runs[1].max_E > rep.runs[2].max_E;
    // Bootstrap witness: the regularized numerical geometry stays within
    // half the orientation margin of the reference geometry.
    double ref_det = 1.0;
    {
      MollifierRule rule = MollifierRule::make();
      // minimum determinant of the reference deformation itself over the
      // sweep interval, probed on the coarse lattice
      for (double t : rep.runs[0].series.empty()
                          ? std::vector<double>{0.25}
                          : std::vector<double>{rep.runs[0].t_at_max})
        for (int i = 1; i < 24; ++i)
          for (int j = 1; j < 12; ++j) {
            Vec2 q(ph.L * i / 24.0, ph.R * j / 12.0);
            Mat2 F = Mat2::Identity() + ref.eta_hat_grad(t, q);
            ref_det = std::min(ref_det, F.determinant());
          }
    }
    bool witness = true;
    for (const auto& run : rep.runs)
      witness = witness && run.boot.min_det >= 0.5 * ref_det;
    detail = "fitted order " + format_double(rep.fitted_order) +
             ", max_E " + format_double(rep.runs[0].max_E) + " / " +
             format_double(rep.runs[1].max_E) + " / " +
             format_double(rep.runs[2].max_E) + ", floor " +
             format_double(rep.floor_estimate);
    return rep.conclusive && rep.fitted_order >= 2.5 && monotone && witness;
  });

  // 8. Degeneracy termination, in-process and through the CLI exit code.
  criterion(8, "degeneracy termination", [](std::string& detail) {
    PhysicalParams ph = default_params();
    {
      SchemeOptions opt;
      opt.dt = 1e-2;
      opt.T = 1.0;
      opt.delta = 0.1;
      opt.margin_gap = 0.99 * ph.R;
      Simulator sim(ph, 4, 4, opt);
      set_pulse(sim, ph, 0.05);
      Verdict v = sim.run();
      if (v != Verdict::plate_touches_boundary ||
          sim.last_monitor().min_gap_R <= 0.0) {
        detail = std::string("gap path gave ") + verdict_name(v);
        return false;
      }
    }
    {
      SchemeOptions opt;
      opt.dt = 1e-2;
      opt.T = 1.0;
      opt.delta = 0.1;
      opt.margin_det = 0.999;
      Simulator sim(ph, 4, 4, opt);
      set_pulse(sim, ph, 0.05);
      Verdict v = sim.run();
      if (v != Verdict::lagrangian_degenerate ||
          sim.last_monitor().min_det < opt.margin_det) {
        detail = std::string("folding path gave ") + verdict_name(v);
        return false;
      }
    }
    {
      std::string dir = "/tmp/fpsi_acceptance_degen";
      std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str());
      std::string cfg = dir + "/degen.cfg";
      write_text_file(cfg,
                      "nx = 4\nny = 4\ndt = 1e-2\nT = 1.0\ndelta = 0.1\n"
                      "initial = pulse\namplitude = 0.05\n"
                      "margin_gap = 0.99\n");
      std::string cmd = std::string(FPSI_CLI_PATH) + " run --config " + cfg +
                        " --out " + dir + " > " + dir + "/out.txt 2>&1";
      int status = std::system(cmd.c_str());
      if (status == -1 || WEXITSTATUS(status) != 3) {
        detail = "CLI exit code " +
                 std::to_string(status == -1 ? -1 : WEXITSTATUS(status));
        return false;
      }
    }
    return true;
  });

  // 9. Manufactured-solution residual oracle over the whole catalog.
  criterion(9, "manufactured-solution residuals", [](std::string& detail) {
    PhysicalParams ph = sweep_params();
    double worst = 0.0;
    worst = std::max(worst,
                     mms_residual_report(SeparableCase::make(ph, 0.0, 3.0),
                                         100, 5)
                         .max_all());
    worst = std::max(worst,
                     mms_residual_report(SeparableCase::make(ph, 0.3, 3.0),
                                         100, 5)
                         .max_all());
    worst = std::max(
        worst, mms_residual_report(SeparableCase::make_seepage(ph, 0.3, 3.0,
                                                               0.3),
                                   100, 5)
                   .max_all());
    detail = "max residual " + format_double(worst);
    return worst <= 1e-8;
  });

  std::printf("%d of 9 criteria passed\n", 9 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
