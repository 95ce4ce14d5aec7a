#pragma once

// Time stepping.  One step of the splitting scheme:
//
//   1. regularize the current displacement and freeze the step geometry,
//   2. run the degeneracy monitors on the frozen data; refuse the step if the
//      plate approaches the channel wall or the regularized deformation
//      degenerates,
//   3. advance the plate by the implicit bending half step,
//   4. re-check the plate gap for the new profile,
//   5. solve the monolithic fluid-porous system and accept the new state.
//
// Each accepted step appends a ledger row with the two discrete energy
// identity residuals: the plate half step satisfies
//     E_half + (plate jumps) = E_n + (plate forcing work)
// to roundoff, and the implicit step satisfies
//     E_full + dissipation + (jumps) = E_half + (forcing work)
// up to the quadrature defect of the three-way pressure-displacement
// coupling, which vanishes with increasing rule degree.  Both residuals are
// computed with the same quadrature as the assembled systems.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fpsi/assembly.hpp"

namespace fpsi {

enum class Verdict { ok, plate_touches_boundary, lagrangian_degenerate };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::ok: return "ok";
    case Verdict::plate_touches_boundary: return "plate_touches_boundary";
    default: return "lagrangian_degenerate";
  }
}

struct SchemeOptions {
  double dt = 1e-2;
  double T = 1e-1;
  double delta = 0.1;
  int quad_degree = 6;
  int mollifier_nr = 9;
  int mollifier_ntheta = 16;
  double margin_gap = -1.0;  // < 0: use 0.01 * R
  double margin_det = 1e-3;
  double norm_cap = 1e3;
  int threads = 1;
};

struct CoupledState {
  P2VecField u;       // fluid velocity (reference frame)
  P1Field pi;         // incompressibility multiplier of the last solve
  P2VecField eta;     // porous displacement
  P2VecField etadot;  // porous displacement velocity
  P1Field p;          // pore pressure
  PlateField omega;   // current plate profile
  int n = 0;
  double t = 0;
};

struct LedgerRow {
  int n = 0;
  double t = 0;
  double E_half = 0, E_full = 0, D = 0;
  double res_eq1 = 0, res_eq2 = 0;
  double min_det = 0, min_gap_R = 0;
  Verdict verdict = Verdict::ok;
};

struct MonitorReport {
  double min_gap_R = 0;
  double min_det = 0;
  double max_F_norm = 0, max_Finv_norm = 0;
  Verdict verdict = Verdict::ok;
};

struct StepResult {
  bool accepted = false;
  Verdict verdict = Verdict::ok;
  LedgerRow row;
};

// Prescribed body forcing, evaluated at the implicit time level.
struct TimeForcing {
  std::function<Vec2(double, const Vec2&)> fluid;       // physical fluid frame
  std::function<Vec2(double, const Vec2&)> biot;        // reference frame
  std::function<double(double, const Vec2&)> pressure;  // reference frame
  std::function<double(double, double)> plate;          // (t, x)
};

class Simulator {
 public:
  Simulator(const PhysicalParams& phys, int nx, int ny, SchemeOptions opt)
      : meshes_(build_reference_meshes(phys.L, phys.R, nx, ny)),
        imap_(build_interface_map(meshes_.fluid, meshes_.biot, meshes_.plate)),
        ctx_(StepContext::make(meshes_, imap_, phys, opt.quad_degree)),
        plate_(PlateOperator::build(meshes_.plate, ctx_.quad.seg)),
        rule_(MollifierRule::make(opt.mollifier_nr, opt.mollifier_ntheta)),
        opt_(opt) {
    phys.validate();
    if (!(opt.dt > 0)) throw ConfigError("scheme: dt must be positive");
    if (!(opt.T >= opt.dt)) throw ConfigError("scheme: T must be >= dt");
    if (!(opt.delta > 0) || opt.delta >= std::min(phys.L, phys.R))
      throw ConfigError("scheme: delta must satisfy 0 < delta < min(L, R)");
    if (opt_.margin_gap < 0) opt_.margin_gap = 0.01 * phys.R;
    plate_.factorize(phys.rho_p, opt.dt);
    set_rest();
  }
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  void set_rest() {
    st_.u = interpolate_p2_vec(meshes_.fluid, [](Vec2) { return Vec2::Zero(); });
    st_.pi = interpolate_p1(meshes_.fluid, [](Vec2) { return 0.0; });
    st_.eta =
        interpolate_p2_vec(meshes_.biot, [](Vec2) { return Vec2::Zero(); });
    st_.etadot =
        interpolate_p2_vec(meshes_.biot, [](Vec2) { return Vec2::Zero(); });
    st_.p = interpolate_p1(meshes_.biot, [](Vec2) { return 0.0; });
    st_.omega = interpolate_plate(
        meshes_.plate, [](double) { return 0.0; }, [](double) { return 0.0; });
    st_.n = 0;
    st_.t = 0;
  }

  // Initial data.  The displacement trace must agree with the plate profile
  // and the displacement-velocity trace with the plate velocity: the scheme
  // reads the plate velocity back from that trace.
  void set_initial(const std::function<Vec2(Vec2)>& u0,
                   const std::function<Vec2(Vec2)>& eta0,
                   const std::function<Vec2(Vec2)>& etadot0,
                   const std::function<double(Vec2)>& p0,
                   const std::function<double(double)>& omega0,
                   const std::function<double(double)>& omega0_dx) {
    set_rest();
    st_.u = interpolate_p2_vec(meshes_.fluid, u0);
    st_.eta = interpolate_p2_vec(meshes_.biot, eta0);
    st_.etadot = interpolate_p2_vec(meshes_.biot, etadot0);
    st_.p = interpolate_p1(meshes_.biot, p0);
    st_.omega = interpolate_plate(meshes_.plate, omega0, omega0_dx);
    for (size_t i = 0; i < imap_.vertex_pairs.size(); ++i) {
      double x = meshes_.plate.nodes[i];
      Vec2 tr = eta0({x, 0.0});
      if (std::abs(tr.y() - omega0(x)) > 1e-10 || std::abs(tr.x()) > 1e-10)
        throw ConfigError(
            "initial data: eta must equal omega e_y on the interface");
    }
  }

  const CoupledState& state() const { return st_; }
  CoupledState& state() { return st_; }
  const StepContext& context() const { return ctx_; }
  const ReferenceMeshes& meshes() const { return meshes_; }
  const PlateOperator& plate_operator() const { return plate_; }
  const std::vector<LedgerRow>& ledger() const { return ledger_; }
  const MonitorReport& last_monitor() const { return monitor_; }
  TimeForcing forcing;

  EnergySnapshot energy() const {
    return energy_snapshot(ctx_, st_.u, st_.omega, st_.eta, st_.etadot, st_.p,
                           zeta_from_trace(st_.etadot), st_.omega);
  }

  StepResult step() {
    const PhysicalParams& ph = ctx_.phys;
    const double dt = opt_.dt;
    const double tnew = (st_.n + 1) * dt;
    StepResult out;

    // 1. frozen geometry of the step
    RegularizedField eta_delta =
        mollify(odd_extend(meshes_.biot, st_.eta), opt_.delta, rule_);
    BiotGeometry geom =
        build_biot_geometry(meshes_.biot, ctx_.quad, eta_delta, opt_.threads);
    double gap_n = min_gap(meshes_.plate, ctx_.quad, st_.omega, ph.R);
    monitor_.min_gap_R = gap_n;
    monitor_.min_det = geom.min_det;
    monitor_.max_F_norm = geom.max_F_norm;
    monitor_.max_Finv_norm = geom.max_Finv_norm;
    monitor_.verdict = Verdict::ok;

    // 2. monitors on the frozen data
    if (gap_n <= opt_.margin_gap) {
      monitor_.verdict = out.verdict = Verdict::plate_touches_boundary;
      return out;
    }
    if (geom.min_det <= opt_.margin_det ||
        geom.max_F_norm >= opt_.norm_cap ||
        geom.max_Finv_norm >= opt_.norm_cap) {
      monitor_.verdict = out.verdict = Verdict::lagrangian_degenerate;
      return out;
    }

    // 3. plate half step
    auto zeta_n = zeta_from_trace(st_.etadot);
    std::function<double(double)> fplate;
    const std::function<double(double)>* fplate_ptr = nullptr;
    if (forcing.plate) {
      fplate = [&](double x) { return forcing.plate(tnew, x); };
      fplate_ptr = &fplate;
    }
    EnergySnapshot E_n =
        energy_snapshot(ctx_, st_.u, st_.omega, st_.eta, st_.etadot, st_.p,
                        zeta_n, st_.omega);
    PlateField omega_half = plate_.half_step(st_.omega, zeta_n, fplate_ptr);
    PlateField zeta_half;
    zeta_half.mesh = &meshes_.plate;
    zeta_half.coef = (omega_half.coef - st_.omega.coef) / dt;

    // 4. the new profile must also respect the gap
    double gap_half = min_gap(meshes_.plate, ctx_.quad, omega_half, ph.R);
    monitor_.min_gap_R = std::min(gap_n, gap_half);
    if (gap_half <= opt_.margin_gap) {
      monitor_.verdict = out.verdict = Verdict::plate_touches_boundary;
      return out;
    }

    EnergySnapshot E_half =
        energy_snapshot(ctx_, st_.u, st_.omega, st_.eta, st_.etadot, st_.p,
                        zeta_from_plate(zeta_half), omega_half);
    double plate_jumps = plate_.integrate([&](double x) {
      double dz = zeta_half.value(x) - zeta_n(x);
      double db = omega_half.dxx(x) - st_.omega.dxx(x);
      return 0.5 * ph.rho_p * dz * dz + 0.5 * db * db;
    });
    double work1 =
        fplate_ptr ? dt * plate_.integrate([&](double x) {
          return fplate(x) * zeta_half.value(x);
        })
                   : 0.0;
    double res_eq1 =
        std::abs(E_half.total() + plate_jumps - E_n.total() - work1);

    // 5. monolithic implicit solve
    auto normals =
        build_interface_delta_normals(meshes_.plate, ctx_.quad, eta_delta);
    StepData sd;
    sd.u_n = &st_.u;
    sd.eta_n = &st_.eta;
    sd.etadot_n = &st_.etadot;
    sd.p_n = &st_.p;
    sd.omega_n = &st_.omega;
    sd.zeta_half = &zeta_half;
    sd.geom = &geom;
    sd.delta_normals = &normals;
    sd.dt = dt;
    if (forcing.fluid)
      sd.forcing.fluid = [&](const Vec2& x) { return forcing.fluid(tnew, x); };
    if (forcing.biot)
      sd.forcing.biot = [&](const Vec2& x) { return forcing.biot(tnew, x); };
    if (forcing.pressure)
      sd.forcing.pressure = [&](const Vec2& x) {
        return forcing.pressure(tnew, x);
      };

    CoupledSystem sys = assemble_coupled(ctx_, sd);
    Eigen::VectorXd x = solve_sparse(sys);

    const SystemLayout& lay = ctx_.layout;
    CoupledState ns;
    ns.u.mesh = &meshes_.fluid;
    ns.u.coef = x.segment(lay.off_u, 2 * meshes_.fluid.n_p2_nodes());
    ns.pi.mesh = &meshes_.fluid;
    ns.pi.coef = x.segment(lay.off_pi, meshes_.fluid.n_verts());
    ns.etadot.mesh = &meshes_.biot;
    ns.etadot.coef = x.segment(lay.off_d, 2 * meshes_.biot.n_p2_nodes());
    ns.eta.mesh = &meshes_.biot;
    ns.eta.coef = st_.eta.coef + dt * ns.etadot.coef;
    ns.p.mesh = &meshes_.biot;
    ns.p.coef = x.segment(lay.off_p, meshes_.biot.n_verts());
    ns.omega = omega_half;
    ns.n = st_.n + 1;
    ns.t = tnew;

    // 6. step ledgers
    DissipationLedger D = dissipation_ledger(ctx_, sd, ns.u, ns.etadot, ns.p);
    double jumps = jump_energy(ctx_, sd, ns.u, ns.etadot, ns.p);
    double work2 = forcing_work(ctx_, sd, ns.u, ns.etadot, ns.p);
    EnergySnapshot E_full =
        energy_snapshot(ctx_, ns.u, ns.omega, ns.eta, ns.etadot, ns.p,
                        zeta_from_trace(ns.etadot), ns.omega);
    double res_eq2 = std::abs(E_full.total() + D.total() + jumps -
                              E_half.total() - work2);

    st_ = std::move(ns);
    out.accepted = true;
    out.row = {st_.n,        st_.t,   E_half.total(), E_full.total(),
               D.total(),    res_eq1, res_eq2,        geom.min_det,
               monitor_.min_gap_R, Verdict::ok};
    ledger_.push_back(out.row);
    return out;
  }

  // Run to the final time; stops early with the offending verdict if a
  // monitor refuses a step.
  Verdict run(const std::function<void(const CoupledState&)>& on_accept =
                  nullptr) {
    int n_steps = static_cast<int>(std::llround(opt_.T / opt_.dt));
    for (int k = st_.n; k < n_steps; ++k) {
      StepResult r = step();
      if (!r.accepted) return r.verdict;
      if (on_accept) on_accept(st_);
    }
    return Verdict::ok;
  }

 private:
  ReferenceMeshes meshes_;
  InterfaceMap imap_;
  StepContext ctx_;
  PlateOperator plate_;
  MollifierRule rule_;
  SchemeOptions opt_;
  CoupledState st_;
  std::vector<LedgerRow> ledger_;
  MonitorReport monitor_;
};

// Cumulative form of the discrete energy inequality: with zero forcing,
// E^n plus all released dissipation must never exceed the initial energy
// (up to the accumulated identity residuals).
inline bool check_global_energy_inequality(const std::vector<LedgerRow>& rows,
                                           double E0, double rel_tol) {
  double dsum = 0;
  for (const auto& r : rows) {
    dsum += r.D;
    if (r.E_full + dsum > E0 * (1.0 + rel_tol) + rel_tol) return false;
  }
  return true;
}

}  // namespace fpsi
