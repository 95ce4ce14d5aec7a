#pragma once
// Result serialization: CSV ledgers and reports, legacy-ASCII VTK fields.
//
// All numeric output goes through the 17-significant-digit formatter of the
// configuration module, so a fixed configuration produces byte-identical
// files on every run.  Field snapshots use legacy-ASCII VTK unstructured
// grids (universally readable); scalar time series use CSV.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fpsi/config.hpp"
#include "fpsi/consistency.hpp"
#include "fpsi/scheme.hpp"
#include "fpsi/transforms.hpp"

namespace fpsi {

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open output file: " + path);
  os << text;
  if (!os) throw ConfigError("write failed: " + path);
}

// --- CSV reports -----------------------------------------------------------

inline std::string ledger_csv(const std::vector<LedgerRow>& rows) {
  std::ostringstream os;
  os << "n,t,E_half,E_full,D,res_eq1,res_eq2,min_det,min_gap_R,verdict\n";
  for (const auto& r : rows) {
    os << r.n << ',' << format_double(r.t) << ',' << format_double(r.E_half)
       << ',' << format_double(r.E_full) << ',' << format_double(r.D) << ','
       << format_double(r.res_eq1) << ',' << format_double(r.res_eq2) << ','
       << format_double(r.min_det) << ',' << format_double(r.min_gap_R) << ','
       << verdict_name(r.verdict) << '\n';
  }
  return os.str();
}

inline std::string sweep_csv(const SweepReport& rep) {
  std::ostringstream os;
  os << "delta,max_E";
  for (int k = 1; k <= 11; ++k) os << ",term_" << (k < 10 ? "0" : "") << k;
  os << ",fitted_order,floor_estimate,bootstrap_min_det,bootstrap_grad_gap\n";
  for (const auto& run : rep.runs) {
    os << format_double(run.delta) << ',' << format_double(run.max_E);
    for (double term : run.at_max.term) os << ',' << format_double(term);
    os << ',' << format_double(rep.fitted_order) << ','
       << format_double(rep.floor_estimate) << ','
       << format_double(run.boot.min_det) << ','
       << format_double(run.boot.grad_gap) << '\n';
  }
  return os.str();
}

inline std::string convolution_rate_csv(const ConvolutionRateReport& rep) {
  std::ostringstream os;
  os << "delta,h1_error,grad_max_error,fitted_order_h1,fitted_order_grad\n";
  for (size_t i = 0; i < rep.delta.size(); ++i)
    os << format_double(rep.delta[i]) << ',' << format_double(rep.h1_error[i])
       << ',' << format_double(rep.grad_max_error[i]) << ','
       << format_double(rep.fitted_order_h1) << ','
       << format_double(rep.fitted_order_grad) << '\n';
  return os.str();
}

// --- legacy-ASCII VTK snapshots --------------------------------------------

namespace detail {

// Shared unstructured-grid preamble over the P1 corner triangulation.
inline void vtk_mesh_header(std::ostringstream& os, const char* title,
                            const std::vector<Vec2>& points,
                            const TriMesh& mesh) {
  os << "# vtk DataFile Version 2.0\n"
     << title << "\n"
     << "ASCII\n"
     << "DATASET UNSTRUCTURED_GRID\n"
     << "POINTS " << points.size() << " double\n";
  for (const Vec2& p : points)
    os << format_double(p.x()) << ' ' << format_double(p.y()) << " 0\n";
  os << "CELLS " << mesh.n_cells() << ' ' << 4 * mesh.n_cells() << '\n';
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& v = mesh.cells[c].v;
    os << "3 " << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  }
  os << "CELL_TYPES " << mesh.n_cells() << '\n';
  for (int c = 0; c < mesh.n_cells(); ++c) os << "5\n";
}

}  // namespace detail

// Fluid velocity sampled at the vertices of the deformed fluid domain
// Omega_f(t) (vertices displaced by the interface profile).
inline std::string fluid_vtk(const TriMesh& fluid, const P2VecField& u,
                             const PlateField& omega, double R) {
  Profile1D om = make_profile(omega);
  std::vector<Vec2> pts;
  pts.reserve(fluid.verts.size());
  for (const Vec2& q : fluid.verts) pts.push_back(ale_map(om, R, q));
  std::ostringstream os;
  detail::vtk_mesh_header(os, "fluid velocity on the deformed domain", pts,
                          fluid);
  os << "POINT_DATA " << pts.size() << "\nVECTORS velocity double\n";
  for (int k = 0; k < fluid.n_verts(); ++k)
    os << format_double(u.coef[2 * k]) << ' ' << format_double(u.coef[2 * k + 1])
       << " 0\n";
  return os.str();
}

// Porous displacement, displacement velocity and pore pressure on the
// reference layer.
inline std::string biot_vtk(const TriMesh& biot, const P2VecField& eta,
                            const P2VecField& etadot, const P1Field& p) {
  std::ostringstream os;
  detail::vtk_mesh_header(os, "porous fields on the reference layer",
                          biot.verts, biot);
  os << "POINT_DATA " << biot.verts.size() << "\nVECTORS displacement double\n";
  for (int k = 0; k < biot.n_verts(); ++k)
    os << format_double(eta.coef[2 * k]) << ' '
       << format_double(eta.coef[2 * k + 1]) << " 0\n";
  os << "VECTORS displacement_velocity double\n";
  for (int k = 0; k < biot.n_verts(); ++k)
    os << format_double(etadot.coef[2 * k]) << ' '
       << format_double(etadot.coef[2 * k + 1]) << " 0\n";
  os << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (int k = 0; k < biot.n_verts(); ++k)
    os << format_double(p.coef[k]) << '\n';
  return os.str();
}

// Plate profile as a polyline of deflected interface positions.
inline std::string plate_vtk(const PlateMesh& plate, const PlateField& omega) {
  std::ostringstream os;
  int n = plate.n_nodes();
  os << "# vtk DataFile Version 2.0\n"
     << "plate deflection profile\n"
     << "ASCII\nDATASET POLYDATA\nPOINTS " << n << " double\n";
  for (int i = 0; i < n; ++i)
    os << format_double(plate.nodes[i]) << ' '
       << format_double(omega.coef[2 * i]) << " 0\n";
  os << "LINES 1 " << (n + 1) << "\n" << n;
  for (int i = 0; i < n; ++i) os << ' ' << i;
  os << "\nPOINT_DATA " << n << "\nSCALARS deflection double 1\n"
     << "LOOKUP_TABLE default\n";
  for (int i = 0; i < n; ++i) os << format_double(omega.coef[2 * i]) << '\n';
  return os.str();
}

inline void write_snapshot(const std::string& dir, int n, const Simulator& sim) {
  const CoupledState& st = sim.state();
  const ReferenceMeshes& m = sim.meshes();
  std::string tag = std::to_string(n);
  write_text_file(dir + "/fluid_" + tag + ".vtk",
                  fluid_vtk(m.fluid, st.u, st.omega, sim.context().phys.R));
  write_text_file(dir + "/biot_" + tag + ".vtk",
                  biot_vtk(m.biot, st.eta, st.etadot, st.p));
  write_text_file(dir + "/plate_" + tag + ".vtk", plate_vtk(m.plate, st.omega));
}

}  // namespace fpsi
