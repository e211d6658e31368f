// command line front end: solve / oracle field generation, frequency sweeps,
// interface detection, flatness of point sets, coverings and tube curves,
// and an aggregate report over the artifacts of the earlier stages.
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "partlab/covering.hpp"
#include "partlab/field_core.hpp"
#include "partlab/field_io.hpp"
#include "partlab/frequency.hpp"
#include "partlab/grid.hpp"
#include "partlab/mean_flatness.hpp"
#include "partlab/partition_solver.hpp"
#include "partlab/singular_set.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace partlab;

namespace {

// exit codes: 0 success, 1 usage or config, 2 non-convergence, 3 missing artifact
struct AppError {
  int code;
  std::string message;
};

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

json load_json_file(const std::string& path, int missing_code) {
  std::ifstream in(path);
  if (!in) throw AppError{missing_code, "cannot open " + path};
  try {
    json j;
    in >> j;
    return j;
  } catch (const std::exception& e) {
    throw AppError{1, path + ": " + e.what()};
  }
}

void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw AppError{1, "cannot write " + path};
  out << body;
  if (!out) throw AppError{1, "write failed: " + path};
}

Vec vec_from_json(const json& j, int dim, const std::string& field) {
  if (!j.is_array() || static_cast<int>(j.size()) < dim)
    throw AppError{1, "config field '" + field + "' needs " + std::to_string(dim) + " numbers"};
  Vec v{0.0, 0.0, 0.0};
  for (int d = 0; d < dim; ++d) v[d] = j[d].get<double>();
  return v;
}

json vec_to_json(const Vec& v, int dim) {
  json a = json::array();
  for (int d = 0; d < dim; ++d) a.push_back(v[d]);
  return a;
}

Vec parse_point(const std::string& s, int dim) {
  Vec v{0.0, 0.0, 0.0};
  std::stringstream ss(s);
  std::string tok;
  int d = 0;
  while (std::getline(ss, tok, ',') && d < 3) {
    try {
      v[d++] = std::stod(tok);
    } catch (const std::exception&) {
      throw AppError{1, "cannot parse coordinate '" + tok + "' in point '" + s + "'"};
    }
  }
  if (d < dim)
    throw AppError{1, "point '" + s + "' has " + std::to_string(d) + " coordinates, needs " +
                          std::to_string(dim)};
  return v;
}

// "rmin:rmax:count" geometric sequence, or a comma-separated explicit list
std::vector<double> parse_radii_spec(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    double a = 0.0, b = 0.0;
    int n = 0;
    char c1 = 0, c2 = 0;
    std::stringstream ss(spec);
    ss >> a >> c1 >> b >> c2 >> n;
    if (!ss || c1 != ':' || c2 != ':' || n < 1 || a <= 0.0 || b < a)
      throw AppError{1, "bad radii spec '" + spec + "' (want rmin:rmax:count)"};
    if (n == 1) {
      out.push_back(a);
    } else {
      const double q = std::pow(b / a, 1.0 / (n - 1));
      for (int i = 0; i < n; ++i) out.push_back(a * std::pow(q, i));
    }
    return out;
  }
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw AppError{1, "cannot parse radius '" + tok + "'"};
    }
  }
  if (out.empty()) throw AppError{1, "empty radii spec"};
  return out;
}

std::string strip_segf(std::string path) {
  const std::string ext = ".segf";
  if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0)
    path.resize(path.size() - ext.size());
  return path;
}

SegregatedField load_field_checked(const std::string& path) {
  const std::string base = strip_segf(path);
  if (!fs::exists(base + ".segf"))
    throw AppError{3, "missing field dump: " + base + ".segf"};
  try {
    return load_field(base);
  } catch (const std::exception& e) {
    throw AppError{1, std::string("cannot load field: ") + e.what()};
  }
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw AppError{1, "cannot create output directory " + out_dir + ": " + ec.message()};
}

std::shared_ptr<const Grid> grid_from_config(const json& cfg) {
  if (!cfg.contains("domain")) throw AppError{1, "config field 'domain' is missing"};
  if (!cfg.contains("h")) throw AppError{1, "config field 'h' is missing"};
  const json& d = cfg["domain"];
  const std::string kind = d.value("kind", "box");
  const int dim = d.value("dim", 2);
  if (dim != 2 && dim != 3) throw AppError{1, "config field 'domain.dim' must be 2 or 3"};
  const double h = cfg["h"].get<double>();
  if (!(h > 0.0)) throw AppError{1, "config field 'h' must be positive"};

  try {
    if (kind == "box" || kind == "free" || kind == "free_box") {
      const Vec lo = vec_from_json(d.at("lo"), dim, "domain.lo");
      const Vec hi = vec_from_json(d.at("hi"), dim, "domain.hi");
      return std::make_shared<Grid>(kind == "box" ? make_box_grid(dim, lo, hi, h, true)
                                                  : make_free_grid(dim, lo, hi, h));
    }
    if (kind == "disk" || kind == "ball") {
      const Vec c = vec_from_json(d.value("center", json::array({0.0, 0.0, 0.0})), dim,
                                  "domain.center");
      const double radius = d.at("radius").get<double>();
      return std::make_shared<Grid>(make_disk_grid(dim, c, radius, h));
    }
    if (kind == "annulus") {
      const Vec c = vec_from_json(d.value("center", json::array({0.0, 0.0, 0.0})), dim,
                                  "domain.center");
      return std::make_shared<Grid>(
          make_annulus_grid(dim, c, d.at("r_in").get<double>(), d.at("r_out").get<double>(), h));
    }
  } catch (const json::exception& e) {
    throw AppError{1, std::string("config field 'domain': ") + e.what()};
  } catch (const std::invalid_argument& e) {
    throw AppError{1, std::string("config field 'domain': ") + e.what()};
  }
  throw AppError{1, "config field 'domain.kind' unknown: " + kind};
}

json sample_to_json(const SingularSample& s, int dim) {
  json j;
  j["location"] = vec_to_json(s.location, dim);
  j["classification"] = point_class_name(s.classification);
  j["order"] = s.order;  // NaN serializes as null
  j["labels"] = s.labels;
  j["detection_radius"] = s.detection_radius;
  j["order_signal"] = s.order_signal;
  j["label_signal"] = s.label_signal;
  j["order_flagged"] = s.order_flagged;
  return j;
}

// ---------------------------------------------------------------- solve ----

int cmd_solve(const std::string& config_path, std::optional<std::uint64_t> seed_override,
              const std::string& out_dir) {
  const json cfg = load_json_file(config_path, 1);
  ensure_out_dir(out_dir);

  SolveConfig sc;
  sc.grid = grid_from_config(cfg);
  if (!cfg.contains("ncomp")) throw AppError{1, "config field 'ncomp' is missing"};
  sc.ncomp = cfg["ncomp"].get<int>();
  if (sc.ncomp < 1)
    throw AppError{1, "config field 'ncomp' must be at least 1, got " +
                          std::to_string(sc.ncomp)};
  sc.seed = cfg.value("seed", 0ULL);
  if (seed_override) sc.seed = *seed_override;

  const json solver = cfg.value("solver", json::object());
  sc.max_iters = solver.value("max_iters", sc.max_iters);
  sc.damping = solver.value("damping", sc.damping);
  sc.tolerance = solver.value("tolerance", sc.tolerance);
  sc.tau_factor = solver.value("tau_factor", sc.tau_factor);
  sc.continuation = solver.value("continuation", sc.continuation);
  sc.cg_max_iters = solver.value("cg_max_iters", sc.cg_max_iters);
  sc.cg_tolerance = solver.value("cg_tolerance", sc.cg_tolerance);
  sc.projection_cadence = solver.value("projection_cadence", sc.projection_cadence);
  const std::string layout = solver.value("seed_layout", std::string("voronoi"));
  if (layout == "voronoi") sc.seed_layout = SeedLayout::Voronoi;
  else if (layout == "random") sc.seed_layout = SeedLayout::Random;
  else throw AppError{1, "config field 'solver.seed_layout' must be voronoi or random"};

  auto [u, rep] = [&] {
    try {
      return solve_partition(sc);
    } catch (const std::invalid_argument& e) {
      throw AppError{1, std::string("config: ") + e.what()};
    }
  }();

  const std::string name = cfg.value("name", std::string("field"));
  const std::string base = (fs::path(out_dir) / name).string();
  try {
    dump_field(u, base);
  } catch (const std::exception& e) {
    throw AppError{1, std::string("cannot write field dump: ") + e.what()};
  }

  json out;
  out["name"] = name;
  out["seed"] = sc.seed;
  out["ncomp"] = sc.ncomp;
  out["converged"] = rep.converged;
  out["iterations"] = rep.iterations;
  out["levels"] = rep.levels;
  out["level_iterations"] = rep.level_iterations;
  out["eigenvalues"] = rep.eigenvalues;
  out["objective"] =
      rep.objective_history.empty() ? 0.0 : rep.objective_history.back();
  out["objective_history"] = rep.objective_history;
  out["residuals"] = rep.residuals;
  out["wall_time_seconds"] = rep.wall_time_seconds;
  write_text_file(base + "_solve_report.json", out.dump(2) + "\n");

  std::cout << "solve: " << name << " objective " << num(out["objective"].get<double>())
            << (rep.converged ? " (converged)" : " (max iterations)") << "\n";
  return rep.converged ? 0 : 2;
}

// --------------------------------------------------------------- oracle ----

int cmd_oracle(int m, int dim, double rotation, double h, double half_width,
               const std::string& name_opt, const std::string& out_dir) {
  if (dim != 2 && dim != 3) throw AppError{1, "--dim must be 2 or 3"};
  if (m < 2) throw AppError{1, "--m must be at least 2"};
  if (!(h > 0.0) || !(half_width > 0.0)) throw AppError{1, "--h and --half-width must be positive"};
  ensure_out_dir(out_dir);

  Vec lo{-half_width, -half_width, -half_width}, hi{half_width, half_width, half_width};
  auto grid = [&] {
    try {
      return std::make_shared<Grid>(make_free_grid(dim, lo, hi, h));
    } catch (const std::invalid_argument& e) {
      throw AppError{1, std::string("grid: ") + e.what()};
    }
  }();
  OracleSpec spec;
  spec.m = m;
  spec.rotation = rotation;
  const SegregatedField u = make_oracle(grid, spec);

  const std::string name = name_opt.empty() ? "oracle_m" + std::to_string(m) : name_opt;
  const std::string base = (fs::path(out_dir) / name).string();
  try {
    dump_field(u, base);
  } catch (const std::exception& e) {
    throw AppError{1, std::string("cannot write field dump: ") + e.what()};
  }
  std::cout << "oracle: wrote " << base << ".segf (m=" << m << ", dim=" << dim << ")\n";
  return 0;
}

// ------------------------------------------------------------ frequency ----

int cmd_frequency(const std::string& field_path, const std::vector<std::string>& center_strs,
                  const std::string& points_path, const std::string& radii_spec, double corr,
                  const std::string& out_dir) {
  const SegregatedField u = load_field_checked(field_path);
  const Grid& g = *u.grid;
  ensure_out_dir(out_dir);

  std::vector<Vec> centers;
  for (const std::string& s : center_strs) centers.push_back(parse_point(s, g.dim));
  if (!points_path.empty()) {
    const json pts = load_json_file(points_path, 3);
    if (!pts.is_array()) throw AppError{1, points_path + ": expected an array of points"};
    for (const json& p : pts) centers.push_back(vec_from_json(p, g.dim, "points[]"));
  }
  if (centers.empty()) {
    Vec mid = 0.5 * (g.domain.lo + g.domain.hi);
    if (g.domain.kind == DomainKind::Disk || g.domain.kind == DomainKind::Annulus)
      mid = g.domain.center;
    centers.push_back(mid);
  }

  const FrequencyAnalyzer an(u);
  std::ostringstream csv;
  csv << "x0,x1,x2,r,D,H,P,F,I,G,Dphi,Hphi,Pphi,Fphi,Ephi,Iphi,Gphi,A,IphiA,"
         "classical_valid,smoothed_valid,h_zero,hphi_zero\n";

  const double lam_g = u.lambda_max() > 0.0 && g.dim >= 2
                           ? 2.0 * u.lambda_max() / (g.dim - 1)
                           : 0.0;
  json centers_report = json::array();
  double g_violation_max = 0.0;
  double c_hat = 0.0;
  bool c_hat_any = false;

  for (const Vec& x : centers) {
    std::vector<double> radii;
    const double rmax = g.max_radius(x);
    if (!radii_spec.empty()) {
      for (double r : parse_radii_spec(radii_spec)) {
        if (r < g.min_radius() - 1e-12) {
          std::cerr << "warning: radius " << r << " below the 4h floor, skipped\n";
          continue;
        }
        if (r > rmax + 1e-12) {
          std::cerr << "warning: radius " << r << " above dist-to-boundary - 2h, skipped\n";
          continue;
        }
        radii.push_back(r);
      }
    } else {
      if (rmax > g.min_radius()) {
        const int n = 12;
        const double q = std::pow(rmax / g.min_radius(), 1.0 / (n - 1));
        for (int i = 0; i < n; ++i) radii.push_back(g.min_radius() * std::pow(q, i));
      }
    }
    if (radii.empty()) {
      std::cerr << "warning: no admissible radii at center (" << x[0] << "," << x[1] << ")\n";
      continue;
    }
    std::sort(radii.begin(), radii.end());

    const FrequencyProfile prof = frequency_profile(an, x, radii, corr);
    std::vector<double> g_vals, g_radii, i_by_r(radii.size(), 0.0);
    for (std::size_t i = 0; i < prof.records.size(); ++i) {
      const FrequencyRecord& rec = prof.records[i];
      csv << num(rec.x[0]) << ',' << num(rec.x[1]) << ',' << num(rec.x[2]) << ',' << num(rec.r)
          << ',' << num(rec.D) << ',' << num(rec.H) << ',' << num(rec.P) << ',' << num(rec.F)
          << ',' << num(rec.I) << ',' << num(rec.G) << ',' << num(rec.Dphi) << ','
          << num(rec.Hphi) << ',' << num(rec.Pphi) << ',' << num(rec.Fphi) << ','
          << num(rec.Ephi) << ',' << num(rec.Iphi) << ',' << num(rec.Gphi) << ',' << num(rec.A)
          << ',' << num(rec.IphiA) << ',' << (rec.classical_valid ? 1 : 0) << ','
          << (rec.smoothed_valid ? 1 : 0) << ',' << (rec.h_zero ? 1 : 0) << ','
          << (rec.hphi_zero ? 1 : 0) << '\n';
      if (!rec.h_zero && rec.G > 0.0) {
        g_radii.push_back(rec.r);
        g_vals.push_back(rec.G);
      }
      i_by_r[i] = rec.I;
    }

    const double g_viol = g_vals.size() >= 2
                              ? monotonicity_violation(g_radii, g_vals, lam_g)
                              : 0.0;
    g_violation_max = std::max(g_violation_max, g_viol);

    // classical/smoothed comparability constant over radius-halving pairs
    for (std::size_t i = 0; i < radii.size(); ++i)
      for (std::size_t j = 0; j < i; ++j) {
        if (std::abs(radii[j] - 0.5 * radii[i]) > 1e-9 * radii[i]) continue;
        const FrequencyRecord& big = prof.records[i];
        const FrequencyRecord& half = prof.records[j];
        if (big.h_zero || big.hphi_zero || half.h_zero) continue;
        if (big.I > 0.0 && big.Iphi > 0.0 && half.I > 0.0) {
          c_hat = std::max({c_hat, big.Iphi / big.I, half.I / big.Iphi});
          c_hat_any = true;
        }
      }

    const double r_mid = radii[radii.size() / 2];
    json jc;
    jc["center"] = vec_to_json(x, g.dim);
    jc["radii"] = radii;
    jc["lambda_hat_I"] = prof.lambda_hat_I;
    jc["lambda_hat_Iphi"] = prof.lambda_hat_Iphi;
    jc["a_hat_phi"] = prof.a_hat_phi;
    jc["g_monotonicity_violation"] = g_viol;
    const IdentityReport idr = identity_suite(an, x, r_mid);
    json ji;
    ji["r"] = r_mid;
    ji["res_energy_flux"] = idr.res_energy_flux;
    ji["res_smoothed_flux"] = idr.res_smoothed_flux;
    ji["res_height_derivative"] = idr.res_height_derivative;
    ji["poincare_lhs"] = idr.poincare_lhs;
    ji["poincare_rhs"] = idr.poincare_rhs;
    ji["poincare_holds"] = idr.poincare_holds;
    jc["identity"] = ji;
    centers_report.push_back(jc);
  }

  write_text_file((fs::path(out_dir) / "frequency.csv").string(), csv.str());
  json rep;
  rep["field"] = strip_segf(field_path);
  rep["corr"] = corr;
  rep["lambda_max"] = u.lambda_max();
  rep["g_monotonicity_rate"] = lam_g;
  rep["g_violation_max"] = g_violation_max;
  if (c_hat_any) rep["c_hat"] = c_hat;
  else rep["c_hat"] = nullptr;
  rep["centers"] = centers_report;
  write_text_file((fs::path(out_dir) / "frequency_report.json").string(), rep.dump(2) + "\n");
  std::cout << "frequency: " << centers.size() << " centers -> " << out_dir
            << "/frequency.csv\n";
  return 0;
}

// --------------------------------------------------------------- detect ----

int cmd_detect(const std::string& field_path, int max_samples, bool interface_csv,
               const std::string& out_dir) {
  const SegregatedField u = load_field_checked(field_path);
  const Grid& g = *u.grid;
  ensure_out_dir(out_dir);
  if (max_samples < 1) throw AppError{1, "--max-samples must be positive"};

  const std::vector<InterfaceCell> cells = extract_interface(u);
  const FrequencyAnalyzer an(u);
  const double margin = 16.0 * g.h;

  // junction candidates, consolidated and snapped to the zero set. the 3h
  // clustering can leave several representatives straddling one vertex, so
  // groups within 6h are merged before snapping.
  std::vector<Vec> snapped;
  int excluded = 0;
  {
    const std::vector<Vec> cands = junction_candidates(u, 3.0 * g.h);
    std::vector<char> used(cands.size(), 0);
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (used[i]) continue;
      Vec acc{0.0, 0.0, 0.0};
      int cnt = 0;
      for (std::size_t j = i; j < cands.size(); ++j) {
        if (used[j] || dist(cands[j], cands[i]) > 6.0 * g.h) continue;
        used[j] = 1;
        acc = acc + cands[j];
        ++cnt;
      }
      const Vec merged = (1.0 / cnt) * acc;
      if (g.dist_to_boundary(merged) < margin) {
        ++excluded;
        continue;
      }
      snapped.push_back(snap_to_zero(u, merged, 3.0 * g.h));
    }
  }

  // field-level frequency calibration at the first junction (or wall cell)
  double lambda_hat_I = 0.0, lambda_hat_Iphi = 0.0;
  {
    Vec probe{0.0, 0.0, 0.0};
    bool have_probe = false;
    if (!snapped.empty()) {
      probe = snapped.front();
      have_probe = true;
    } else {
      for (const InterfaceCell& c : cells)
        if (g.dist_to_boundary(c.center) >= margin) {
          probe = c.center;
          have_probe = true;
          break;
        }
    }
    if (have_probe && u.lambda_max() > 0.0) {
      std::vector<double> radii;
      for (double r = 4.0 * g.h; r <= g.max_radius(probe) + 1e-12; r *= 2.0)
        radii.push_back(r);
      if (radii.size() >= 2) {
        const FrequencyProfile prof = frequency_profile(an, probe, radii);
        lambda_hat_I = prof.lambda_hat_I;
        lambda_hat_Iphi = prof.lambda_hat_Iphi;
      }
    }
  }

  json junctions = json::array();
  json walls = json::array();
  int checked = 0, mismatches = 0;
  double eps_hat = std::numeric_limits<double>::max();
  bool eps_any = false;

  for (const Vec& p : snapped) {
    const SingularSample s = classify_point(an, p, lambda_hat_I);
    (s.classification == PointClass::Junction ? junctions : walls)
        .push_back(sample_to_json(s, g.dim));
    if (!s.order_flagged) {
      ++checked;
      if (s.order_signal != s.label_signal) ++mismatches;
    }
  }

  // wall sweep: an even subsample of the interface cells away from the
  // boundary margin and from the junction candidates. the exclusion radius
  // keeps the 8h label ball of every retained cell clear of a third sector
  // even when walls meet at 120 degrees.
  std::vector<const InterfaceCell*> wall_cells;
  for (const InterfaceCell& c : cells) {
    if (g.dist_to_boundary(c.center) < margin) {
      ++excluded;
      continue;
    }
    bool near_junction = false;
    for (const Vec& p : snapped)
      if (dist(c.center, p) <= 14.0 * g.h) {
        near_junction = true;
        break;
      }
    if (!near_junction) wall_cells.push_back(&c);
  }
  const std::size_t stride =
      std::max<std::size_t>(1, (wall_cells.size() + max_samples - 1) / max_samples);
  for (std::size_t i = 0; i < wall_cells.size(); i += stride) {
    const SingularSample s = classify_point(an, wall_cells[i]->center, lambda_hat_I);
    (s.classification == PointClass::Junction ? junctions : walls)
        .push_back(sample_to_json(s, g.dim));
    if (!s.order_flagged) {
      ++checked;
      if (s.order_signal != s.label_signal) ++mismatches;
      const FrequencyRecord rec = an.smoothed_at(wall_cells[i]->center, 8.0 * g.h);
      if (!rec.hphi_zero) {
        eps_hat = std::min(eps_hat, rec.Iphi);
        eps_any = true;
      }
    }
  }

  json out;
  out["dim"] = g.dim;
  out["h"] = g.h;
  out["interface_cell_count"] = cells.size();
  out["junctions"] = junctions;
  out["walls"] = walls;
  out["excluded_boundary_margin"] = excluded;
  json agree;
  agree["checked"] = checked;
  agree["mismatches"] = mismatches;
  out["agreement"] = agree;
  json fitted;
  fitted["lambda_hat_I"] = lambda_hat_I;
  fitted["lambda_hat_Iphi"] = lambda_hat_Iphi;
  if (eps_any) fitted["eps_hat"] = eps_hat;
  else fitted["eps_hat"] = nullptr;
  out["fitted"] = fitted;
  write_text_file((fs::path(out_dir) / "detect.json").string(), out.dump(2) + "\n");

  if (interface_csv) {
    std::ostringstream csv;
    csv << "i,j,k,cx,cy,cz,labels,has_unlabeled\n";
    for (const InterfaceCell& c : cells) {
      csv << c.cell[0] << ',' << c.cell[1] << ',' << c.cell[2] << ',' << num(c.center[0]) << ','
          << num(c.center[1]) << ',' << num(c.center[2]) << ',';
      for (std::size_t li = 0; li < c.labels.size(); ++li)
        csv << (li ? "|" : "") << c.labels[li];
      csv << ',' << (c.has_unlabeled ? 1 : 0) << '\n';
    }
    write_text_file((fs::path(out_dir) / "interface.csv").string(), csv.str());
  }

  std::cout << "detect: " << junctions.size() << " junction(s), " << walls.size()
            << " wall sample(s), " << cells.size() << " interface cells\n";
  return 0;
}

// ------------------------------------------------------------- flatness ----

PointMeasure atoms_from_json(const json& j, const std::string& origin) {
  PointMeasure mu;
  if (j.contains("dim")) mu.dim = j["dim"].get<int>();
  if (!j.contains("atoms") || !j["atoms"].is_array())
    throw AppError{1, origin + ": expected an 'atoms' array"};
  for (const json& a : j["atoms"]) {
    Atom atom;
    if (a.is_array()) {
      // [x, y, (z,) w]; trailing weight optional
      const int n = static_cast<int>(a.size());
      if (n < mu.dim) throw AppError{1, origin + ": atom entry too short"};
      for (int d = 0; d < mu.dim; ++d) atom.p[d] = a[d].get<double>();
      atom.w = n > mu.dim ? a[mu.dim].get<double>() : 1.0;
    } else if (a.is_object()) {
      atom.p = vec_from_json(a.at("p"), mu.dim, "atoms[].p");
      atom.w = a.value("w", 1.0);
    } else {
      throw AppError{1, origin + ": atom entries must be arrays or objects"};
    }
    mu.atoms.push_back(atom);
  }
  return mu;
}

PointMeasure atoms_from_detect(const json& det) {
  PointMeasure mu;
  mu.dim = det.value("dim", 2);
  if (det.contains("junctions"))
    for (const json& s : det["junctions"])
      mu.atoms.push_back({vec_from_json(s.at("location"), mu.dim, "junctions[].location"), 1.0});
  return mu;
}

int cmd_flatness(const std::string& atoms_path, const std::string& detect_path,
                 const std::string& center_str, const std::string& radii_spec, int k,
                 const std::string& out_dir) {
  PointMeasure mu;
  if (!atoms_path.empty()) {
    mu = atoms_from_json(load_json_file(atoms_path, 3), atoms_path);
  } else if (!detect_path.empty()) {
    mu = atoms_from_detect(load_json_file(detect_path, 3));
  } else {
    throw AppError{1, "flatness needs --atoms or --from-detect"};
  }
  ensure_out_dir(out_dir);
  if (mu.atoms.empty()) {
    write_text_file((fs::path(out_dir) / "flatness.csv").string(),
                    "x0,x1,x2,r,k,mass,b0,b1,b2,xi1,xi2,xi3,D\n");
    std::cout << "flatness: no atoms, wrote empty table\n";
    return 0;
  }

  const Vec x = center_str.empty() ? Vec{0.0, 0.0, 0.0} : parse_point(center_str, mu.dim);
  const std::vector<double> radii = parse_radii_spec(radii_spec);
  if (k < 0) k = mu.dim - 2;

  std::ostringstream csv;
  csv << "x0,x1,x2,r,k,mass,b0,b1,b2,xi1,xi2,xi3,D\n";
  for (double r : radii) {
    const FlatnessRecord rec = [&] {
      try {
        return mean_flatness(mu, x, r, k);
      } catch (const std::invalid_argument& e) {
        throw AppError{1, std::string("flatness: ") + e.what()};
      }
    }();
    csv << num(rec.x[0]) << ',' << num(rec.x[1]) << ',' << num(rec.x[2]) << ',' << num(rec.r)
        << ',' << rec.k << ',' << num(rec.mass) << ',' << num(rec.barycenter[0]) << ','
        << num(rec.barycenter[1]) << ',' << num(rec.barycenter[2]) << ','
        << num(rec.eigenvalues[0]) << ',' << num(rec.eigenvalues[1]) << ','
        << num(rec.eigenvalues[2]) << ',' << num(rec.D) << '\n';
  }
  write_text_file((fs::path(out_dir) / "flatness.csv").string(), csv.str());
  std::cout << "flatness: " << radii.size() << " radii -> " << out_dir << "/flatness.csv\n";
  return 0;
}

// ---------------------------------------------------------------- cover ----

int cmd_cover(const std::string& field_path, const std::string& detect_path, double r, double s,
              double delta, double corr, const std::string& rho_spec,
              const std::string& out_dir) {
  const SegregatedField u = load_field_checked(field_path);
  const Grid& g = *u.grid;
  ensure_out_dir(out_dir);

  std::vector<Vec> pts;
  json det;
  if (!detect_path.empty()) {
    det = load_json_file(detect_path, 3);
    for (const Atom& a : atoms_from_detect(det).atoms) pts.push_back(a.p);
  }

  json out;
  out["field"] = strip_segf(field_path);
  out["r"] = r;
  out["s"] = s;
  out["delta"] = delta;
  out["corr"] = corr;

  const Covering cov = [&] {
    try {
      return inductive_cover(u, pts, r, s, delta, corr);
    } catch (const std::invalid_argument& e) {
      throw AppError{1, std::string("cover: ") + e.what()};
    }
  }();
  json jc;
  jc["ball_count"] = cov.balls.size();
  jc["U"] = cov.U_valid ? json(cov.U) : json(nullptr);
  jc["c_exponent"] = cov.c_exponent;
  jc["packing_sum"] = cov.packing_sum;
  jc["vitali"] = cov.vitali;
  jc["covers_input"] = cov.covers_input;
  jc["budget_exceeded"] = cov.budget_exceeded;
  jc["dichotomy_degenerate"] = cov.dichotomy_degenerate;
  jc["generations"] = cov.generations;
  json balls = json::array();
  for (const CoverBall& b : cov.balls) {
    json jb;
    jb["center"] = vec_to_json(b.center, g.dim);
    jb["radius"] = b.radius;
    jb["terminal_scale"] = b.terminal_scale;
    jb["frequency_dropped"] = b.frequency_dropped;
    jb["generation"] = b.generation;
    jb["sup_freq"] = b.sup_valid ? json(b.sup_freq) : json(nullptr);
    balls.push_back(jb);
  }
  jc["balls"] = balls;
  out["covering"] = jc;

  // tube volume curves: junction set and the full interface
  std::vector<double> rhos;
  if (!rho_spec.empty()) {
    rhos = parse_radii_spec(rho_spec);
  } else {
    for (double rho = 2.0 * g.h; rho <= 0.1 + 1e-12; rho *= std::sqrt(2.0)) rhos.push_back(rho);
  }
  std::ostringstream csv;
  csv << "set,rho,volume\n";
  json tubes;
  auto run_tube = [&](const std::string& tag, const std::vector<Vec>& S) -> json {
    if (S.empty()) return json("empty set");
    try {
      const MinkowskiCurve curve = tube_volume_curve(S, g, rhos);
      for (std::size_t i = 0; i < curve.rhos.size(); ++i)
        csv << tag << ',' << num(curve.rhos[i]) << ',' << num(curve.volumes[i]) << '\n';
      json jt;
      jt["points"] = S.size();
      jt["fitted"] = curve.fitted;
      if (curve.fitted) {
        jt["slope"] = curve.slope;
        jt["confidence"] = curve.confidence;
      }
      return jt;
    } catch (const std::invalid_argument& e) {
      return json(std::string("error: ") + e.what());
    }
  };
  tubes["junction"] = run_tube("junction", pts);
  std::vector<Vec> interface_pts;
  for (const InterfaceCell& c : extract_interface(u)) interface_pts.push_back(c.center);
  tubes["interface"] = run_tube("interface", interface_pts);
  out["tubes"] = tubes;

  write_text_file((fs::path(out_dir) / "minkowski.csv").string(), csv.str());
  write_text_file((fs::path(out_dir) / "cover.json").string(), out.dump(2) + "\n");
  std::cout << "cover: " << cov.balls.size() << " ball(s), packing sum "
            << num(cov.packing_sum) << "\n";
  return 0;
}

// --------------------------------------------------------------- report ----

int cmd_report(const std::string& dir, const std::string& out_dir) {
  const std::string d = dir.empty() ? out_dir : dir;
  const json det = load_json_file((fs::path(d) / "detect.json").string(), 3);
  const json freq = load_json_file((fs::path(d) / "frequency_report.json").string(), 3);
  json cover, solve;
  const std::string cover_path = (fs::path(d) / "cover.json").string();
  if (fs::exists(cover_path)) cover = load_json_file(cover_path, 3);
  for (const auto& entry : fs::directory_iterator(d)) {
    const std::string fn = entry.path().filename().string();
    if (fn.size() > 18 && fn.compare(fn.size() - 18, 18, "_solve_report.json") == 0) {
      solve = load_json_file(entry.path().string(), 3);
      break;
    }
  }

  json rep;
  json junctions = json::array();
  if (det.contains("junctions"))
    for (const json& s : det["junctions"]) {
      json j;
      j["location"] = s.value("location", json::array());
      j["order"] = s.contains("order") ? s["order"] : json(nullptr);
      j["labels"] = s.value("labels", json::array());
      junctions.push_back(j);
    }
  rep["junctions"] = junctions;

  json wall_summary;
  {
    int count = 0;
    double omin = std::numeric_limits<double>::max(), omax = -omin;
    if (det.contains("walls"))
      for (const json& s : det["walls"]) {
        ++count;
        if (s.contains("order") && s["order"].is_number()) {
          omin = std::min(omin, s["order"].get<double>());
          omax = std::max(omax, s["order"].get<double>());
        }
      }
    wall_summary["count"] = count;
    wall_summary["order_min"] = count && omin < 1e300 ? json(omin) : json(nullptr);
    wall_summary["order_max"] = count && omax > -1e300 ? json(omax) : json(nullptr);
  }
  rep["wall_summary"] = wall_summary;
  rep["agreement"] = det.value("agreement", json::object());

  if (!cover.is_null() && cover.contains("tubes")) {
    json mink;
    const json& tubes = cover["tubes"];
    if (tubes.contains("junction") && tubes["junction"].is_object() &&
        tubes["junction"].value("fitted", false)) {
      mink["junction_slope"] = tubes["junction"]["slope"];
      mink["junction_confidence"] = tubes["junction"]["confidence"];
    } else {
      mink["junction_slope"] = "empty set";
    }
    if (tubes.contains("interface") && tubes["interface"].is_object() &&
        tubes["interface"].value("fitted", false))
      mink["interface_slope"] = tubes["interface"]["slope"];
    rep["minkowski"] = mink;
    rep["covering"] = json::object();
    if (cover.contains("covering")) {
      for (const char* key :
           {"ball_count", "packing_sum", "vitali", "covers_input", "generations"})
        if (cover["covering"].contains(key)) rep["covering"][key] = cover["covering"][key];
    }
  } else {
    rep["minkowski"] = "empty set";
  }

  json mono;
  mono["g_violation_max"] = freq.value("g_violation_max", 0.0);
  rep["monotonicity"] = mono;

  json idmax;
  double e1 = 0.0, e2 = 0.0, e3 = 0.0;
  bool poincare_all = true;
  if (freq.contains("centers"))
    for (const json& c : freq["centers"])
      if (c.contains("identity")) {
        const json& i = c["identity"];
        e1 = std::max(e1, i.value("res_energy_flux", 0.0));
        e2 = std::max(e2, i.value("res_smoothed_flux", 0.0));
        e3 = std::max(e3, i.value("res_height_derivative", 0.0));
        poincare_all = poincare_all && i.value("poincare_holds", true);
      }
  idmax["energy_flux"] = e1;
  idmax["smoothed_flux"] = e2;
  idmax["height_derivative"] = e3;
  idmax["poincare_holds"] = poincare_all;
  rep["identity_residual_max"] = idmax;

  json fitted = det.value("fitted", json::object());
  fitted["c_hat"] = freq.contains("c_hat") ? freq["c_hat"] : json(nullptr);
  rep["fitted"] = fitted;

  json jsolve;
  jsolve["present"] = !solve.is_null();
  if (!solve.is_null()) {
    jsolve["converged"] = solve.value("converged", false);
    jsolve["iterations"] = solve.value("iterations", 0);
    jsolve["objective"] = solve.value("objective", 0.0);
    jsolve["eigenvalues"] = solve.value("eigenvalues", json::array());
    bool mono_hist = true;
    if (solve.contains("objective_history")) {
      const auto& h = solve["objective_history"];
      for (std::size_t i = 1; i < h.size(); ++i)
        if (h[i].get<double>() > h[i - 1].get<double>() + 1e-12) mono_hist = false;
    }
    jsolve["monotone_history"] = mono_hist;
  }
  rep["solver"] = jsolve;

  ensure_out_dir(out_dir);
  write_text_file((fs::path(out_dir) / "report.json").string(), rep.dump(2) + "\n");

  std::ostringstream txt;
  txt << "summary\n=======\n";
  txt << "junctions: " << junctions.size() << "\n";
  for (const json& j : junctions) {
    txt << "  at (";
    for (std::size_t i = 0; i < j["location"].size(); ++i)
      txt << (i ? ", " : "") << num(j["location"][i].get<double>());
    txt << ") order "
        << (j["order"].is_number() ? num(j["order"].get<double>()) : std::string("n/a")) << "\n";
  }
  txt << "wall samples: " << wall_summary["count"].get<int>();
  if (wall_summary["order_min"].is_number())
    txt << " (orders " << num(wall_summary["order_min"].get<double>()) << " .. "
        << num(wall_summary["order_max"].get<double>()) << ")";
  txt << "\n";
  if (rep["minkowski"].is_object() && rep["minkowski"].contains("junction_slope") &&
      rep["minkowski"]["junction_slope"].is_number()) {
    txt << "junction tube slope: " << num(rep["minkowski"]["junction_slope"].get<double>())
        << " +- " << num(rep["minkowski"]["junction_confidence"].get<double>()) << "\n";
  } else {
    txt << "junction tube: empty set\n";
  }
  if (rep["minkowski"].is_object() && rep["minkowski"].contains("interface_slope") &&
      rep["minkowski"]["interface_slope"].is_number())
    txt << "interface tube slope: " << num(rep["minkowski"]["interface_slope"].get<double>())
        << "\n";
  txt << "G monotonicity violation max: " << num(mono["g_violation_max"].get<double>()) << "\n";
  txt << "identity residual max: energy " << num(e1) << ", smoothed " << num(e2) << ", height "
      << num(e3) << "\n";
  if (jsolve["present"].get<bool>())
    txt << "solver: objective " << num(jsolve["objective"].get<double>())
        << (jsolve["converged"].get<bool>() ? " (converged)" : " (max iterations)")
        << ", history " << (jsolve["monotone_history"].get<bool>() ? "monotone" : "NOT monotone")
        << "\n";
  write_text_file((fs::path(out_dir) / "report.txt").string(), txt.str());

  std::cout << "report: wrote " << out_dir << "/report.json and report.txt\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segregated eigenvalue partitions: solver and singular-set analysis"};
  app.require_subcommand(1);

  std::string out_dir = ".";
  app.add_option("--out", out_dir, "output directory (default: current)");
  long long seed_flag = 0;
  auto* seed_opt = app.add_option("--seed", seed_flag, "RNG seed override");
  int threads = 1;
  app.add_option("--threads", threads, "worker cap (informational; stages run serially)");

  auto* c_solve = app.add_subcommand("solve", "minimize the eigenvalue sum of a partition");
  std::string solve_config;
  c_solve->add_option("--config", solve_config, "solver config JSON")->required();

  auto* c_oracle = app.add_subcommand("oracle", "write a homogeneous reference field");
  // frees the short -h so the spacing option below can claim the name
  c_oracle->set_help_flag("--help", "print help");
  int om = 3, odim = 2;
  double orot = 0.0, oh = 1.0 / 256.0, ohw = 1.0;
  std::string oname;
  c_oracle->add_option("--m", om, "sector count (>= 2)");
  c_oracle->add_option("--dim", odim, "dimension (2 or 3)");
  c_oracle->add_option("--rotation", orot, "rotation of the sector fan");
  c_oracle->add_option("--h", oh, "grid spacing");
  c_oracle->add_option("--half-width", ohw, "half width of the sampling box");
  c_oracle->add_option("--name", oname, "artifact base name");

  auto* c_freq = app.add_subcommand("frequency", "frequency records over centers and radii");
  std::string f_field, f_points, f_radii;
  std::vector<std::string> f_centers;
  double f_corr = 0.0;
  c_freq->add_option("--field", f_field, "field dump (.segf base)")->required();
  c_freq->add_option("--center", f_centers, "probe center 'x,y[,z]' (repeatable)");
  c_freq->add_option("--points", f_points, "JSON array of probe centers");
  c_freq->add_option("--radii", f_radii, "'rmin:rmax:count' geometric or comma list");
  c_freq->add_option("--corr", f_corr, "additive correction constant A");

  auto* c_detect = app.add_subcommand("detect", "interface extraction and classification");
  std::string d_field;
  int d_max_samples = 200;
  bool d_interface_csv = false;
  c_detect->add_option("--field", d_field, "field dump (.segf base)")->required();
  c_detect->add_option("--max-samples", d_max_samples, "cap on classified wall samples");
  c_detect->add_flag("--interface-csv", d_interface_csv, "also write interface.csv");

  auto* c_flat = app.add_subcommand("flatness", "mean flatness of a weighted point set");
  std::string fl_atoms, fl_detect, fl_center, fl_radii = "0.25:2:6";
  int fl_k = -1;
  c_flat->add_option("--atoms", fl_atoms, "atoms JSON ({dim, atoms:[[x,y,(z,)w],...]})");
  c_flat->add_option("--from-detect", fl_detect, "take junction samples from detect.json");
  c_flat->add_option("--center", fl_center, "ball center 'x,y[,z]' (default origin)");
  c_flat->add_option("--radii", fl_radii, "'rmin:rmax:count' geometric or comma list");
  c_flat->add_option("--k", fl_k, "plane dimension (default dim-2)");

  auto* c_cover = app.add_subcommand("cover", "inductive covering and tube curves");
  std::string cv_field, cv_points, cv_rho;
  double cv_r = 0.25, cv_s = 0.01, cv_delta = 0.1, cv_corr = 0.0;
  c_cover->add_option("--field", cv_field, "field dump (.segf base)")->required();
  c_cover->add_option("--points", cv_points, "detect.json with junction samples");
  c_cover->add_option("--radius", cv_r, "starting radius r");
  c_cover->add_option("--terminal-scale", cv_s, "stopping radius s");
  c_cover->add_option("--delta", cv_delta, "frequency drop delta");
  c_cover->add_option("--corr", cv_corr, "additive correction constant A");
  c_cover->add_option("--rho", cv_rho, "tube radii 'rmin:rmax:count' or comma list");

  auto* c_report = app.add_subcommand("report", "aggregate analysis artifacts");
  std::string r_dir;
  c_report->add_option("--dir", r_dir, "artifact directory (default: --out)");

  // global flags (--out/--seed/--threads) may trail the subcommand
  for (CLI::App* s : app.get_subcommands([](const CLI::App*) { return true; }))
    s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::optional<std::uint64_t> seed_override;
  if (seed_opt->count() > 0) seed_override = static_cast<std::uint64_t>(seed_flag);

  try {
    if (c_solve->parsed()) return cmd_solve(solve_config, seed_override, out_dir);
    if (c_oracle->parsed()) return cmd_oracle(om, odim, orot, oh, ohw, oname, out_dir);
    if (c_freq->parsed())
      return cmd_frequency(f_field, f_centers, f_points, f_radii, f_corr, out_dir);
    if (c_detect->parsed()) return cmd_detect(d_field, d_max_samples, d_interface_csv, out_dir);
    if (c_flat->parsed())
      return cmd_flatness(fl_atoms, fl_detect, fl_center, fl_radii, fl_k, out_dir);
    if (c_cover->parsed())
      return cmd_cover(cv_field, cv_points, cv_r, cv_s, cv_delta, cv_corr, cv_rho, out_dir);
    if (c_report->parsed()) return cmd_report(r_dir, out_dir);
  } catch (const AppError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
