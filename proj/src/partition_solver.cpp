#include "partlab/partition_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

#include "partlab/quadrature.hpp"

namespace partlab {

namespace {

double uniform01(std::mt19937_64& rng) {
  return (rng() >> 11) * 0x1.0p-53;
}

std::vector<std::size_t> interior_nodes(const Grid& g) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.is_interior(i)) idx.push_back(i);
  return idx;
}

// dot product over all nodes (components vanish off the interior)
double dot_nodes(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Conjugate gradient for (Id + tau * A) v = b on the active nodes (interior
// nodes when mask is null, else the masked subset: off-mask values are pinned
// to zero, yielding the Dirichlet operator of the masked region). Warm-started
// from v. A is the negative discrete Laplacian.
int cg_shifted_solve(const Grid& g, double tau, const std::vector<double>& b,
                     std::vector<double>& v, double rel_tol, int max_iters,
                     const std::vector<char>* mask = nullptr) {
  const std::size_t n = g.size();
  const auto on = [&](std::size_t i) { return mask ? (*mask)[i] != 0 : g.is_interior(i); };
  std::vector<double> av(n, 0.0), r(n, 0.0), p(n, 0.0), ap(n, 0.0);
  if (mask)
    for (std::size_t i = 0; i < n; ++i)
      if (!(*mask)[i]) v[i] = 0.0;

  apply_neg_laplacian(g, v, av);
  for (std::size_t i = 0; i < n; ++i)
    r[i] = on(i) ? b[i] - (v[i] + tau * av[i]) : 0.0;
  double rr = dot_nodes(r, r);
  const double b2 = dot_nodes(b, b);
  const double stop = rel_tol * rel_tol * std::max(b2, 1e-300);
  if (rr <= stop) return 0;
  p = r;

  int it = 0;
  for (; it < max_iters; ++it) {
    apply_neg_laplacian(g, p, ap);
    for (std::size_t i = 0; i < n; ++i)
      ap[i] = on(i) ? p[i] + tau * ap[i] : 0.0;
    const double pap = dot_nodes(p, ap);
    if (pap <= 0.0) break;
    const double alpha = rr / pap;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_new = dot_nodes(r, r);
    if (rr_new <= stop) { ++it; break; }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  return it;
}

void project_and_zero(const Grid& g, std::vector<std::vector<double>>& comps) {
  const int n = static_cast<int>(comps.size());
  std::vector<double> tmp(n);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (!g.is_interior(idx)) {
      for (int k = 0; k < n; ++k) comps[k][idx] = 0.0;
      continue;
    }
    for (int k = 0; k < n; ++k) tmp[k] = comps[k][idx];
    project_to_sigma_inplace(tmp);
    for (int k = 0; k < n; ++k) comps[k][idx] = tmp[k];
  }
}

// L2-normalizes every component; empty components are reseeded on the
// interior node farthest from the occupied supports so they can recover.
void renormalize(const Grid& g, std::vector<std::vector<double>>& comps) {
  const double w = std::pow(g.h, g.dim);
  for (auto& c : comps) {
    double nrm = std::sqrt(dot_nodes(c, c) * w);
    if (nrm <= 1e-14) {
      std::size_t best = 0;
      double best_val = -1.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.is_interior(i)) continue;
        double occupied = 0.0;
        for (const auto& other : comps) occupied = std::max(occupied, std::abs(other[i]));
        const double score = -occupied;
        if (best_val < score) { best_val = score; best = i; }
      }
      std::fill(c.begin(), c.end(), 0.0);
      c[best] = 1.0;
      nrm = std::sqrt(w);
    }
    for (double& v : c) v /= nrm;
  }
}

double objective_of(const Grid& g, const std::vector<std::vector<double>>& comps,
                    std::vector<double>& lambda) {
  double obj = 0.0;
  lambda.resize(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    lambda[k] = rayleigh_quotient(g, comps[k]);
    obj += lambda[k];
  }
  return obj;
}

void seed_initial(const Grid& g, int ncomp, SeedLayout layout, std::uint64_t seed,
                  std::vector<std::vector<double>>& comps) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
  comps.assign(ncomp, std::vector<double>(g.size(), 0.0));

  std::vector<Vec> seeds;
  const Vec lo = g.domain.lo, hi = g.domain.hi;
  while (static_cast<int>(seeds.size()) < ncomp) {
    Vec p{0.0, 0.0, 0.0};
    for (int d = 0; d < g.dim; ++d) p[d] = lo[d] + (hi[d] - lo[d]) * uniform01(rng);
    if (g.dist_to_boundary(p) > 2.0 * g.h) seeds.push_back(p);
  }

  const double r0 = 0.75 * dist(g.domain.hi, g.domain.lo) / std::sqrt(static_cast<double>(ncomp));
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (!g.is_interior(idx)) continue;
    const int k2 = idx % g.shape[2];
    const int j = (idx / g.shape[2]) % g.shape[1];
    const int i = idx / (static_cast<std::size_t>(g.shape[1]) * g.shape[2]);
    const Vec p = g.node_pos(i, j, k2);
    int nearest = 0;
    double best = 1e300;
    for (int k = 0; k < ncomp; ++k) {
      const double d = dist(p, seeds[k]);
      if (d < best) { best = d; nearest = k; }
    }
    if (layout == SeedLayout::Voronoi) {
      comps[nearest][idx] = std::max(0.0, 1.0 - best / r0) + 1e-6;
    } else {
      const int pick = static_cast<int>(uniform01(rng) * ncomp) % ncomp;
      comps[pick][idx] = 0.1 + 0.9 * uniform01(rng);
    }
  }
}

void prolong(const Grid& coarse, const std::vector<std::vector<double>>& cc, const Grid& fine,
             std::vector<std::vector<double>>& fc) {
  fc.assign(cc.size(), std::vector<double>(fine.size(), 0.0));
  for (int i = 0; i < fine.shape[0]; ++i)
    for (int j = 0; j < fine.shape[1]; ++j)
      for (int k = 0; k < fine.shape[2]; ++k) {
        const std::size_t idx = fine.index(i, j, k);
        if (!fine.is_interior(idx)) continue;
        const Vec p = fine.node_pos(i, j, k);
        for (std::size_t c = 0; c < cc.size(); ++c)
          fc[c][idx] = std::max(0.0, interp_linear(coarse, cc[c], p));
      }
}

// Runs the damped implicit iteration on one grid level. Returns the number of
// accepted steps; `history` collects the objective after each accepted step.
// Two descent maps alternate as needed: the segregation map lets the smoothed
// components compete for territory (moves walls), and when that map cannot
// descend a support-restricted smoothing step polishes each component toward
// the ground state of its frozen support (inverse iteration, descent by
// construction).
int run_level(const Grid& g, const SolveConfig& cfg, std::vector<std::vector<double>>& comps,
              std::vector<double>& lambda, int max_iters, std::vector<double>& history,
              bool& converged) {
  project_and_zero(g, comps);
  renormalize(g, comps);
  double obj = objective_of(g, comps, lambda);
  history.push_back(obj);

  const int n = static_cast<int>(comps.size());
  std::vector<std::vector<double>> smooth(n), target(n);
  std::vector<char> mask(g.size(), 0);
  int accepted = 0;
  int flat_steps = 0;
  converged = false;

  auto try_accept = [&](std::vector<std::vector<double>>& trial) -> bool {
    renormalize(g, trial);
    std::vector<double> trial_lambda;
    const double trial_obj = objective_of(g, trial, trial_lambda);
    if (trial_obj > obj) return false;
    comps.swap(trial);
    lambda.swap(trial_lambda);
    if (std::abs(obj - trial_obj) <= cfg.tolerance * std::max(1.0, std::abs(obj)))
      ++flat_steps;
    else
      flat_steps = 0;
    obj = trial_obj;
    history.push_back(obj);
    ++accepted;
    return true;
  };

  for (int iter = 0; iter < max_iters; ++iter) {
    const double lam_hat = std::max(1e-8, *std::max_element(lambda.begin(), lambda.end()));
    const double tau = cfg.tau_factor / lam_hat;

    for (int k = 0; k < n; ++k) {
      smooth[k] = comps[k];
      cg_shifted_solve(g, tau, comps[k], smooth[k], cfg.cg_tolerance, cfg.cg_max_iters);
    }
    // segregation map: each component keeps the excess of its smoothed field
    // over its strongest competitor, so territory flows toward the component
    // whose smoothed amplitude survives best (equalizing the eigenvalues).
    // Competing against the max rather than the sum matters where three or
    // more components meet: the smoothed tails of two rivals would otherwise
    // add up and carve a permanent hole around the junction (the smoothed
    // fields are strictly positive, so under the max exactly one component
    // claims each node and abandoned nodes stay reclaimable).
    for (int k = 0; k < n; ++k) {
      target[k].assign(g.size(), 0.0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.is_interior(i)) continue;
        double others = 0.0;
        for (int j = 0; j < n; ++j)
          if (j != k) others = std::max(others, smooth[j][i]);
        target[k][i] = std::max(0.0, smooth[k][i] - others);
      }
    }

    const bool project_now = cfg.projection_cadence <= 1 ||
                             (iter % cfg.projection_cadence) == cfg.projection_cadence - 1;
    double beta = cfg.damping;
    bool stepped = false;
    for (int bt = 0; bt < 10 && !stepped; ++bt) {
      std::vector<std::vector<double>> trial(n);
      for (int k = 0; k < n; ++k) {
        trial[k].resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
          trial[k][i] = (1.0 - beta) * comps[k][i] + beta * target[k][i];
      }
      if (project_now) project_and_zero(g, trial);
      stepped = try_accept(trial);
      beta *= 0.5;
    }

    if (!stepped) {
      // walls are stuck: polish inside the frozen supports
      std::vector<std::vector<double>> trial(n);
      for (int k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < g.size(); ++i)
          mask[i] = (g.is_interior(i) && comps[k][i] > 0.0) ? 1 : 0;
        trial[k] = comps[k];
        cg_shifted_solve(g, tau, comps[k], trial[k], cfg.cg_tolerance, cfg.cg_max_iters, &mask);
      }
      stepped = try_accept(trial);
    }

    if (!stepped) ++flat_steps;
    if (flat_steps >= 10) {
      converged = true;
      break;
    }
  }
  return accepted;
}

std::shared_ptr<const Grid> coarsen_grid(const Grid& g, int factor) {
  const double H = g.h * factor;
  switch (g.domain.kind) {
    case DomainKind::Box:
      return std::make_shared<Grid>(make_box_grid(g.dim, g.domain.lo, g.domain.hi, H, true));
    case DomainKind::FreeBox:
      return std::make_shared<Grid>(make_free_grid(g.dim, g.domain.lo, g.domain.hi, H));
    case DomainKind::Disk:
      return std::make_shared<Grid>(make_disk_grid(g.dim, g.domain.center, g.domain.r_out, H));
    case DomainKind::Annulus:
      return std::make_shared<Grid>(
          make_annulus_grid(g.dim, g.domain.center, g.domain.r_in, g.domain.r_out, H));
  }
  throw std::logic_error("unknown domain kind");
}

}  // namespace

void apply_neg_laplacian(const Grid& g, const std::vector<double>& in, std::vector<double>& out) {
  out.assign(g.size(), 0.0);
  const double ih2 = 1.0 / (g.h * g.h);
  const std::ptrdiff_t stride[3] = {
      static_cast<std::ptrdiff_t>(g.shape[1]) * g.shape[2], g.shape[2], 1};
  const int nn = 2 * g.dim;
  for (int i = 0; i < g.shape[0]; ++i)
    for (int j = 0; j < g.shape[1]; ++j)
      for (int k = 0; k < g.shape[2]; ++k) {
        const std::size_t idx = g.index(i, j, k);
        if (!g.is_interior(idx)) continue;
        double acc = nn * in[idx];
        const int ii[3] = {i, j, k};
        for (int d = 0; d < g.dim; ++d) {
          if (ii[d] > 0 && g.is_interior(idx - stride[d])) acc -= in[idx - stride[d]];
          if (ii[d] < g.shape[d] - 1 && g.is_interior(idx + stride[d])) acc -= in[idx + stride[d]];
        }
        out[idx] = acc * ih2;
      }
}

double rayleigh_quotient(const Grid& g, const std::vector<double>& comp) {
  std::vector<double> a;
  apply_neg_laplacian(g, comp, a);
  const double num = dot_nodes(a, comp);
  const double den = dot_nodes(comp, comp);
  if (den <= 0.0) return 0.0;
  return num / den;
}

std::pair<SegregatedField, SolveReport> solve_partition(const SolveConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!cfg.grid) throw std::invalid_argument("solve config: grid missing");
  if (cfg.ncomp < 1) throw std::invalid_argument("solve config: component count must be >= 1");
  if (!(cfg.damping > 0.0 && cfg.damping <= 1.0))
    throw std::invalid_argument("solve config: damping must lie in (0, 1]");
  if (cfg.tolerance <= 0.0) throw std::invalid_argument("solve config: tolerance must be positive");
  if (cfg.max_iters < 1) throw std::invalid_argument("solve config: max_iters must be >= 1");

  const Grid& g = *cfg.grid;
  const std::vector<std::size_t> interior = interior_nodes(g);
  if (static_cast<std::size_t>(cfg.ncomp) > interior.size())
    throw std::invalid_argument("solve config: more components than interior nodes");

  // build the level hierarchy (coarsest first)
  std::vector<std::shared_ptr<const Grid>> levels{cfg.grid};
  if (cfg.continuation) {
    int factor = 2;
    while (true) {
      const int min_nodes = *std::min_element(g.shape.begin(), g.shape.begin() + g.dim);
      if ((min_nodes - 1) % factor != 0) break;
      if ((min_nodes - 1) / factor < 16) break;
      try {
        auto cg = coarsen_grid(g, factor);
        std::size_t cint = 0;
        for (std::size_t i = 0; i < cg->size(); ++i)
          if (cg->is_interior(i)) ++cint;
        if (cint < static_cast<std::size_t>(cfg.ncomp) * 16) break;
        levels.push_back(cg);
      } catch (const std::exception&) {
        break;
      }
      factor *= 2;
    }
    std::reverse(levels.begin(), levels.end());
  }

  SolveReport rep;
  rep.levels = static_cast<int>(levels.size());

  std::vector<std::vector<double>> comps;
  seed_initial(*levels.front(), cfg.ncomp, cfg.seed_layout, cfg.seed, comps);

  std::vector<double> lambda(cfg.ncomp, 0.0);
  bool converged = false;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const Grid& lg = *levels[li];
    if (li > 0) {
      std::vector<std::vector<double>> fine;
      prolong(*levels[li - 1], comps, lg, fine);
      comps.swap(fine);
    }
    const bool finest = li + 1 == levels.size();
    const int iters = finest ? cfg.max_iters : std::max(cfg.max_iters, 200);
    std::vector<double> history;
    const int accepted = run_level(lg, cfg, comps, lambda, iters, history, converged);
    rep.level_iterations.push_back(accepted);
    if (finest) {
      rep.iterations = accepted;
      rep.objective_history = std::move(history);
    }
  }

  SegregatedField u;
  u.grid = cfg.grid;
  u.components = std::move(comps);
  u.eigenvalues = lambda;
  u.normalized = true;

  rep.converged = converged;
  rep.eigenvalues = lambda;
  rep.residuals = pde_residual(u);
  rep.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(u), rep};
}

double objective_energy(const SegregatedField& u) {
  if (!u.normalized) throw std::invalid_argument("objective requires a normalized field");
  const Grid& g = *u.grid;
  double total = 0.0;
  for (int k = 0; k < u.ncomp(); ++k) {
    const std::vector<Vec> gr = grad_centered(g, u.components[k]);
    // cell quadrature: average the squared gradient over cell corners
    double acc = 0.0;
    for (int i = 0; i + 1 < g.shape[0]; ++i)
      for (int j = 0; j + 1 < g.shape[1]; ++j)
        for (int k2 = 0; k2 + 1 < std::max(g.shape[2], 2); ++k2) {
          double cell = 0.0;
          int corners = 0;
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
              for (int c = 0; c < (g.dim == 3 ? 2 : 1); ++c) {
                const std::size_t idx = g.index(i + a, j + b, g.dim == 3 ? k2 + c : 0);
                cell += norm2(gr[idx]);
                ++corners;
              }
          acc += cell / corners;
        }
    total += acc * std::pow(g.h, g.dim);
  }
  return total;
}

std::vector<double> pde_residual(const SegregatedField& u) {
  const Grid& g = *u.grid;
  const std::ptrdiff_t stride[3] = {
      static_cast<std::ptrdiff_t>(g.shape[1]) * g.shape[2], g.shape[2], 1};
  std::vector<double> out(u.ncomp(), 0.0);

  for (int k = 0; k < u.ncomp(); ++k) {
    const auto& c = u.components[k];
    double peak = 0.0;
    for (double v : c) peak = std::max(peak, v);
    const double thresh = 1e-8 * peak;
    std::vector<double> lap;
    apply_neg_laplacian(g, c, lap);

    double num = 0.0, den = 0.0, mass = 0.0;
    for (int i = 1; i + 1 < g.shape[0]; ++i)
      for (int j = 1; j + 1 < g.shape[1]; ++j)
        for (int k2 = (g.dim == 3 ? 1 : 0); k2 < (g.dim == 3 ? g.shape[2] - 1 : 1); ++k2) {
          const std::size_t idx = g.index(i, j, k2);
          if (!g.is_interior(idx) || c[idx] <= thresh) continue;
          // skip interface-adjacent nodes: a face neighbor supported by
          // another component or below threshold
          bool edge = false;
          for (int d = 0; d < g.dim && !edge; ++d) {
            for (int s = -1; s <= 1 && !edge; s += 2) {
              const std::size_t nb = idx + s * stride[d];
              if (c[nb] <= thresh) edge = true;
            }
          }
          if (edge) continue;
          const double r = lap[idx] - u.eigenvalues[k] * c[idx];
          num += r * r;
          den += (u.eigenvalues[k] * c[idx]) * (u.eigenvalues[k] * c[idx]);
          mass += c[idx] * c[idx];
        }
    if (den > 0.0) {
      out[k] = std::sqrt(num / den);
    } else if (mass > 0.0) {
      // eigenvalue-free fields: compare against the component scale
      out[k] = std::sqrt(num / mass);
    }
  }
  return out;
}

ExtremalityReport extremality_check(const SegregatedField& u, double tol) {
  const Grid& g = *u.grid;
  ExtremalityReport rep;
  const int n = u.ncomp();

  std::vector<std::vector<double>> lap(n);
  for (int k = 0; k < n; ++k) apply_neg_laplacian(g, u.components[k], lap[k]);

  // nodes on the bounding-box rim lack a full stencil (free grids carry no
  // Dirichlet layer there), so the sweep stays one node inside
  const int kk_max = g.dim == 3 ? 1 : 0;
  for (int i = 1; i + 1 < g.shape[0]; ++i)
    for (int j = 1; j + 1 < g.shape[1]; ++j)
      for (int kk = (kk_max ? 1 : 0); kk < (kk_max ? g.shape[2] - 1 : 1); ++kk) {
        const std::size_t idx = g.index(i, j, kk);
        if (!g.is_interior(idx)) continue;
        ++rep.nodes_checked;

        // The subsolution inequality is testable at every node: the kink of a
        // single nonnegative component only pushes its second difference down.
        // The supersolution side concentrates a +/- spike pair across the
        // interface that cancels weakly but not node by node, so stencils
        // touching two distinct supports are skipped there (same exclusion as
        // the PDE residual).
        int seen_label = 0;
        bool mixed = false;
        auto note = [&](int ni, int nj, int nk) {
          if (!g.node_in_bounds(ni, nj, nk)) return;
          const int lab = u.label_at(g.index(ni, nj, nk));
          if (lab == 0) return;
          if (seen_label == 0) seen_label = lab;
          else if (seen_label != lab) mixed = true;
        };
        note(i, j, kk);
        note(i - 1, j, kk);
        note(i + 1, j, kk);
        note(i, j - 1, kk);
        note(i, j + 1, kk);
        if (kk_max) {
          note(i, j, kk - 1);
          note(i, j, kk + 1);
        }

        double lam_u_total = 0.0, lap_total = 0.0;
        for (int k = 0; k < n; ++k) {
          lam_u_total += u.eigenvalues[k] * u.components[k][idx];
          lap_total += lap[k][idx];
        }
        for (int k = 0; k < n; ++k) {
          const double lam_u = u.eigenvalues[k] * u.components[k][idx];
          const double sub_margin = lap[k][idx] - lam_u;  // should be <= tol
          if (sub_margin > tol) {
            ++rep.sub_violations;
            rep.sub_worst_margin = std::max(rep.sub_worst_margin, sub_margin);
          }
          if (mixed) continue;
          // hat component: u_k minus the sum of the others
          const double lap_hat = 2.0 * lap[k][idx] - lap_total;
          const double rhs = 2.0 * lam_u - lam_u_total;
          const double super_margin = lap_hat - rhs;  // should be >= -tol
          if (super_margin < -tol) {
            ++rep.super_violations;
            rep.super_worst_margin = std::min(rep.super_worst_margin, super_margin);
          }
        }
      }
  return rep;
}

}  // namespace partlab
