//! The gap between `inf_S ‖S B S⁻¹‖` and `max_U ρ(U B)`.
//!
//! The scaling side is minimized in log-coordinates `t_j = ln s_j` (with
//! `t_1 = 0`) on a log-sum-exp smoothing of the squared singular values whose
//! temperature is annealed to zero, followed by an exact polish when the top
//! singular value is simple. The phase side is a multi-start local ascent
//! seeded from a coarse angle grid.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use petgraph::graph::DiGraph;
use petgraph::unionfind::UnionFind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    max_modulus, op_norm, phase_raw, scale_raw, spectral_radius, svd, wrap_angle, ComplexMatrix,
    DiagonalScaling, PhaseVector,
};
use crate::optim::{bfgs, max_abs, BfgsOptions};

/// Tuning knobs shared by the scaling and phase searches.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapOptions {
    pub seed: u64,
    /// Number of scaling starts (the identity is always the first).
    pub scaling_starts: usize,
    /// Relative stationarity tolerance for the simple-top-singular-value case.
    pub grad_tol: f64,
    /// Divergence bound on `‖t‖_∞`.
    pub log_bound: f64,
    /// Relative width of the top singular cluster (on squared values).
    pub cluster_tol: f64,
    pub max_iter: usize,
    pub phase_restarts: usize,
    pub grid_points: usize,
    pub grid_cap: usize,
    pub fd_step: f64,
    pub tol_gap: f64,
    /// Edges of the sparsity graph need `|B_ij| > zero_tol · max|B|`.
    pub zero_tol: f64,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            scaling_starts: 3,
            grad_tol: 1e-9,
            log_bound: 40.0,
            cluster_tol: 1e-6,
            max_iter: 400,
            phase_restarts: 64,
            grid_points: 12,
            grid_cap: 20_736,
            fd_step: 1e-6,
            tol_gap: 1e-8,
            zero_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaledNorm {
    pub value: f64,
    pub scaling: DiagonalScaling,
    pub multiplicity: usize,
    pub converged: bool,
    /// False when the iterates ran into the log bound.
    pub attained: bool,
    /// `max_j | |(B_S r)_j|² − σ²|r_j|² | / σ²` at the reported point.
    pub stationarity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseMax {
    pub value: f64,
    pub phases: PhaseVector,
    pub converged: bool,
    pub restarts_used: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    pub inf_norm: f64,
    pub argmin_s: DiagonalScaling,
    pub max_rho: f64,
    pub argmax_u: PhaseVector,
    pub gap: f64,
    pub relative_gap: f64,
    pub top_multiplicity: usize,
    pub converged_s: bool,
    pub converged_u: bool,
    pub infimum_attained: bool,
    pub restarts_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStructure {
    /// Strongly connected components, each sorted, ordered by smallest index.
    pub node_partition: Vec<Vec<usize>>,
    /// Edges between strongly connected components (indices into `node_partition`).
    pub tree_edges: Vec<(usize, usize)>,
    /// Weakly connected components of the condensed graph.
    pub component_blocks: Vec<Vec<usize>>,
    pub is_irreducible: bool,
}

fn full_logs(free: &[f64]) -> Vec<f64> {
    let mut t = Vec::with_capacity(free.len() + 1);
    t.push(0.0);
    t.extend_from_slice(free);
    t
}

/// Per-coordinate derivative of `σ_k²` with respect to `t_j`, for all `j`.
fn sigma_sq_gradient(bs: &DMatrix<Complex64>, r: &[Complex64], sigma: f64) -> Vec<f64> {
    let n = r.len();
    (0..n)
        .map(|j| {
            let br: Complex64 = (0..n).map(|k| bs[(j, k)] * r[k]).sum();
            2.0 * (br.norm_sqr() - sigma * sigma * r[j].norm_sqr())
        })
        .collect()
}

struct SmoothEval {
    f: f64,
    grad: Vec<f64>,
}

/// Log-sum-exp of `σ_k²` at temperature `tau`, gradient on the free coordinates.
fn smoothed(b: &DMatrix<Complex64>, free: &[f64], tau: f64) -> SmoothEval {
    let logs = full_logs(free);
    let bs = scale_raw(b, &logs);
    let Ok(dec) = svd(&bs) else {
        return SmoothEval { f: f64::NAN, grad: vec![0.0; free.len()] };
    };
    let top = dec.values[0] * dec.values[0];
    let weights: Vec<f64> = dec.values.iter().map(|s| ((s * s - top) / tau).exp()).collect();
    let z: f64 = weights.iter().sum();
    let f = top + tau * z.ln();
    let mut grad = vec![0.0; free.len()];
    for (k, w) in weights.iter().enumerate() {
        let w = w / z;
        if w < 1e-18 {
            continue;
        }
        let r: Vec<Complex64> = dec.right.column(k).iter().copied().collect();
        let g = sigma_sq_gradient(&bs, &r, dec.values[k]);
        for j in 0..free.len() {
            grad[j] += w * g[j + 1];
        }
    }
    SmoothEval { f, grad }
}

/// Exact `σ_1²` and its gradient (valid when the top singular value is simple).
fn exact(b: &DMatrix<Complex64>, free: &[f64]) -> (f64, Vec<f64>) {
    let logs = full_logs(free);
    let bs = scale_raw(b, &logs);
    let Ok(dec) = svd(&bs) else {
        return (f64::NAN, vec![0.0; free.len()]);
    };
    let r: Vec<Complex64> = dec.right.column(0).iter().copied().collect();
    let g = sigma_sq_gradient(&bs, &r, dec.values[0]);
    (dec.values[0] * dec.values[0], g[1..].to_vec())
}

fn cluster_size(values: &[f64], rel: f64) -> usize {
    let top = values[0] * values[0];
    values.iter().filter(|s| *s * *s >= top * (1.0 - rel)).count()
}

struct ScalingRun {
    free: Vec<f64>,
    value: f64,
    converged: bool,
    hit_bound: bool,
}

/// Relative stationarity accepted for the smoothed problem when the top
/// singular value is multiple (the exact objective is not differentiable there).
const NONSMOOTH_TOL: f64 = 1e-6;

fn minimize_from(b: &DMatrix<Complex64>, start: &[f64], opts: &GapOptions) -> Result<ScalingRun> {
    let sigma0 = svd(&scale_raw(b, &full_logs(start)))?.values[0];
    let scale0 = sigma0 * sigma0;
    let bound = opts.log_bound;
    let mut free = start.to_vec();
    let mut hit_bound = false;
    let mut level_converged = false;
    for level in 1..=9 {
        let tau = scale0 * 10f64.powi(-level);
        let out = bfgs(
            |x| {
                let e = smoothed(b, x, tau);
                (e.f, e.grad)
            },
            &free,
            BfgsOptions { max_iter: opts.max_iter, grad_tol: 1e-3 * tau, relative: false, bound },
        );
        free = out.x;
        level_converged = out.converged || max_abs(&out.grad) <= NONSMOOTH_TOL * scale0;
        if out.hit_bound {
            hit_bound = true;
            break;
        }
    }

    let n = free.len() + 1;
    let mut converged = level_converged;
    if !hit_bound {
        let dec = svd(&scale_raw(b, &full_logs(&free)))?;
        let sigma2 = dec.values[0] * dec.values[0];
        if cluster_size(&dec.values, opts.cluster_tol) == 1 {
            let tol = 2.0 * opts.grad_tol / n as f64;
            let out = bfgs(
                |x| exact(b, x),
                &free,
                BfgsOptions { max_iter: opts.max_iter, grad_tol: tol, relative: true, bound },
            );
            if out.f <= sigma2 {
                free = out.x;
            }
            converged = out.converged;
            hit_bound |= out.hit_bound;
        } else {
            free = subgradient_polish(b, free, sigma2, bound);
        }
    }
    let value = svd(&scale_raw(b, &full_logs(&free)))?.values[0];
    Ok(ScalingRun { free, value, converged: converged && !hit_bound, hit_bound })
}

/// Short diminishing-step descent on the exact norm, accepting only improvements.
fn subgradient_polish(b: &DMatrix<Complex64>, mut free: Vec<f64>, mut best: f64, bound: f64) -> Vec<f64> {
    let tau = best * 1e-10;
    for k in 1..=50 {
        let e = smoothed(b, &free, tau);
        let gn = max_abs(&e.grad);
        if gn == 0.0 {
            break;
        }
        let step = 1e-3 / k as f64;
        let trial: Vec<f64> =
            free.iter().zip(&e.grad).map(|(x, g)| (x - step * g / gn).clamp(-bound, bound)).collect();
        let (v, _) = exact(b, &trial);
        if v < best {
            best = v;
            free = trial;
        }
    }
    free
}

/// Minimizes `‖S B S⁻¹‖` over positive diagonal `S`.
pub fn min_scaled_norm(b: &ComplexMatrix, opts: &GapOptions) -> Result<ScaledNorm> {
    let n = b.dim();
    let m = b.matrix();
    let norm = op_norm(b)?;
    if n == 1 || norm == 0.0 {
        return Ok(ScaledNorm {
            value: norm,
            scaling: DiagonalScaling::identity(n),
            multiplicity: if norm == 0.0 { n } else { 1 },
            converged: true,
            attained: true,
            stationarity: 0.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<ScalingRun> = None;
    for start in 0..opts.scaling_starts.max(1) {
        let x0: Vec<f64> = if start == 0 {
            vec![0.0; n - 1]
        } else {
            (0..n - 1).map(|_| rng.random_range(-2.0..2.0)).collect()
        };
        let run = minimize_from(m, &x0, opts)?;
        let better = match &best {
            None => true,
            Some(b) => run.value < b.value * (1.0 - 1e-12),
        };
        if better {
            best = Some(run);
        }
    }
    let run = best.expect("at least one start");
    let logs = full_logs(&run.free);
    let bs = scale_raw(m, &logs);
    let dec = svd(&bs)?;
    let sigma = dec.values[0];
    let r: Vec<Complex64> = dec.right.column(0).iter().copied().collect();
    let stationarity = if sigma > 0.0 {
        max_abs(&sigma_sq_gradient(&bs, &r, sigma)) / (2.0 * sigma * sigma)
    } else {
        0.0
    };
    Ok(ScaledNorm {
        value: run.value,
        scaling: DiagonalScaling::from_logs(&logs)?,
        multiplicity: cluster_size(&dec.values, opts.cluster_tol),
        converged: run.converged,
        attained: !run.hit_bound,
        stationarity,
    })
}

fn rho_at(b: &DMatrix<Complex64>, free: &[f64]) -> f64 {
    max_modulus(&phase_raw(b, &full_logs(free))).unwrap_or(f64::NAN)
}

/// Descending value, then lexicographically smallest angle vector.
fn candidate_order(a: &(f64, Vec<f64>), b: &(f64, Vec<f64>)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| {
        a.1.iter().zip(&b.1).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
    })
}

fn grid_seeds(b: &DMatrix<Complex64>, opts: &GapOptions) -> Option<Vec<Vec<f64>>> {
    let d = b.nrows() - 1;
    let g = opts.grid_points.max(1);
    let total = (g as u128).checked_pow(d as u32)?;
    if total > opts.grid_cap as u128 {
        return None;
    }
    let total = total as usize;
    let angle = |k: usize| TAU * k as f64 / g as f64;
    let decode = |mut idx: usize| {
        let mut digits = vec![0usize; d];
        for slot in digits.iter_mut().rev() {
            *slot = idx % g;
            idx /= g;
        }
        digits
    };
    let values: Vec<f64> = (0..total)
        .map(|idx| rho_at(b, &decode(idx).iter().map(|&k| angle(k)).collect::<Vec<_>>()))
        .collect();
    let mut maxima: Vec<(f64, Vec<f64>)> = Vec::new();
    for idx in 0..total {
        let digits = decode(idx);
        let v = values[idx];
        let mut is_max = true;
        let mut stride = 1;
        for pos in (0..d).rev() {
            let k = digits[pos];
            for nb in [(k + 1) % g, (k + g - 1) % g] {
                let nidx = idx - k * stride + nb * stride;
                if values[nidx] > v {
                    is_max = false;
                }
            }
            stride *= g;
        }
        if is_max {
            maxima.push((v, digits.iter().map(|&k| angle(k)).collect()));
        }
    }
    maxima.sort_by(candidate_order);
    Some(maxima.into_iter().take(opts.phase_restarts).map(|(_, a)| a).collect())
}

fn ascend(b: &DMatrix<Complex64>, start: &[f64], opts: &GapOptions) -> (f64, Vec<f64>, bool) {
    let h = opts.fd_step;
    let out = bfgs(
        |x| {
            let f = -rho_at(b, x);
            let mut g = vec![0.0; x.len()];
            let mut xp = x.to_vec();
            for j in 0..x.len() {
                xp[j] = x[j] + h;
                let fp = -rho_at(b, &xp);
                xp[j] = x[j] - h;
                let fm = -rho_at(b, &xp);
                xp[j] = x[j];
                g[j] = (fp - fm) / (2.0 * h);
            }
            (f, g)
        },
        start,
        BfgsOptions { max_iter: opts.max_iter, grad_tol: 1e-7, relative: false, bound: f64::INFINITY },
    );
    let angles: Vec<f64> = out.x.iter().map(|&a| wrap_angle(a)).collect();
    (rho_at(b, &angles), angles, out.converged)
}

/// Maximizes `ρ(U B)` over diagonal unitaries.
pub fn max_phase_rho(b: &ComplexMatrix, opts: &GapOptions) -> Result<PhaseMax> {
    max_phase_rho_seeded(b, opts, &[])
}

/// As [`max_phase_rho`], with additional start points (full angle vectors).
pub fn max_phase_rho_seeded(b: &ComplexMatrix, opts: &GapOptions, extra: &[PhaseVector]) -> Result<PhaseMax> {
    let n = b.dim();
    let m = b.matrix();
    let rho0 = spectral_radius(b)?;
    if n == 1 {
        return Ok(PhaseMax { value: rho0, phases: PhaseVector::identity(1), converged: true, restarts_used: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut seeds: Vec<Vec<f64>> = extra.iter().filter(|u| u.dim() == n).map(|u| u.angles()[1..].to_vec()).collect();
    let grid = grid_seeds(m, opts);
    let from_grid = grid.is_some();
    if let Some(g) = grid {
        seeds.extend(g);
    } else {
        // Too many grid points: keep the best of a random sample instead.
        let mut sample: Vec<(f64, Vec<f64>)> = (0..8 * opts.phase_restarts.max(1))
            .map(|_| {
                let a: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.0..TAU)).collect();
                (rho_at(m, &a), a)
            })
            .collect();
        sample.sort_by(candidate_order);
        seeds.extend(sample.into_iter().take(opts.phase_restarts).map(|(_, a)| a));
    }
    let target = opts.phase_restarts.max(1) + extra.len();
    while from_grid && seeds.len() < target {
        seeds.push((0..n - 1).map(|_| rng.random_range(0.0..TAU)).collect());
    }

    let mut best = (rho0, vec![0.0; n - 1]);
    let mut best_converged = false;
    for s in &seeds {
        let (v, a, conv) = ascend(m, s, opts);
        let cand = (v, a);
        if v.is_finite() && candidate_order(&cand, &best) == Ordering::Less {
            best = cand;
            best_converged = conv;
        }
    }
    Ok(PhaseMax {
        value: best.0,
        phases: PhaseVector::from_angles(&full_logs(&best.1))?,
        converged: best_converged,
        restarts_used: seeds.len(),
    })
}

/// Phase guesses `u_j = arg(r_j) − arg((B_S r)_j)` built from top right-singular vectors.
fn seeds_from_scaling(b: &ComplexMatrix, s: &DiagonalScaling, opts: &GapOptions) -> Result<Vec<PhaseVector>> {
    let bs = scale_raw(b.matrix(), s.logs());
    let dec = svd(&bs)?;
    let m = cluster_size(&dec.values, opts.cluster_tol);
    let n = b.dim();
    let col = |k: usize| -> Vec<Complex64> { dec.right.column(k).iter().copied().collect() };
    let mut vectors: Vec<Vec<Complex64>> = (0..m.min(4)).map(col).collect();
    if m >= 2 {
        let (r1, r2) = (col(0), col(1));
        for q in 0..4 {
            let ph = Complex64::from_polar(1.0, q as f64 * PI / 2.0);
            vectors.push(r1.iter().zip(&r2).map(|(a, c)| a + ph * c).collect());
        }
    }
    let mut out = Vec::new();
    for r in vectors {
        let angles: Vec<f64> = (0..n)
            .map(|j| {
                let br: Complex64 = (0..n).map(|k| bs[(j, k)] * r[k]).sum();
                if br.norm() < 1e-12 || r[j].norm() < 1e-12 {
                    0.0
                } else {
                    r[j].arg() - br.arg()
                }
            })
            .collect();
        out.push(PhaseVector::from_angles(&angles)?);
    }
    Ok(out)
}

/// Computes both sides of the gap problem and their difference.
pub fn gap(b: &ComplexMatrix, opts: &GapOptions) -> Result<GapReport> {
    let sn = min_scaled_norm(b, opts)?;
    let seeds = if sn.value > 0.0 { seeds_from_scaling(b, &sn.scaling, opts)? } else { Vec::new() };
    let pm = max_phase_rho_seeded(b, opts, &seeds)?;
    Ok(assemble(sn.value, sn.scaling, pm.value, pm.phases, sn.multiplicity, sn.converged, pm.converged, sn.attained, pm.restarts_used))
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    inf_norm: f64,
    argmin_s: DiagonalScaling,
    max_rho: f64,
    argmax_u: PhaseVector,
    top_multiplicity: usize,
    converged_s: bool,
    converged_u: bool,
    infimum_attained: bool,
    restarts_used: usize,
) -> GapReport {
    let gap = inf_norm - max_rho;
    GapReport {
        inf_norm,
        argmin_s,
        max_rho,
        argmax_u,
        gap,
        relative_gap: if inf_norm > 0.0 { gap / inf_norm } else { 0.0 },
        top_multiplicity,
        converged_s,
        converged_u,
        infimum_attained,
        restarts_used,
    }
}

/// Sparsity graph reduction: strongly connected components and their connections.
pub fn reduce_graph(b: &ComplexMatrix, zero_tol: f64) -> BlockStructure {
    let n = b.dim();
    let cut = zero_tol * b.max_abs();
    let mut g = DiGraph::<usize, ()>::with_capacity(n, n * n);
    let nodes: Vec<_> = (0..n).map(|i| g.add_node(i)).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && b.get(i, j).norm() > cut {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut parts: Vec<Vec<usize>> = petgraph::algo::kosaraju_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|ix| g[ix]).collect();
            v.sort_unstable();
            v
        })
        .collect();
    parts.sort_by_key(|p| p[0]);
    let mut owner = vec![0usize; n];
    for (k, p) in parts.iter().enumerate() {
        for &i in p {
            owner[i] = k;
        }
    }
    let mut tree_edges = Vec::new();
    let mut uf = UnionFind::<usize>::new(parts.len());
    for e in g.edge_indices() {
        let (a, c) = g.edge_endpoints(e).expect("edge exists");
        let (pa, pc) = (owner[g[a]], owner[g[c]]);
        if pa != pc {
            tree_edges.push((pa, pc));
            uf.union(pa, pc);
        }
    }
    tree_edges.sort_unstable();
    tree_edges.dedup();
    let labels = uf.into_labeling();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut block_of_label = std::collections::BTreeMap::new();
    for (k, p) in parts.iter().enumerate() {
        let id = *block_of_label.entry(labels[k]).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        blocks[id].extend_from_slice(p);
    }
    for blk in &mut blocks {
        blk.sort_unstable();
    }
    blocks.sort_by_key(|blk| blk[0]);
    BlockStructure { is_irreducible: parts.len() == 1, node_partition: parts, tree_edges, component_blocks: blocks }
}

/// Gap computed blockwise on the strongly connected components.
///
/// Scaling the components apart sends the entries between them to zero, so the
/// infimum over `S` is the largest blockwise infimum and is attained only when
/// no such entries exist.
pub fn gap_reduced(b: &ComplexMatrix, opts: &GapOptions) -> Result<GapReport> {
    let bs = reduce_graph(b, opts.zero_tol);
    if bs.is_irreducible {
        return gap(b, opts);
    }
    let n = b.dim();
    let reports: Vec<GapReport> =
        bs.node_partition.iter().map(|p| gap(&b.submatrix(p), opts)).collect::<Result<_>>()?;

    let k = bs.node_partition.len();
    let order = topological_order(k, &bs.tree_edges);
    let spread = if k > 1 { opts.log_bound / (k - 1) as f64 } else { 0.0 };
    let mut logs = vec![0.0; n];
    let mut angles = vec![0.0; n];
    for (c, part) in bs.node_partition.iter().enumerate() {
        let offset = if bs.tree_edges.is_empty() { 0.0 } else { order[c] as f64 * spread - opts.log_bound / 2.0 };
        for (a, &i) in part.iter().enumerate() {
            logs[i] = reports[c].argmin_s.logs()[a] + offset;
            angles[i] = reports[c].argmax_u.angles()[a];
        }
    }
    let arg_inf = (0..k).max_by(|&x, &y| reports[x].inf_norm.total_cmp(&reports[y].inf_norm)).expect("k ≥ 1");
    let arg_rho = (0..k).max_by(|&x, &y| reports[x].max_rho.total_cmp(&reports[y].max_rho)).expect("k ≥ 1");
    Ok(assemble(
        reports[arg_inf].inf_norm,
        DiagonalScaling::from_logs(&logs)?,
        reports[arg_rho].max_rho,
        PhaseVector::from_angles(&angles)?,
        reports[arg_inf].top_multiplicity,
        reports.iter().all(|r| r.converged_s),
        reports.iter().all(|r| r.converged_u),
        bs.tree_edges.is_empty() && reports.iter().all(|r| r.infimum_attained),
        reports.iter().map(|r| r.restarts_used).sum(),
    ))
}

/// Position of each node in a topological order of a DAG on `k` nodes.
fn topological_order(k: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut indeg = vec![0usize; k];
    for &(_, c) in edges {
        indeg[c] += 1;
    }
    let mut ready: Vec<usize> = (0..k).filter(|&i| indeg[i] == 0).collect();
    let mut pos = vec![0usize; k];
    let mut next = 0;
    while let Some(v) = ready.pop() {
        pos[v] = next;
        next += 1;
        for &(a, c) in edges {
            if a == v {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.push(c);
                }
            }
        }
    }
    pos
}

/// The 4×4 matrix `B = L R*` with a strict gap, together with its factors.
#[derive(Debug, Clone)]
pub struct CounterexampleC4 {
    pub b: ComplexMatrix,
    pub r: DMatrix<Complex64>,
    pub l: DMatrix<Complex64>,
}

pub fn counterexample_c4() -> CounterexampleC4 {
    let c = |re: f64, im: f64| Complex64::new(re / 2.0, im / 2.0);
    #[rustfmt::skip]
    let r = DMatrix::from_row_slice(4, 2, &[
        c(1.0, 0.0), c(0.0, 0.0),
        c(1.0, 0.0), c(1.0, 0.0),
        c(1.0, 0.0), c(0.0, 1.0),
        c(1.0, 0.0), c(-1.0, -1.0),
    ]);
    #[rustfmt::skip]
    let l = DMatrix::from_row_slice(4, 2, &[
        c(0.0, 0.0), c(1.0, 0.0),
        c(1.0, 0.0), c(-1.0, 0.0),
        c(1.0, 0.0), c(0.0, -1.0),
        c(1.0, -1.0), c(1.0, 0.0),
    ]);
    let b = ComplexMatrix::new(&l * r.adjoint()).expect("finite");
    CounterexampleC4 { b, r, l }
}

/// Closed form of `Tr((L_S* L_S)(R_S* R_S))` for the 4×4 counterexample.
///
/// Only the ratios `s_j / s_4` matter.
pub fn verify_c4_trace(s: &DiagonalScaling) -> Result<f64> {
    if s.dim() != 4 {
        return Err(Error::InvalidInput(format!("expected a 4-entry scaling, got {}", s.dim())));
    }
    let v = s.values();
    let sq = |j: usize| (v[j] / v[3]).powi(2);
    let (a1, a2, a3) = (sq(0), sq(1), sq(2));
    let t = (1.0 / a1 + 1.0 / a2 + 1.0 / a3 + 1.0) * (a2 + a3 + 2.0)
        + (a1 + a2 + a3 + 1.0) * (1.0 / a2 + 1.0 / a3 + 2.0)
        - 2.0 * (a2 - 1.0) * (1.0 / a2 - 1.0)
        - 2.0 * (a3 - 1.0) * (1.0 / a3 - 1.0);
    Ok(t / 16.0)
}

/// Real 6×6 candidate: the published 5×6 numerical block with a zero sixth row.
pub fn candidate_r6() -> ComplexMatrix {
    const ROWS: [[f64; 6]; 5] = [
        [0.14753503, 0.19982136, 0.00339269, 0.51926021, 0.00847797, 0.21926921],
        [0.08321061, 0.13296559, 0.15631294, -0.1954354, -0.04654104, -0.21988828],
        [-0.37549381, -0.02645794, 0.01837161, -0.39654006, 0.43179675, 0.49911196],
        [-0.3001269, -0.27661858, -0.57464677, 0.35421452, -0.00469564, 0.39153639],
        [0.32691344, -0.09925285, 0.51568898, 0.35643262, 0.22186063, 0.25403942],
    ];
    let mut rows: Vec<Vec<f64>> = ROWS.iter().map(|r| r.to_vec()).collect();
    rows.push(vec![0.0; 6]);
    ComplexMatrix::from_real_rows(&rows).expect("finite")
}

fn landscape_matrix() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[vec![1.0, -1.0], vec![1.0, -1.0]]).expect("finite")
}

fn landscape_curve(theta: f64) -> f64 {
    let ub = phase_raw(landscape_matrix().matrix(), &[0.0, theta]);
    max_modulus(&ub).unwrap_or(f64::NAN)
}

/// `B = (1,1)ᵀ(1,−1)` and the curve `θ ↦ ρ(diag(1, e^{iθ}) B)`.
pub fn landscape_local_min_2x2() -> (ComplexMatrix, fn(f64) -> f64) {
    (landscape_matrix(), landscape_curve)
}

/// `diag(r, B̃)`: the identity phase is a local maximum of value `r`.
pub fn block_local_max(btilde: &ComplexMatrix, r: f64, opts: &GapOptions) -> Result<ComplexMatrix> {
    let lo = spectral_radius(btilde)?;
    let hi = max_phase_rho(btilde, opts)?.value;
    if !(r > lo && r < hi) {
        return Err(Error::Precondition(format!("r = {r} must lie strictly between {lo} and {hi}")));
    }
    let k = btilde.dim() + 1;
    let mut data = DMatrix::zeros(k, k);
    data[(0, 0)] = Complex64::new(r, 0.0);
    data.view_mut((1, 1), (k - 1, k - 1)).copy_from(btilde.matrix());
    ComplexMatrix::new(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    ComplexGaussian,
    RealGaussian,
}

impl std::str::FromStr for Ensemble {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complex-gaussian" | "complex" => Ok(Self::ComplexGaussian),
            "real-gaussian" | "real" => Ok(Self::RealGaussian),
            other => Err(Error::InvalidInput(format!("unknown ensemble '{other}'"))),
        }
    }
}

/// Ginibre sample: i.i.d. standard normal entries (unit variance complex entries).
pub fn ginibre(n: usize, ensemble: Ensemble, rng: &mut impl Rng) -> ComplexMatrix {
    let data = DMatrix::from_fn(n, n, |_, _| match ensemble {
        Ensemble::RealGaussian => Complex64::new(rng.sample(StandardNormal), 0.0),
        Ensemble::ComplexGaussian => {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) / 2f64.sqrt()
        }
    });
    ComplexMatrix::new(data).expect("finite")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsOptions {
    pub threshold: f64,
    /// Replace the first sample by the 4×4 counterexample (requires `n = 4`).
    pub inject_c4: bool,
    pub gap: GapOptions,
}

impl Default for StatsOptions {
    fn default() -> Self {
        Self { threshold: 1e-3, inject_c4: false, gap: GapOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub median: f64,
    pub q90: f64,
    pub q99: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsSummary {
    pub n: usize,
    pub count: usize,
    pub ensemble: Ensemble,
    pub seed: u64,
    pub threshold: f64,
    pub relative_gaps: Vec<f64>,
    pub quantiles: Quantiles,
    pub fraction_above: f64,
    /// Indices of samples with a non-converged search among those above threshold.
    pub flagged_above: Vec<usize>,
    pub non_converged: usize,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

/// Relative gap statistics over a seeded Ginibre ensemble.
pub fn random_gap_stats(
    n: usize,
    count: usize,
    ensemble: Ensemble,
    seed: u64,
    opts: &StatsOptions,
) -> Result<StatsSummary> {
    if n < 2 || count < 1 {
        return Err(Error::InvalidInput("need n ≥ 2 and count ≥ 1".into()));
    }
    if opts.inject_c4 && n != 4 {
        return Err(Error::InvalidInput("counterexample injection needs n = 4".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<ComplexMatrix> = (0..count).map(|_| ginibre(n, ensemble, &mut rng)).collect();
    if opts.inject_c4 {
        samples[0] = counterexample_c4().b;
    }
    let run = |(i, b): (usize, &ComplexMatrix)| {
        let mut o = opts.gap.clone();
        o.seed = seed.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(i as u64);
        gap(b, &o)
    };
    #[cfg(feature = "parallel")]
    let reports: Vec<GapReport> = {
        use rayon::prelude::*;
        samples.par_iter().enumerate().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let reports: Vec<GapReport> = samples.iter().enumerate().map(run).collect::<Result<_>>()?;

    let rel: Vec<f64> = reports.iter().map(|r| r.relative_gap).collect();
    let mut sorted = rel.clone();
    sorted.sort_by(f64::total_cmp);
    let above: Vec<usize> = (0..count).filter(|&i| rel[i] > opts.threshold).collect();
    let converged = |r: &GapReport| r.converged_s && r.converged_u;
    Ok(StatsSummary {
        n,
        count,
        ensemble,
        seed,
        threshold: opts.threshold,
        quantiles: Quantiles {
            min: sorted[0],
            median: quantile(&sorted, 0.5),
            q90: quantile(&sorted, 0.9),
            q99: quantile(&sorted, 0.99),
            max: sorted[count - 1],
        },
        fraction_above: above.len() as f64 / count as f64,
        flagged_above: above.iter().copied().filter(|&i| !converged(&reports[i])).collect(),
        non_converged: reports.iter().filter(|r| !converged(r)).count(),
        relative_gaps: rel,
    })
}
