//! Seeded property checks shared by the property suite and the acceptance
//! harness. Each check returns `Err` with a description of the violation.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pdestride::denoise::truncate_matrix;
use pdestride::dictionary::{standardize, DesignSystem};
use pdestride::rng;
use pdestride::solvers::{
    hard_threshold, htp, iht, iht_d, lasso_cd, lipschitz, ols_refit, soft_threshold, stridge, Penalty, Problem,
    SolverKind, SolverOptions,
};
use pdestride::stability::{importance_profile, solver_path, StabilityParams};
use pdestride::Exec;
use rand::Rng;
use rand_distr::StandardNormal;

pub type Check = std::result::Result<(), String>;

pub fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng::stream(seed, "check-matrix", &[]);
    DMatrix::from_fn(n, p, |_, _| r.sample(StandardNormal))
}

pub fn gaussian_vec(n: usize, seed: u64) -> DVector<f64> {
    let mut r = rng::stream(seed, "check-vector", &[]);
    DVector::from_fn(n, |_, _| r.sample(StandardNormal))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-300);
    num / den
}

/// Unrestricted least squares through the normal equations.
pub fn normal_equations(theta: &DMatrix<f64>, ut: &DVector<f64>) -> DVector<f64> {
    theta
        .tr_mul(theta)
        .cholesky()
        .expect("full column rank")
        .solve(&theta.tr_mul(ut))
}

/// Soft thresholding minimizes `½(z − x)² + γ|z|`; hard thresholding
/// minimizes `½(z − x)² + (λ/2)·[z ≠ 0]`.
pub fn threshold_identities(x: f64, gamma: f64) -> Check {
    let gamma = gamma.abs();
    let s = soft_threshold(x, gamma);
    let expect = x.signum() * (x.abs() - gamma).max(0.0);
    ensure((s - expect).abs() <= 1e-12 * (1.0 + x.abs()), || {
        format!("soft({x}, {gamma}) = {s}")
    })?;
    let soft_obj = |z: f64| 0.5 * (z - x).powi(2) + gamma * z.abs();
    for h in [1e-3, 1e-1, 1.0] {
        ensure(soft_obj(s) <= soft_obj(s + h).min(soft_obj(s - h)) + 1e-12, || {
            format!("soft({x}, {gamma}) is not a minimizer")
        })?;
    }
    let lambda = gamma * gamma;
    let h = hard_threshold(x, lambda);
    ensure(h == 0.0 || h == x, || format!("hard({x}, {lambda}) = {h}"))?;
    ensure((h != 0.0) == (x.abs() > gamma), || {
        format!("hard({x}, {lambda}) kept the wrong side")
    })?;
    let hard_obj = |z: f64| 0.5 * (z - x).powi(2) + if z != 0.0 { 0.5 * lambda } else { 0.0 };
    ensure(hard_obj(h) <= hard_obj(0.0).min(hard_obj(x)) + 1e-12, || {
        format!("hard({x}, {lambda}) is not a minimizer")
    })?;
    ensure(
        soft_threshold(x, 0.0) == x && hard_threshold(x, 0.0) == x || x == 0.0,
        || format!("zero threshold changed {x}"),
    )
}

/// Stationarity of the LASSO solution: `|θ_kᵀr| ≤ λ` off the support and
/// `θ_kᵀr = λ·sign(ξ_k)` on it.
pub fn lasso_kkt(seed: u64, fraction: f64) -> Check {
    let theta = gaussian(40, 8, seed);
    let ut = gaussian_vec(40, seed);
    let lmax = Problem::new(&theta, &ut).unwrap().lambda_max(Penalty::L1);
    let lambda = fraction * lmax;
    let opts = SolverOptions {
        tol: 1e-10,
        maxit: 100_000,
        ..Default::default()
    };
    let c = lasso_cd(&theta, &ut, lambda, &opts).map_err(|e| e.to_string())?;
    let xi = DVector::from_column_slice(&c.values);
    let g = theta.tr_mul(&(&ut - &theta * &xi));
    let tol = 1e-5 * lmax;
    for k in 0..xi.len() {
        if xi[k] == 0.0 {
            ensure(g[k].abs() <= lambda + tol, || {
                format!("inactive {k}: |g| = {} > λ = {lambda}", g[k].abs())
            })?;
        } else {
            ensure((g[k] - lambda * xi[k].signum()).abs() <= tol, || {
                format!("active {k}: g = {} but λ·sign = {}", g[k], lambda * xi[k].signum())
            })?;
        }
    }
    Ok(())
}

/// At zero penalty LASSO, IHT, STRidge and HTP with `K = p` all return the
/// least-squares solution.
pub fn zero_penalty_is_ols(seed: u64) -> Check {
    let (n, p) = (60, 6);
    let theta = gaussian(n, p, seed);
    let ut = gaussian_vec(n, seed);
    let ols = normal_equations(&theta, &ut);
    let opts = SolverOptions {
        tol: 1e-12,
        maxit: 20_000,
        ridge_lambda: 0.0,
        ..Default::default()
    };
    let fits = [
        ("lasso", lasso_cd(&theta, &ut, 0.0, &opts)),
        ("iht", iht(&theta, &ut, 0.0, &opts)),
        ("stridge", stridge(&theta, &ut, 0.0, &opts)),
        ("htp", htp(&theta, &ut, p, &opts)),
    ];
    for (name, fit) in fits {
        let c = fit.map_err(|e| format!("{name}: {e}"))?;
        let d = rel_diff(&c.values, ols.as_slice());
        ensure(d <= 1e-6, || format!("{name} at zero penalty is {d:.2e} from OLS"))?;
    }
    Ok(())
}

fn orthonormal(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    gaussian(n, p, seed).qr().q()
}

/// With orthonormal columns LASSO is the soft-thresholded and IHT the
/// hard-thresholded correlation vector.
pub fn orthonormal_closed_forms(seed: u64, fraction: f64) -> Check {
    let q = orthonormal(30, 6, seed);
    let ut = gaussian_vec(30, seed);
    let c = q.tr_mul(&ut);
    let cmax = c.amax();
    let opts = SolverOptions {
        tol: 1e-12,
        ..Default::default()
    };
    let gamma = fraction * cmax;
    let lasso = lasso_cd(&q, &ut, gamma, &opts).map_err(|e| e.to_string())?;
    let soft: Vec<f64> = c.iter().map(|&v| soft_threshold(v, gamma)).collect();
    ensure(
        lasso
            .values
            .iter()
            .zip(&soft)
            .all(|(a, b)| (a - b).abs() <= 1e-8 * cmax),
        || format!("lasso {:?} vs soft {:?}", lasso.values, soft),
    )?;
    let lambda = gamma * gamma;
    let l0 = iht(&q, &ut, lambda, &opts).map_err(|e| e.to_string())?;
    let hard: Vec<f64> = c.iter().map(|&v| hard_threshold(v, lambda)).collect();
    ensure(
        l0.values.iter().zip(&hard).all(|(a, b)| (a - b).abs() <= 1e-8 * cmax),
        || format!("iht {:?} vs hard {:?}", l0.values, hard),
    )
}

/// The IHT iterates, recovered by capping the iteration count, never
/// increase `½‖r‖² + (L/2)·λ·‖ξ‖₀`.
pub fn iht_monotone(seed: u64, fraction: f64) -> Check {
    let theta = gaussian(30, 10, seed);
    let ut = gaussian_vec(30, seed);
    let l = lipschitz(&theta);
    let lmax = Problem::new(&theta, &ut).unwrap().lambda_max(Penalty::L0);
    let lambda = fraction * lmax;
    let objective = |xi: &[f64]| {
        let x = DVector::from_column_slice(xi);
        let nnz = xi.iter().filter(|v| **v != 0.0).count() as f64;
        0.5 * (&ut - &theta * x).norm_squared() + 0.5 * l * lambda * nnz
    };
    let mut prev = 0.5 * ut.norm_squared();
    for it in 1..=40 {
        let opts = SolverOptions {
            maxit: it,
            tol: 1e-300,
            ..Default::default()
        };
        let c = iht(&theta, &ut, lambda, &opts).map_err(|e| e.to_string())?;
        let now = objective(&c.values);
        ensure(now <= prev * (1.0 + 1e-10) + 1e-300, || {
            format!("objective rose from {prev} to {now} at iteration {it}")
        })?;
        prev = now;
    }
    Ok(())
}

/// The rank-r truncation error is the tail of the singular spectrum.
pub fn eckart_young(seed: u64, rows: usize, cols: usize, rank: usize) -> Check {
    let a = gaussian(rows, cols, seed);
    let full = rows.min(cols);
    let rank = rank.clamp(1, full);
    let (ar, report) = truncate_matrix(&a, Some(rank)).map_err(|e| e.to_string())?;
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let tail: f64 = sv[rank..].iter().map(|s| s * s).sum();
    let err = (&a - &ar).norm_squared();
    ensure((err - tail).abs() <= 1e-9 * a.norm_squared(), || {
        format!("‖A − A_r‖² = {err}, tail of spectrum = {tail}")
    })?;
    ensure(
        (report.reconstruction_error.powi(2) - tail).abs() <= 1e-9 * a.norm_squared(),
        || format!("reported error {} vs tail {}", report.reconstruction_error, tail.sqrt()),
    )?;
    let rank_of = ar.clone().svd(false, false).rank(1e-9 * sv[0]);
    ensure(rank_of == rank, || {
        format!("truncation has rank {rank_of}, wanted {rank}")
    })
}

/// Standardizing twice changes nothing, and back-transformed standardized
/// least squares equals raw least squares with an intercept.
pub fn standardization(seed: u64) -> Check {
    let (n, p) = (50, 5);
    let mut theta = gaussian(n, p, seed);
    for k in 0..p {
        let shift = 3.0 * k as f64 - 4.0;
        let scale = 0.1 + k as f64;
        theta.column_mut(k).apply(|v| *v = *v * scale + shift);
    }
    let ut = gaussian_vec(n, seed).map(|v| v + 2.0);
    let s = standardize(&theta, &ut, None);
    let again = standardize(&s.theta, &s.ut, None);
    ensure((&again.theta - &s.theta).amax() <= 1e-12, || {
        "standardizing twice moved the columns".into()
    })?;
    ensure((&again.ut - &s.ut).amax() <= 1e-12, || {
        "standardizing twice moved the response".into()
    })?;
    ensure(again.column_scale.iter().all(|c| (c - 1.0).abs() <= 1e-12), || {
        "scales are not one".into()
    })?;

    let all: Vec<usize> = (0..s.active.len()).collect();
    let beta = ols_refit(&s.theta, &s.ut, &all, false).map_err(|e| e.to_string())?;
    let (raw, intercept) = s.back_transform(&beta.coefficients);
    let direct = ols_refit(&theta, &ut, &(0..p).collect::<Vec<_>>(), true).map_err(|e| e.to_string())?;
    ensure(rel_diff(&raw, &direct.coefficients) <= 1e-9, || {
        format!("back-transform {raw:?} vs raw OLS {:?}", direct.coefficients)
    })?;
    ensure(
        (intercept - direct.intercept).abs() <= 1e-9 * (1.0 + direct.intercept.abs()),
        || format!("intercept {intercept} vs {}", direct.intercept),
    )
}

/// A sparse linear design with `k` true columns.
pub fn sparse_design(n: usize, p: usize, k: usize, noise: f64, seed: u64) -> (DesignSystem, Vec<usize>) {
    let theta = gaussian(n, p, seed);
    let mut r = rng::stream(seed, "check-support", &[]);
    let mut support: Vec<usize> = rand::seq::index::sample(&mut r, p, k).into_vec();
    support.sort_unstable();
    let mut ut = DVector::zeros(n);
    for &j in &support {
        let mag = 1.0 + r.random::<f64>();
        let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
        ut += theta.column(j) * (sign * mag);
    }
    let signal = ut.norm() / (n as f64).sqrt();
    ut += gaussian_vec(n, seed ^ 0x5eed) * (noise * signal);
    let labels = (0..p).map(|j| format!("x{j}")).collect();
    (DesignSystem::new(theta, ut, labels).unwrap(), support)
}

/// Importance values are multiples of `1/B`, and the profile is identical
/// sequentially and on 1- and 4-thread pools.
pub fn importance_determinism(seed: u64) -> Check {
    let (design, _) = sparse_design(60, 8, 2, 0.1, seed);
    let params = StabilityParams {
        b: 24,
        m: 6,
        ..Default::default()
    };
    let opts = SolverOptions::default();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| importance_profile(&design, SolverKind::IhtD, &opts, &params, seed, Exec::Parallel))
    };
    let seq = importance_profile(&design, SolverKind::IhtD, &opts, &params, seed, Exec::Sequential)
        .map_err(|e| e.to_string())?;
    for threads in [1, 4] {
        let par = run(threads).map_err(|e| e.to_string())?;
        ensure(par == seq, || {
            format!("{threads}-thread profile differs from the sequential one")
        })?;
    }
    for row in &seq.pi {
        for &pi in row {
            let scaled = pi * params.b as f64;
            ensure(
                (scaled - scaled.round()).abs() <= 1e-9 && (0.0..=1.0).contains(&pi),
                || format!("importance {pi} is not a multiple of 1/{}", params.b),
            )?;
        }
    }
    Ok(())
}

/// Best two-column subset by exhaustive least squares on the standardized
/// design.
pub fn best_pair(design: &DesignSystem) -> Vec<usize> {
    let s = design.standardize();
    let p = s.active.len();
    let mut best = (f64::INFINITY, vec![]);
    for a in 0..p {
        for b in a + 1..p {
            let fit = ols_refit(&s.theta, &s.ut, &[a, b], false).unwrap();
            let x = DVector::from_column_slice(&fit.coefficients);
            let rss = (&s.ut - &s.theta * x).norm_squared();
            if rss < best.0 {
                best = (rss, vec![a, b]);
            }
        }
    }
    s.original_support(&best.1)
}

/// Whether some point of the IHT-d path equals the exhaustive best pair on
/// a 2-sparse problem.
pub fn path_finds_best_pair(seed: u64) -> bool {
    let (design, _) = sparse_design(50, 8, 2, 0.05, seed);
    let best = best_pair(&design);
    let Ok((_, supports)) = solver_path(&design, SolverKind::IhtD, &SolverOptions::default(), 20, 0.01) else {
        return false;
    };
    supports.contains(&best)
}

/// IHT-d selects the permuted columns after a column permutation.
pub fn permutation_equivariance(seed: u64) -> Check {
    let (design, _) = sparse_design(40, 7, 2, 0.05, seed);
    let mut perm: Vec<usize> = (0..7).collect();
    perm.rotate_left((seed % 7) as usize);
    perm.swap(0, 6);
    let theta = DMatrix::from_fn(40, 7, |i, j| design.theta[(i, perm[j])]);
    let lmax = Problem::new(&design.theta, &design.ut).unwrap().lambda_max(Penalty::L0);
    let opts = SolverOptions::default();
    for fraction in [0.5, 0.1, 0.01] {
        let a = iht_d(&design.theta, &design.ut, fraction * lmax, &opts).map_err(|e| e.to_string())?;
        let b = iht_d(&theta, &design.ut, fraction * lmax, &opts).map_err(|e| e.to_string())?;
        let mut mapped: Vec<usize> = b.support.iter().map(|&j| perm[j]).collect();
        mapped.sort_unstable();
        ensure(mapped == a.support, || {
            format!("support {:?} became {mapped:?} under permutation", a.support)
        })?;
    }
    Ok(())
}
