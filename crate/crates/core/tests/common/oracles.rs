//! Reference computations that share no code with the library.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

fn project(basis: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let coef = basis
        .clone()
        .svd(true, true)
        .solve(v, 1e-12)
        .expect("svd solve");
    basis * coef
}

fn hcat(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(n, cols);
    let mut at = 0;
    for b in blocks {
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    out
}

fn col(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

pub struct JointSolution {
    pub alpha: DVector<f64>,
    pub beta: f64,
    pub objective: f64,
}

/// Minimizer of `½‖P_M(Y − Zα − Dβ − Wγ − 1θ)‖² + λ‖α‖₁` with `M = (Z, D, 1)`,
/// found by solving the stationarity system on every support and sign pattern
/// of `α` and keeping the best feasible one. Exact for small `p_z`.
pub fn joint_minimizer(
    y: &DVector<f64>,
    d: &DVector<f64>,
    z: &DMatrix<f64>,
    w: &DVector<f64>,
    lambda: f64,
) -> Option<JointSolution> {
    let n = y.len();
    let p = z.ncols();
    let ones = DMatrix::from_element(n, 1, 1.0);
    let m = hcat(&[z, &col(d), &ones]);
    let b = project(&m, &col(y)).column(0).into_owned();
    let pw = project(&m, &col(w));
    let mut best: Option<JointSolution> = None;
    for size in 0..=p {
        for support in (0..p).combinations(size) {
            for signs in (0..size).map(|_| [-1.0, 1.0]).multi_cartesian_product() {
                let zs = DMatrix::from_fn(n, size, |i, j| z[(i, support[j])]);
                let f = hcat(&[&zs, &col(d), &pw, &ones]);
                let g = f.transpose() * &f;
                let eig = g.clone().symmetric_eigen().eigenvalues;
                let (lo, hi) = (eig.min(), eig.max());
                if lo <= 1e-10 * hi {
                    continue;
                }
                let mut rhs = f.transpose() * &b;
                for (j, s) in signs.iter().enumerate() {
                    rhs[j] -= lambda * s;
                }
                let phi = g.cholesky()?.solve(&rhs);
                if (0..size).any(|j| phi[j] * signs[j] <= 0.0) {
                    continue;
                }
                let r = &b - &f * &phi;
                let slack = lambda * (1.0 + 1e-9) + 1e-12;
                if (0..p)
                    .filter(|j| !support.contains(j))
                    .any(|j| z.column(j).dot(&r).abs() > slack)
                {
                    continue;
                }
                let mut alpha = DVector::zeros(p);
                for (j, &k) in support.iter().enumerate() {
                    alpha[k] = phi[j];
                }
                let objective = 0.5 * r.norm_squared() + lambda * alpha.lp_norm(1);
                if best.as_ref().is_none_or(|s| objective < s.objective) {
                    best = Some(JointSolution {
                        alpha,
                        beta: phi[size],
                        objective,
                    });
                }
            }
        }
    }
    best
}

/// Smallest λ at which `α = 0` solves the joint problem.
pub fn joint_lambda_max(
    y: &DVector<f64>,
    d: &DVector<f64>,
    z: &DMatrix<f64>,
    w: &DVector<f64>,
) -> f64 {
    let n = y.len();
    let ones = DMatrix::from_element(n, 1, 1.0);
    let m = hcat(&[z, &col(d), &ones]);
    let b = project(&m, &col(y));
    let base = hcat(&[&col(d), &project(&m, &col(w)), &ones]);
    let r = &b - project(&base, &b);
    (z.transpose() * r).amax()
}

/// `min`/`max` of `‖X v‖²` over unit `v` supported on `k ≤ 2` columns, by a
/// fine sweep over the angle `v = (cos θ, sin θ)` refined with golden-section search.
pub fn angular_rip(x: &DMatrix<f64>, k: usize) -> (f64, f64) {
    assert!(k == 1 || k == 2);
    let p = x.ncols();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    if k == 1 {
        for j in 0..p {
            let v = x.column(j).norm_squared();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        return (lo, hi);
    }
    const STEPS: usize = 720;
    let step = std::f64::consts::PI / STEPS as f64;
    for (a, b) in (0..p).tuple_combinations() {
        let f = |t: f64| (x.column(a) * t.cos() + x.column(b) * t.sin()).norm_squared();
        for i in 0..STEPS {
            let t = i as f64 * step;
            lo = lo.min(golden(&f, t - step, t + step, false));
            hi = hi.max(golden(&f, t - step, t + step, true));
        }
    }
    (lo, hi)
}

fn golden(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, maximize: bool) -> f64 {
    let g = |t: f64| if maximize { -f(t) } else { f(t) };
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    while b - a > 1e-12 {
        if g(c) < g(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    let t = 0.5 * (a + b);
    [f(a), f(b), f(t)].into_iter().fold(
        if maximize {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        },
        |acc, v| {
            if maximize {
                acc.max(v)
            } else {
                acc.min(v)
            }
        },
    )
}
