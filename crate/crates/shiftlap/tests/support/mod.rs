//! Independently derived reference implementations used to cross-check the
//! library: a from-scratch element-loop assembly of the Helmholtz system, a
//! stencil-sum evaluation of all Fourier symbols, and double-loop versions of
//! the data-pipeline formulas. Everything here deliberately avoids the
//! library's own basis/quadrature/symbol code paths.

#![allow(dead_code)]

use std::collections::BTreeMap;

use num_complex::Complex;

pub type C64 = Complex<f64>;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

// ---------------------------------------------------------------------------
// Quadrature: Gauss-Legendre on [0, 1] from closed-form radicals.
// ---------------------------------------------------------------------------

/// n-point Gauss-Legendre rule on [0, 1], n in 2..=4, nodes ascending.
pub fn gauss01(n: usize) -> Vec<(f64, f64)> {
    let mut rule: Vec<(f64, f64)> = match n {
        2 => {
            let x = 1.0 / 3.0f64.sqrt();
            vec![(-x, 1.0), (x, 1.0)]
        }
        3 => {
            let x = (3.0f64 / 5.0).sqrt();
            vec![(-x, 5.0 / 9.0), (0.0, 8.0 / 9.0), (x, 5.0 / 9.0)]
        }
        4 => {
            let x1 = ((3.0 - 2.0 * (6.0f64 / 5.0).sqrt()) / 7.0).sqrt();
            let x2 = ((3.0 + 2.0 * (6.0f64 / 5.0).sqrt()) / 7.0).sqrt();
            let w1 = (18.0 + 30.0f64.sqrt()) / 36.0;
            let w2 = (18.0 - 30.0f64.sqrt()) / 36.0;
            vec![(-x2, w2), (-x1, w1), (x1, w1), (x2, w2)]
        }
        _ => panic!("gauss01: n must be 2..=4, got {n}"),
    };
    for (x, w) in rule.iter_mut() {
        *x = 0.5 * (*x + 1.0);
        *w *= 0.5;
    }
    rule
}

// ---------------------------------------------------------------------------
// Lagrange bases on equispaced nodes, hardcoded as Horner polynomials.
// ---------------------------------------------------------------------------

/// Value of basis function j of order p at x.
pub fn lag_val(p: usize, j: usize, x: f64) -> f64 {
    match (p, j) {
        (1, 0) => 1.0 - x,
        (1, 1) => x,
        (2, 0) => (2.0 * x - 3.0) * x + 1.0,
        (2, 1) => (-4.0 * x + 4.0) * x,
        (2, 2) => (2.0 * x - 1.0) * x,
        (3, 0) => ((-4.5 * x + 9.0) * x - 5.5) * x + 1.0,
        (3, 1) => ((13.5 * x - 22.5) * x + 9.0) * x,
        (3, 2) => ((-13.5 * x + 18.0) * x - 4.5) * x,
        (3, 3) => ((4.5 * x - 4.5) * x + 1.0) * x,
        _ => panic!("lag_val: unsupported (p, j) = ({p}, {j})"),
    }
}

/// Derivative of basis function j of order p at x.
pub fn lag_der(p: usize, j: usize, x: f64) -> f64 {
    match (p, j) {
        (1, 0) => -1.0,
        (1, 1) => 1.0,
        (2, 0) => 4.0 * x - 3.0,
        (2, 1) => -8.0 * x + 4.0,
        (2, 2) => 4.0 * x - 1.0,
        (3, 0) => (-13.5 * x + 18.0) * x - 5.5,
        (3, 1) => (40.5 * x - 45.0) * x + 9.0,
        (3, 2) => (-40.5 * x + 36.0) * x - 4.5,
        (3, 3) => (13.5 * x - 9.0) * x + 1.0,
        _ => panic!("lag_der: unsupported (p, j) = ({p}, {j})"),
    }
}

// ---------------------------------------------------------------------------
// Wavenumber profiles.
// ---------------------------------------------------------------------------

/// Three-layer wedge profile in unit coordinates, bands slanted by 0.1*x.
pub fn wedge_mu(xu: f64, yu: f64) -> f64 {
    let slant = 0.1 * xu;
    if yu < 0.35 + slant {
        0.55
    } else if yu < 0.65 + slant {
        0.75
    } else {
        1.0
    }
}

#[derive(Clone, Copy)]
pub enum Profile {
    Constant,
    Wedge,
}

impl Profile {
    pub fn k(self, k_max: f64, x: f64, y: f64, s: f64) -> f64 {
        match self {
            Profile::Constant => k_max,
            Profile::Wedge => k_max * wedge_mu(x / s, y / s),
        }
    }
}

// ---------------------------------------------------------------------------
// Element-loop assembly of A = K − M(λ) − iB into a sorted triplet map.
// ---------------------------------------------------------------------------

pub struct AssembledOracle {
    pub n: usize,
    pub entries: BTreeMap<(usize, usize), C64>,
}

impl AssembledOracle {
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        for (&(r, col), &v) in &self.entries {
            y[r] += v * x[col];
        }
        y
    }
}

/// Assemble the full Helmholtz system A(k, ε) = K − M(k, ε) − iB(k) for
/// order p on level ℓ of the (0, s)² domain, with ε = k^sigma pointwise.
pub fn assemble_oracle(
    p: usize,
    level: u32,
    s: f64,
    profile: Profile,
    k_max: f64,
    sigma: f64,
) -> AssembledOracle {
    let cells = 1usize << level;
    let h = s / cells as f64;
    let nps = p * cells + 1;
    let n = nps * nps;
    let nb = p + 1;
    let rule = gauss01(p + 1);

    let mut entries: BTreeMap<(usize, usize), C64> = BTreeMap::new();
    let add = |map: &mut BTreeMap<(usize, usize), C64>, r: usize, col: usize, v: C64| {
        *map.entry((r, col)).or_insert_with(|| C64::new(0.0, 0.0)) += v;
    };

    // Volume terms: K and M, quadrature point by quadrature point.
    for cy in 0..cells {
        for cx in 0..cells {
            for &(qy, wy) in &rule {
                let y = (cy as f64 + qy) * h;
                for &(qx, wx) in &rule {
                    let x = (cx as f64 + qx) * h;
                    let w2 = wy * wx;
                    let kv = profile.k(k_max, x, y, s);
                    let lam = c(kv * kv, kv.powf(sigma));
                    for jy in 0..nb {
                        for jx in 0..nb {
                            let gj = (cy * p + jy) * nps + cx * p + jx;
                            let vj = lag_val(p, jy, qy) * lag_val(p, jx, qx);
                            let gxj = lag_val(p, jy, qy) * lag_der(p, jx, qx);
                            let gyj = lag_der(p, jy, qy) * lag_val(p, jx, qx);
                            for my in 0..nb {
                                for mx in 0..nb {
                                    let gm = (cy * p + my) * nps + cx * p + mx;
                                    let vm = lag_val(p, my, qy) * lag_val(p, mx, qx);
                                    let gxm = lag_val(p, my, qy) * lag_der(p, mx, qx);
                                    let gym = lag_der(p, my, qy) * lag_val(p, mx, qx);
                                    let stiff = w2 * (gxj * gxm + gyj * gym);
                                    let mass = lam * (w2 * h * h * vj * vm);
                                    add(&mut entries, gj, gm, c(stiff, 0.0) - mass);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    // Boundary term: −i ∫ k φ_i φ_j ds over the four sides, edge by edge.
    let side_node: [Box<dyn Fn(usize, usize) -> usize>; 4] = [
        Box::new(move |e, j| e * p + j),
        Box::new(move |e, j| (nps - 1) * nps + e * p + j),
        Box::new(move |e, j| (e * p + j) * nps),
        Box::new(move |e, j| (e * p + j) * nps + nps - 1),
    ];
    let side_point: [Box<dyn Fn(f64) -> (f64, f64)>; 4] = [
        Box::new(move |t| (t, 0.0)),
        Box::new(move |t| (t, s)),
        Box::new(move |t| (0.0, t)),
        Box::new(move |t| (s, t)),
    ];
    for side in 0..4 {
        for e in 0..cells {
            for &(q, w) in &rule {
                let along = (e as f64 + q) * h;
                let (x, y) = side_point[side](along);
                let kv = profile.k(k_max, x, y, s);
                for j in 0..nb {
                    for m in 0..nb {
                        let gj = side_node[side](e, j);
                        let gm = side_node[side](e, m);
                        let v = w * kv * lag_val(p, j, q) * lag_val(p, m, q) * h;
                        add(&mut entries, gj, gm, c(0.0, -v));
                    }
                }
            }
        }
    }

    AssembledOracle { n, entries }
}

// ---------------------------------------------------------------------------
// Stencil-sum Fourier symbols for the Q1 discretization.
// ---------------------------------------------------------------------------

const K_STENCIL: [[f64; 3]; 3] = [
    [-1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0],
    [-1.0 / 3.0, 8.0 / 3.0, -1.0 / 3.0],
    [-1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0],
];

const M_STENCIL_36: [[f64; 3]; 3] = [
    [1.0, 4.0, 1.0],
    [4.0, 16.0, 4.0],
    [1.0, 4.0, 1.0],
];

const P_STENCIL_4: [[f64; 3]; 3] = [
    [1.0, 2.0, 1.0],
    [2.0, 4.0, 2.0],
    [1.0, 2.0, 1.0],
];

fn stencil_sum(st: &[[f64; 3]; 3], theta: (f64, f64)) -> C64 {
    let mut acc = c(0.0, 0.0);
    for (iy, row) in st.iter().enumerate() {
        let dy = iy as f64 - 1.0;
        for (ix, &v) in row.iter().enumerate() {
            let dx = ix as f64 - 1.0;
            let phase = theta.0 * dx + theta.1 * dy;
            acc += c(0.0, phase).exp() * v;
        }
    }
    acc
}

/// Fine-grid operator symbol at frequency θ for given λh².
pub fn oracle_fine(theta: (f64, f64), lam_h2: C64) -> C64 {
    stencil_sum(&K_STENCIL, theta) - lam_h2 / 36.0 * stencil_sum(&M_STENCIL_36, theta)
}

/// Rediscretized coarse operator symbol: doubled angle, (2h)² mass weight.
pub fn oracle_coarse(theta: (f64, f64), lam_h2: C64) -> C64 {
    oracle_fine((2.0 * theta.0, 2.0 * theta.1), 4.0 * lam_h2)
}

/// Damped-Jacobi symbol 1 − ω·L̃(θ)/D with D the operator diagonal.
pub fn oracle_smoother(theta: (f64, f64), lam_h2: C64, omega: f64) -> C64 {
    let diag = c(8.0 / 3.0, 0.0) - lam_h2 * (16.0 / 36.0);
    c(1.0, 0.0) - oracle_fine(theta, lam_h2) * omega / diag
}

/// Bilinear prolongation symbol; the restriction symbol is a quarter of it.
pub fn oracle_prolongation(theta: (f64, f64)) -> C64 {
    let mut acc = c(0.0, 0.0);
    for (iy, row) in P_STENCIL_4.iter().enumerate() {
        let dy = iy as f64 - 1.0;
        for (ix, &v) in row.iter().enumerate() {
            let dx = ix as f64 - 1.0;
            let phase = theta.0 * dx + theta.1 * dy;
            acc += c(0.0, phase).exp() * (v / 4.0);
        }
    }
    acc
}

/// The four harmonics of a low frequency, shifted toward zero: the
/// complement entries add π for negative components and subtract π for
/// positive ones, ordered [(0,0), (1,1), (1,0), (0,1)].
pub fn oracle_harmonics(theta: (f64, f64)) -> [(f64, f64); 4] {
    let shift = |t: f64| if t < 0.0 { t + std::f64::consts::PI } else { t - std::f64::consts::PI };
    [
        theta,
        (shift(theta.0), shift(theta.1)),
        (shift(theta.0), theta.1),
        (theta.0, shift(theta.1)),
    ]
}

// ---------------------------------------------------------------------------
// 4×4 complex helpers for symbol-level checks.
// ---------------------------------------------------------------------------

pub type M4 = [[C64; 4]; 4];

pub fn m4_mul(a: &M4, b: &M4) -> M4 {
    let mut out = [[c(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = c(0.0, 0.0);
            for l in 0..4 {
                s += a[i][l] * b[l][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn m4_max_abs(a: &M4) -> f64 {
    a.iter()
        .flatten()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}

pub fn m4_diff_max(a: &M4, b: &M4) -> f64 {
    let mut m = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Composite Simpson integration oracle on [0, 1]².
// ---------------------------------------------------------------------------

/// Composite Simpson rule with `n` subintervals (even) per direction over
/// [x0, x1] × [y0, y1].
pub fn simpson2d(
    f: impl Fn(f64, f64) -> f64,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    n: usize,
) -> f64 {
    assert!(n % 2 == 0 && n >= 2);
    let hx = (x1 - x0) / n as f64;
    let hy = (y1 - y0) / n as f64;
    let wt = |i: usize| -> f64 {
        if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let mut acc = 0.0;
    for iy in 0..=n {
        let y = y0 + iy as f64 * hy;
        let mut row = 0.0;
        for ix in 0..=n {
            let x = x0 + ix as f64 * hx;
            row += wt(ix) * f(x, y);
        }
        acc += wt(iy) * row;
    }
    acc * hx * hy / 9.0
}

// ---------------------------------------------------------------------------
// Double-loop regression-loss oracle.
// ---------------------------------------------------------------------------

pub struct OracleSample {
    pub k: f64,
    pub ell: u32,
    pub p: usize,
    pub sigma_hat: f64,
}

/// Direct evaluation of the shift map from raw coefficients.
pub fn oracle_sigma_map(k: f64, ell: u32, kc0: f64, kc1: f64, a0: f64, a1: f64) -> f64 {
    let l = ell as f64;
    let k_crit = kc1 * (kc0 * l).exp();
    let alpha = a1 * (a0 * l).exp();
    let sigma = 2.0 - (-alpha * (k - k_crit)).exp();
    sigma.clamp(1.0, 2.0)
}

/// Weighted sum of squares with w_{ℓ,p} = N_{ℓ,p}/|D|, recomputed per sample
/// by brute-force counting over the whole dataset.
pub fn oracle_regression_loss(
    samples: &[OracleSample],
    order: usize,
    kc0: f64,
    kc1: f64,
    a0: f64,
    a1: f64,
) -> f64 {
    let total = samples.len() as f64;
    let mut loss = 0.0;
    for s in samples {
        if s.p != order {
            continue;
        }
        let mut count = 0usize;
        for t in samples {
            if t.ell == s.ell && t.p == s.p {
                count += 1;
            }
        }
        let w = count as f64 / total;
        let model = oracle_sigma_map(s.k, s.ell, kc0, kc1, a0, a1);
        let r = s.sigma_hat - model;
        loss += r * r / (w * w);
    }
    loss
}
