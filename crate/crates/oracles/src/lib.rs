//! Reference solutions for the built-in problems, computed by brute force or
//! closed forms on plain `f64` arrays. Nothing here depends on the solver.

pub type Mat3 = [[f64; 3]; 3];

fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Cramer's rule for a 3×3 system.
pub fn cramer3(a: &Mat3, b: [f64; 3]) -> [f64; 3] {
    let d = det3(a);
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut ak = *a;
        for i in 0..3 {
            ak[i][k] = b[i];
        }
        *o = det3(&ak) / d;
    }
    out
}

/// `min ½xᵀQx + cᵀx` s.t. `aᵀx = b` in two variables, as `(x, y)`.
pub fn eq_qp_2(q: [[f64; 2]; 2], c: [f64; 2], a: [f64; 2], b: f64) -> ([f64; 2], f64) {
    let k = [
        [q[0][0], q[0][1], a[0]],
        [q[1][0], q[1][1], a[1]],
        [a[0], a[1], 0.0],
    ];
    let s = cramer3(&k, [-c[0], -c[1], b]);
    ([s[0], s[1]], s[2])
}

pub fn rosenbrock(x: f64, y: f64) -> f64 {
    (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2)
}

/// Best point of the unit disk on a uniform grid of spacing `h`.
pub fn rosenbrock_disk_grid(h: f64) -> [f64; 2] {
    let n = (2.0 / h).round() as i64;
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for i in 0..=n {
        let x = -1.0 + i as f64 * h;
        for j in 0..=n {
            let y = -1.0 + j as f64 * h;
            if x * x + y * y <= 1.0 {
                let f = rosenbrock(x, y);
                if f < best.0 {
                    best = (f, [x, y]);
                }
            }
        }
    }
    best.1
}

/// Golden-section search on the boundary angle around a grid point.
pub fn polish_on_circle(p: [f64; 2], half_width: f64) -> [f64; 2] {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let th = p[1].atan2(p[0]);
    let f = |t: f64| rosenbrock(t.cos(), t.sin());
    let (mut lo, mut hi) = (th - half_width, th + half_width);
    while hi - lo > 1e-14 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let t = 0.5 * (lo + hi);
    [t.cos(), t.sin()]
}

/// Multiplier of the active disk constraint from `∇f + 2z x = 0`.
pub fn disk_multiplier(p: [f64; 2]) -> f64 {
    let (x, y) = (p[0], p[1]);
    let gx = -2.0 * (1.0 - x) - 400.0 * x * (y - x * x);
    let gy = 200.0 * (y - x * x);
    -(gx * x + gy * y) / (2.0 * (x * x + y * y))
}

/// Double integrator tracking problem for the dynamic-programming oracle.
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub n: usize,
    pub dt: f64,
    pub u_max: f64,
    pub target: f64,
    pub w_track: f64,
    pub w_terminal: f64,
    pub w_control: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    fn at(&self, i: usize) -> f64 {
        self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
    }

    /// Cell index and weight, clamped to the grid.
    fn locate(&self, v: f64) -> (usize, f64) {
        let s = ((v - self.lo) / (self.hi - self.lo) * (self.n - 1) as f64).clamp(0.0, (self.n - 1) as f64);
        let i = (s.floor() as usize).min(self.n - 2);
        (i, s - i as f64)
    }
}

fn interp(v: &[f64], gp: &Grid, gv: &Grid, p: f64, q: f64) -> f64 {
    let (i, a) = gp.locate(p);
    let (j, b) = gv.locate(q);
    let at = |i: usize, j: usize| v[i * gv.n + j];
    (1.0 - a) * ((1.0 - b) * at(i, j) + b * at(i, j + 1)) + a * ((1.0 - b) * at(i + 1, j) + b * at(i + 1, j + 1))
}

/// Backward dynamic programming over a `(p, v)` grid with `n_controls`
/// evenly spaced controls in `[−u_max, u_max]`, then a forward rollout from
/// rest. Returns the control sequence.
pub fn integrator_dp(sys: &Integrator, gp: Grid, gv: Grid, n_controls: usize) -> Vec<f64> {
    let controls: Vec<f64> = (0..n_controls)
        .map(|i| -sys.u_max + 2.0 * sys.u_max * i as f64 / (n_controls - 1) as f64)
        .collect();
    let stage = |p1: f64, u: f64| 0.5 * sys.w_track * (p1 - sys.target).powi(2) + 0.5 * sys.w_control * u * u;
    let mut value = vec![0.0; gp.n * gv.n];
    for i in 0..gp.n {
        for j in 0..gv.n {
            let (p, v) = (gp.at(i), gv.at(j));
            value[i * gv.n + j] = 0.5 * sys.w_terminal * ((p - sys.target).powi(2) + v * v);
        }
    }
    let best = |value: &[f64], p: f64, v: f64| -> (f64, f64) {
        let mut out = (f64::INFINITY, 0.0);
        for &u in &controls {
            let (p1, v1) = (p + sys.dt * v, v + sys.dt * u);
            let c = stage(p1, u) + interp(value, &gp, &gv, p1, v1);
            if c < out.0 {
                out = (c, u);
            }
        }
        out
    };
    let mut tables = vec![value];
    for _ in 0..sys.n {
        let next = tables.last().unwrap();
        let mut cur = vec![0.0; gp.n * gv.n];
        for i in 0..gp.n {
            for j in 0..gv.n {
                cur[i * gv.n + j] = best(next, gp.at(i), gv.at(j)).0;
            }
        }
        tables.push(cur);
    }
    let (mut p, mut v) = (0.0, 0.0);
    let mut us = Vec::with_capacity(sys.n);
    for k in 0..sys.n {
        let u = best(&tables[sys.n - 1 - k], p, v).1;
        p += sys.dt * v;
        v += sys.dt * u;
        us.push(u);
    }
    us
}

fn mul3(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn transpose(a: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn se2_matrix(x: f64, y: f64, th: f64) -> Mat3 {
    [[th.cos(), -th.sin(), x], [th.sin(), th.cos(), y], [0.0, 0.0, 1.0]]
}

fn se2_inverse(m: &Mat3) -> Mat3 {
    let (c, s) = (m[0][0], m[1][0]);
    let (x, y) = (m[0][2], m[1][2]);
    [[c, s, -c * x - s * y], [-s, c, s * x - c * y], [0.0, 0.0, 1.0]]
}

fn se2_exp(v: [f64; 3]) -> Mat3 {
    let t = v[2];
    let (a, b) = if t.abs() < 1e-12 { (1.0, 0.0) } else { (t.sin() / t, (1.0 - t.cos()) / t) };
    se2_matrix(a * v[0] - b * v[1], b * v[0] + a * v[1], t)
}

fn se2_log(m: &Mat3) -> [f64; 3] {
    let t = m[1][0].atan2(m[0][0]);
    let (a, b) = if t.abs() < 1e-12 { (1.0, 0.0) } else { (t.sin() / t, (1.0 - t.cos()) / t) };
    let d = a * a + b * b;
    let (x, y) = (m[0][2], m[1][2]);
    [(a * x + b * y) / d, (-b * x + a * y) / d, t]
}

/// Fixed point of `X ← X exp(mean log(X⁻¹Pᵢ))`, returned as `(x, y, θ)`.
pub fn se2_group_barycenter(poses: &[[f64; 3]]) -> [f64; 3] {
    let ps: Vec<Mat3> = poses.iter().map(|p| se2_matrix(p[0], p[1], p[2])).collect();
    let mut x = se2_matrix(0.0, 0.0, 0.0);
    for _ in 0..500 {
        let xi = se2_inverse(&x);
        let mut m = [0.0; 3];
        for p in &ps {
            let l = se2_log(&mul3(&xi, p));
            for k in 0..3 {
                m[k] += l[k] / ps.len() as f64;
            }
        }
        x = mul3(&x, &se2_exp(m));
    }
    [x[0][2], x[1][2], x[1][0].atan2(x[0][0])]
}

/// Σ log(X⁻¹Pᵢ) at `(x, y, θ)`.
pub fn se2_log_sum(at: [f64; 3], poses: &[[f64; 3]]) -> [f64; 3] {
    let xi = se2_inverse(&se2_matrix(at[0], at[1], at[2]));
    let mut s = [0.0; 3];
    for p in poses {
        let l = se2_log(&mul3(&xi, &se2_matrix(p[0], p[1], p[2])));
        for k in 0..3 {
            s[k] += l[k];
        }
    }
    s
}

/// Rodrigues' formula.
pub fn so3_exp(w: [f64; 3]) -> Mat3 {
    let t = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let k: Mat3 = [[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]];
    let k2 = mul3(&k, &k);
    let (a, b) = if t < 1e-8 { (1.0, 0.5) } else { (t.sin() / t, (1.0 - t.cos()) / (t * t)) };
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = if i == j { 1.0 } else { 0.0 } + a * k[i][j] + b * k2[i][j];
        }
    }
    r
}

/// Rotation vector of a rotation by less than π.
pub fn so3_log(r: &Mat3) -> [f64; 3] {
    let c = ((r[0][0] + r[1][1] + r[2][2] - 1.0) / 2.0).clamp(-1.0, 1.0);
    let t = c.acos();
    let f = if t < 1e-8 { 0.5 } else { t / (2.0 * t.sin()) };
    [f * (r[2][1] - r[1][2]), f * (r[0][2] - r[2][0]), f * (r[1][0] - r[0][1])]
}

/// Karcher mean by `R ← R exp(mean log(RᵀPᵢ))`, as a quaternion `(x, y, z, w)`
/// with `w ≥ 0`.
pub fn so3_karcher_mean(rotvecs: &[[f64; 3]]) -> [f64; 4] {
    let ps: Vec<Mat3> = rotvecs.iter().map(|w| so3_exp(*w)).collect();
    let mut r = so3_exp([0.0; 3]);
    for _ in 0..500 {
        let rt = transpose(&r);
        let mut m = [0.0; 3];
        for p in &ps {
            let l = so3_log(&mul3(&rt, p));
            for k in 0..3 {
                m[k] += l[k] / ps.len() as f64;
            }
        }
        r = mul3(&r, &so3_exp(m));
    }
    let w = so3_log(&r);
    let t = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let s = if t < 1e-12 { 0.5 } else { (t / 2.0).sin() / t };
    [s * w[0], s * w[1], s * w[2], (t / 2.0).cos()]
}
