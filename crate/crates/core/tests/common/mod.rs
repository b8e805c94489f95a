//! Reference computations written directly against the full tensor
//! `p(u, v, x, y, z) = p(u, v, x) p(y|x) p(z|x)`, sharing no code with the crate.
#![allow(dead_code)]

use binbc::info::BroadcastChannel;

pub fn entropy_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&m| m > 0.0).map(|&m| -m * m.log2()).sum()
}

pub fn binary_entropy(p: f64) -> f64 {
    entropy_bits(&[p, 1.0 - p])
}

/// Dense `p(u, v, x, y, z)`.
pub struct Tensor {
    dims: [usize; 5],
    data: Vec<f64>,
}

pub const U: usize = 0;
pub const V: usize = 1;
pub const X: usize = 2;
pub const Y: usize = 3;
pub const Z: usize = 4;

impl Tensor {
    /// `puvx` is row-major over `(u, v, x)`; rows of `y` and `z` are `p(.|x)`.
    pub fn new(puvx: &[f64], nu: usize, nv: usize, y: &[Vec<f64>], z: &[Vec<f64>]) -> Self {
        let nx = y.len();
        let (ny, nz) = (y[0].len(), z[0].len());
        assert_eq!(puvx.len(), nu * nv * nx);
        let mut data = Vec::with_capacity(puvx.len() * ny * nz);
        for &m in puvx {
            let x = data.len() / (ny * nz) % nx;
            for a in 0..ny {
                for b in 0..nz {
                    data.push(m * y[x][a] * z[x][b]);
                }
            }
        }
        Self { dims: [nu, nv, nx, ny, nz], data }
    }

    pub fn of_channel(puvx: &[f64], nu: usize, nv: usize, bc: &BroadcastChannel) -> Self {
        let rows = |m: &binbc::info::TransitionMatrix| -> Vec<Vec<f64>> {
            (0..m.input_size()).map(|x| m.row(x).to_vec()).collect()
        };
        Self::new(puvx, nu, nv, &rows(bc.to_y()), &rows(bc.to_z()))
    }

    /// Entropy of the marginal on `axes`.
    pub fn h(&self, axes: &[usize]) -> f64 {
        let mut sizes = 1;
        for &a in axes {
            sizes *= self.dims[a];
        }
        let mut marginal = vec![0.0; sizes];
        let mut idx = [0usize; 5];
        for &m in &self.data {
            let mut key = 0;
            for &a in axes {
                key = key * self.dims[a] + idx[a];
            }
            marginal[key] += m;
            for d in (0..5).rev() {
                idx[d] += 1;
                if idx[d] < self.dims[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        entropy_bits(&marginal)
    }

    pub fn mi(&self, a: &[usize], b: &[usize]) -> f64 {
        let ab: Vec<usize> = a.iter().chain(b).copied().collect();
        self.h(a) + self.h(b) - self.h(&ab)
    }

    /// `I(a; b | c)`.
    pub fn cmi(&self, a: &[usize], b: &[usize], c: &[usize]) -> f64 {
        let cat = |xs: &[&[usize]]| -> Vec<usize> { xs.iter().flat_map(|s| s.iter().copied()).collect() };
        self.h(&cat(&[a, c])) + self.h(&cat(&[b, c])) - self.h(&cat(&[a, b, c])) - self.h(c)
    }

    pub fn lhs(&self) -> f64 {
        self.mi(&[U], &[Y]) + self.mi(&[V], &[Z]) - self.mi(&[U], &[V])
    }

    pub fn rhs(&self) -> f64 {
        self.mi(&[X], &[Y]).max(self.mi(&[X], &[Z]))
    }

    pub fn margin(&self) -> f64 {
        self.rhs() - self.lhs()
    }

    /// `min{ I(U;Y) + I(V;Z|U), I(V;Z) + I(U;Y|V) }`.
    pub fn outer(&self) -> f64 {
        let t1 = self.mi(&[U], &[Y]) + self.cmi(&[V], &[Z], &[U]);
        let t2 = self.mi(&[V], &[Z]) + self.cmi(&[U], &[Y], &[V]);
        t1.min(t2)
    }
}

/// `p(u, v, x)` for a deterministic gate table over `|U| x |V|`.
pub fn gate_triple(puv: &[f64], table: &[usize], nx: usize) -> Vec<f64> {
    let mut out = vec![0.0; puv.len() * nx];
    for (c, (&m, &x)) in puv.iter().zip(table).enumerate() {
        out[c * nx + x] = m;
    }
    out
}

/// `I(X;out)` for a binary input with `P(X=1) = q` through rows `r0`, `r1`.
pub fn binary_input_mi(q: f64, r0: &[f64], r1: &[f64]) -> f64 {
    let out: Vec<f64> = r0.iter().zip(r1).map(|(a, b)| (1.0 - q) * a + q * b).collect();
    entropy_bits(&out) - (1.0 - q) * entropy_bits(r0) - q * entropy_bits(r1)
}

/// Randomized time-division objective from first principles.
pub fn rtd_value(p0: f64, q0: f64, q1: f64, bc: &BroadcastChannel) -> f64 {
    let (a0, a1) = (bc.to_y().row(0), bc.to_y().row(1));
    let (b0, b1) = (bc.to_z().row(0), bc.to_z().row(1));
    let p1 = 1.0 - p0;
    let q = p0 * q0 + p1 * q1;
    // I(W;Y) = I(X;Y) - I(X;Y|W) for W -> X -> Y
    let iy = binary_input_mi(q, a0, a1) - p0 * binary_input_mi(q0, a0, a1) - p1 * binary_input_mi(q1, a0, a1);
    let iz = binary_input_mi(q, b0, b1) - p0 * binary_input_mi(q0, b0, b1) - p1 * binary_input_mi(q1, b0, b1);
    iy.min(iz) + p0 * binary_input_mi(q0, a0, a1) + p1 * binary_input_mi(q1, b0, b1)
}

/// Dense grid over `(q0, q1)` with a ternary search over `p0` (the objective is
/// concave in `p0`).
pub fn rtd_grid_max(bc: &BroadcastChannel, steps: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..=steps {
        for j in 0..=steps {
            let (q0, q1) = (i as f64 / steps as f64, j as f64 / steps as f64);
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..100 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if rtd_value(m1, q0, q1, bc) < rtd_value(m2, q0, q1, bc) {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
            let v = rtd_value(0.5 * (lo + hi), q0, q1, bc)
                .max(rtd_value(0.0, q0, q1, bc))
                .max(rtd_value(1.0, q0, q1, bc));
            best = best.max(v);
        }
    }
    best
}
