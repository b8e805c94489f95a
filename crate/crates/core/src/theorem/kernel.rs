//! Allocation-free evaluation of both sides of the inequality, used inside
//! the lattice scans. The public, validated path lives in the parent module
//! and is what every reported number is re-evaluated with.

use crate::info::{entropy_of, neg_plogp, BroadcastChannel};

/// Left side, right side and margin at one point (bits).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidePair {
    pub lhs: f64,
    pub rhs: f64,
}

impl SidePair {
    #[inline]
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Per-thread scratch for fast evaluation against one channel.
#[derive(Debug, Clone)]
pub struct MarginKernel {
    nx: usize,
    ny: usize,
    nz: usize,
    y: Vec<f64>,
    z: Vec<f64>,
    hy_rows: Vec<f64>,
    hz_rows: Vec<f64>,
    pux: Vec<f64>,
    pvx: Vec<f64>,
    puv: Vec<f64>,
    px: Vec<f64>,
}

impl MarginKernel {
    pub fn new(bc: &BroadcastChannel) -> Self {
        let nx = bc.input_size();
        let (ny, nz) = (bc.to_y().output_size(), bc.to_z().output_size());
        let flat = |m: &crate::info::TransitionMatrix| -> Vec<f64> {
            (0..nx).flat_map(|x| m.row(x).to_vec()).collect()
        };
        Self {
            nx,
            ny,
            nz,
            y: flat(bc.to_y()),
            z: flat(bc.to_z()),
            hy_rows: (0..nx).map(|x| entropy_of(bc.to_y().row(x))).collect(),
            hz_rows: (0..nx).map(|x| entropy_of(bc.to_z().row(x))).collect(),
            pux: Vec::new(),
            pvx: Vec::new(),
            puv: Vec::new(),
            px: vec![0.0; nx],
        }
    }

    fn reset(&mut self, nu: usize, nv: usize) {
        let nx = self.nx;
        self.pux.clear();
        self.pux.resize(nu * nx, 0.0);
        self.pvx.clear();
        self.pvx.resize(nv * nx, 0.0);
        self.px.iter_mut().for_each(|p| *p = 0.0);
    }

    /// Point given as `p(u, v)` (row-major, `nu x nv`) and a gate table.
    pub fn eval_gate(&mut self, nu: usize, nv: usize, puv: &[f64], table: &[usize]) -> SidePair {
        self.reset(nu, nv);
        let nx = self.nx;
        for u in 0..nu {
            for v in 0..nv {
                let m = puv[u * nv + v];
                let x = table[u * nv + v];
                self.pux[u * nx + x] += m;
                self.pvx[v * nx + x] += m;
                self.px[x] += m;
            }
        }
        let h_uv = entropy_of(puv);
        self.finish(nu, nv, h_uv)
    }

    /// Point given as a general joint `p(u, v, x)`.
    pub fn eval_triple(&mut self, nu: usize, nv: usize, puvx: &[f64]) -> SidePair {
        self.reset(nu, nv);
        let nx = self.nx;
        self.puv.clear();
        self.puv.resize(nu * nv, 0.0);
        for u in 0..nu {
            for v in 0..nv {
                for x in 0..nx {
                    let m = puvx[(u * nv + v) * nx + x];
                    self.pux[u * nx + x] += m;
                    self.pvx[v * nx + x] += m;
                    self.puv[u * nv + v] += m;
                    self.px[x] += m;
                }
            }
        }
        let h_uv = entropy_of(&self.puv);
        self.finish(nu, nv, h_uv)
    }

    fn finish(&self, nu: usize, nv: usize, h_uv: f64) -> SidePair {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        let h_out = |pax: &[f64], na: usize, ch: &[f64], no: usize| -> f64 {
            let mut h = 0.0;
            for a in 0..na {
                let row = &pax[a * nx..(a + 1) * nx];
                for o in 0..no {
                    let mut p = 0.0;
                    for x in 0..nx {
                        p += row[x] * ch[x * no + o];
                    }
                    h += neg_plogp(p);
                }
            }
            h
        };
        let h_y = h_out(&self.px, 1, &self.y, ny);
        let h_z = h_out(&self.px, 1, &self.z, nz);
        let h_uy = h_out(&self.pux, nu, &self.y, ny);
        let h_vz = h_out(&self.pvx, nv, &self.z, nz);
        let mut hy_x = 0.0;
        let mut hz_x = 0.0;
        for x in 0..nx {
            hy_x += self.px[x] * self.hy_rows[x];
            hz_x += self.px[x] * self.hz_rows[x];
        }
        SidePair {
            lhs: h_y + h_z + h_uv - h_uy - h_vz,
            rhs: (h_y - hy_x).max(h_z - hz_x),
        }
    }
}
