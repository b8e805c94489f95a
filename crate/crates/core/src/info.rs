//! Finite-alphabet information measures and channel composition.
//!
//! All quantities are in bits. The conventions `0 log 0 = 0` and
//! `0 log (0/q) = 0` are applied literally, so channels and joints with zero
//! entries are handled without any epsilon clamping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating internally generated distributions.
pub const INTERNAL_TOL: f64 = 1e-12;

/// Tolerance used when ingesting user supplied (decimal) probabilities.
pub const INGEST_TOL: f64 = 1e-9;

/// `-p log2 p` with the `0 log 0 = 0` convention.
#[inline]
pub fn neg_plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Entropy in bits of a slice of masses (no validation).
#[inline]
pub fn entropy_of(masses: &[f64]) -> f64 {
    masses.iter().map(|&p| neg_plogp(p)).sum()
}

/// Probability mass function over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution {
    masses: Vec<f64>,
}

impl Distribution {
    /// Builds a distribution, requiring it to be valid at [`INTERNAL_TOL`].
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        check_simplex(&masses, INTERNAL_TOL)?;
        Ok(Self { masses })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        Ok(Self {
            masses: vec![1.0 / n as f64; n],
        })
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::DimensionMismatch {
                context: "point mass",
                expected: n,
                found: at,
            });
        }
        let mut masses = vec![0.0; n];
        masses[at] = 1.0;
        Ok(Self { masses })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn alphabet_size(&self) -> usize {
        self.masses.len()
    }

    pub fn into_masses(self) -> Vec<f64> {
        self.masses
    }
}

fn check_simplex(masses: &[f64], tolerance: f64) -> Result<f64> {
    if masses.is_empty() {
        return Err(Error::Empty);
    }
    for (index, &value) in masses.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
        if value < -tolerance {
            return Err(Error::NegativeMass { index, value });
        }
    }
    let sum: f64 = masses.iter().sum();
    if (sum - 1.0).abs() > tolerance {
        return Err(Error::SumDeviation { sum });
    }
    Ok(sum)
}

/// Validates raw probabilities and returns a normalized [`Distribution`].
///
/// Entries in `[-tolerance, 0)` are clamped to zero and the result is
/// renormalized. Input that is already an exact distribution is returned
/// unchanged.
pub fn validate_distribution(raw: &[f64], tolerance: f64) -> Result<Distribution> {
    check_simplex(raw, tolerance)?;
    let exact = raw.iter().all(|&p| p >= 0.0) && raw.iter().sum::<f64>() == 1.0;
    if exact {
        return Ok(Distribution {
            masses: raw.to_vec(),
        });
    }
    let clamped: Vec<f64> = raw.iter().map(|&p| p.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if total <= 0.0 {
        return Err(Error::SumDeviation { sum: total });
    }
    Ok(Distribution {
        masses: clamped.into_iter().map(|p| p / total).collect(),
    })
}

/// Entropy `H(d)` in bits.
pub fn entropy(d: &Distribution) -> f64 {
    entropy_of(&d.masses)
}

/// Kullback-Leibler divergence `D(p || q)` in bits.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.alphabet_size() != q.alphabet_size() {
        return Err(Error::DimensionMismatch {
            context: "kl_divergence",
            expected: p.alphabet_size(),
            found: q.alphabet_size(),
        });
    }
    let mut total = 0.0;
    for (index, (&pi, &qi)) in p.masses.iter().zip(&q.masses).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::SupportViolation { index });
            }
            total += pi * (pi / qi).log2();
        }
    }
    Ok(total.max(0.0))
}

/// Row-stochastic matrix `p(out | in)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    rows: Vec<Distribution>,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Distribution>) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty)?.alphabet_size();
        for row in &rows {
            if row.alphabet_size() != first {
                return Err(Error::DimensionMismatch {
                    context: "transition matrix row",
                    expected: first,
                    found: row.alphabet_size(),
                });
            }
        }
        Ok(Self { rows })
    }

    /// Builds a matrix from raw rows, validating each at `tolerance`.
    pub fn from_rows(rows: &[Vec<f64>], tolerance: f64) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| validate_distribution(r, tolerance))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|i| Distribution::point_mass(n, i))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.rows[0].alphabet_size()
    }

    pub fn rows(&self) -> &[Distribution] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &[f64] {
        self.rows[x].masses()
    }

    #[inline]
    pub fn prob(&self, x: usize, out: usize) -> f64 {
        self.rows[x].masses[out]
    }

    /// Reorders the input symbols: row `x` of the result is row `perm[x]`.
    pub fn permute_inputs(&self, perm: &[usize]) -> Self {
        Self {
            rows: perm.iter().map(|&x| self.rows[x].clone()).collect(),
        }
    }

    /// Reorders the output symbols: column `o` of the result is column `perm[o]`.
    pub fn permute_outputs(&self, perm: &[usize]) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| Distribution {
                    masses: perm.iter().map(|&o| r.masses[o]).collect(),
                })
                .collect(),
        }
    }

    /// True when every row equals the first one up to `tol` (output independent of input).
    pub fn is_input_independent(&self, tol: f64) -> bool {
        let first = self.row(0);
        self.rows
            .iter()
            .all(|r| r.masses.iter().zip(first).all(|(a, b)| (a - b).abs() <= tol))
    }
}

/// Two-receiver broadcast channel described by its marginals `p(y|x)` and `p(z|x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BroadcastChannel {
    to_y: TransitionMatrix,
    to_z: TransitionMatrix,
}

impl BroadcastChannel {
    pub fn new(to_y: TransitionMatrix, to_z: TransitionMatrix) -> Result<Self> {
        if to_y.input_size() != to_z.input_size() {
            return Err(Error::DimensionMismatch {
                context: "broadcast channel inputs",
                expected: to_y.input_size(),
                found: to_z.input_size(),
            });
        }
        Ok(Self { to_y, to_z })
    }

    pub fn input_size(&self) -> usize {
        self.to_y.input_size()
    }

    pub fn to_y(&self) -> &TransitionMatrix {
        &self.to_y
    }

    pub fn to_z(&self) -> &TransitionMatrix {
        &self.to_z
    }

    pub fn require_binary(&self) -> Result<()> {
        if self.input_size() != 2 {
            return Err(Error::NonBinaryInput {
                found: self.input_size(),
            });
        }
        Ok(())
    }

    /// Exchanges the roles of the two receivers.
    pub fn swap_receivers(&self) -> Self {
        Self {
            to_y: self.to_z.clone(),
            to_z: self.to_y.clone(),
        }
    }

    /// Relabels the input alphabet: input `x` of the result behaves like input `perm[x]`.
    pub fn permute_inputs(&self, perm: &[usize]) -> Self {
        Self {
            to_y: self.to_y.permute_inputs(perm),
            to_z: self.to_z.permute_inputs(perm),
        }
    }

    /// Exchanges the two input symbols of a binary-input channel.
    pub fn flip_inputs(&self) -> Self {
        let perm: Vec<usize> = (0..self.input_size()).rev().collect();
        self.permute_inputs(&perm)
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("channel serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Adds an input symbol that behaves exactly like input 0.
    pub fn pad_input(&self) -> Self {
        let mut perm: Vec<usize> = (0..self.input_size()).collect();
        perm.push(0);
        self.permute_inputs(&perm)
    }
}

/// Dense joint pmf over a product of finite alphabets, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    dims: Vec<usize>,
    masses: Vec<f64>,
}

impl JointPmf {
    pub fn new(dims: Vec<usize>, masses: Vec<f64>) -> Result<Self> {
        let size: usize = dims.iter().product();
        if dims.is_empty() || size == 0 {
            return Err(Error::Empty);
        }
        if masses.len() != size {
            return Err(Error::DimensionMismatch {
                context: "joint pmf table",
                expected: size,
                found: masses.len(),
            });
        }
        check_simplex(&masses, INTERNAL_TOL)?;
        Ok(Self { dims, masses })
    }

    /// Builds a joint by evaluating `f` at every index tuple.
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let size: usize = dims.iter().product();
        let mut masses = Vec::with_capacity(size);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..size {
            masses.push(f(&idx));
            increment(&mut idx, &dims);
        }
        Self::new(dims, masses)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.masses[self.offset(idx)]
    }

    /// Marginal over `axes`, in the order given.
    pub fn marginal(&self, axes: &[usize]) -> JointPmf {
        let dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let mut out = vec![0.0; dims.iter().product()];
        let mut idx = vec![0usize; self.dims.len()];
        for &m in &self.masses {
            let o = axes
                .iter()
                .zip(&dims)
                .fold(0, |acc, (&a, &d)| acc * d + idx[a]);
            out[o] += m;
            increment(&mut idx, &self.dims);
        }
        JointPmf { dims, masses: out }
    }

    /// Flattened table as a distribution over the product alphabet.
    pub fn to_distribution(&self) -> Distribution {
        Distribution {
            masses: self.masses.clone(),
        }
    }

    /// Marginal of a single axis.
    pub fn axis_distribution(&self, axis: usize) -> Distribution {
        Distribution {
            masses: self.marginal(&[axis]).masses,
        }
    }

    /// Joint entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy_of(&self.masses)
    }
}

fn increment(idx: &mut [usize], dims: &[usize]) {
    for k in (0..dims.len()).rev() {
        idx[k] += 1;
        if idx[k] < dims[k] {
            return;
        }
        idx[k] = 0;
    }
}

fn require_rank(j: &JointPmf, rank: usize, context: &'static str) -> Result<()> {
    if j.rank() != rank {
        return Err(Error::DimensionMismatch {
            context,
            expected: rank,
            found: j.rank(),
        });
    }
    Ok(())
}

/// `I(A;B)` in bits for a two-dimensional joint.
pub fn mutual_information(j: &JointPmf) -> Result<f64> {
    require_rank(j, 2, "mutual_information")?;
    let (na, nb) = (j.dims[0], j.dims[1]);
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for a in 0..na {
        for b in 0..nb {
            let m = j.masses[a * nb + b];
            pa[a] += m;
            pb[b] += m;
        }
    }
    Ok(entropy_of(&pa) + entropy_of(&pb) - entropy_of(&j.masses))
}

/// `I(A;B|C)` in bits for a three-dimensional joint, as `sum_c p(c) I(A;B|C=c)`.
pub fn conditional_mutual_information(j: &JointPmf) -> Result<f64> {
    require_rank(j, 3, "conditional_mutual_information")?;
    let (na, nb, nc) = (j.dims[0], j.dims[1], j.dims[2]);
    let mut total = 0.0;
    for c in 0..nc {
        let pc: f64 = (0..na)
            .flat_map(|a| (0..nb).map(move |b| (a, b)))
            .map(|(a, b)| j.masses[(a * nb + b) * nc + c])
            .sum();
        if pc <= 0.0 {
            continue;
        }
        let slice: Vec<f64> = (0..na)
            .flat_map(|a| (0..nb).map(move |b| (a, b)))
            .map(|(a, b)| j.masses[(a * nb + b) * nc + c] / pc)
            .collect();
        let slice = JointPmf {
            dims: vec![na, nb],
            masses: slice,
        };
        total += pc * mutual_information(&slice)?;
    }
    Ok(total)
}

/// Joint of an input distribution and a channel: `p(x, out) = p(x) p(out|x)`.
pub fn push_through(px: &Distribution, ch: &TransitionMatrix) -> Result<JointPmf> {
    if px.alphabet_size() != ch.input_size() {
        return Err(Error::DimensionMismatch {
            context: "push_through",
            expected: ch.input_size(),
            found: px.alphabet_size(),
        });
    }
    let (nx, no) = (ch.input_size(), ch.output_size());
    let mut masses = Vec::with_capacity(nx * no);
    for x in 0..nx {
        for o in 0..no {
            masses.push(px.masses[x] * ch.prob(x, o));
        }
    }
    JointPmf::new(vec![nx, no], masses)
}

/// For a joint `p(u,v,x)` and a broadcast channel returns `p(u,y)`, `p(v,z)` and `p(x)`.
pub fn induced_pairs(
    joint_uvx: &JointPmf,
    bc: &BroadcastChannel,
) -> Result<(JointPmf, JointPmf, Distribution)> {
    require_rank(joint_uvx, 3, "induced_pairs")?;
    if joint_uvx.dims[2] != bc.input_size() {
        return Err(Error::DimensionMismatch {
            context: "induced_pairs input alphabet",
            expected: bc.input_size(),
            found: joint_uvx.dims[2],
        });
    }
    let pux = joint_uvx.marginal(&[0, 2]);
    let pvx = joint_uvx.marginal(&[1, 2]);
    let px = joint_uvx.axis_distribution(2);
    let compose = |j: &JointPmf, ch: &TransitionMatrix| -> Result<JointPmf> {
        let (na, nx, no) = (j.dims[0], j.dims[1], ch.output_size());
        let mut masses = vec![0.0; na * no];
        for a in 0..na {
            for x in 0..nx {
                let m = j.masses[a * nx + x];
                if m == 0.0 {
                    continue;
                }
                for o in 0..no {
                    masses[a * no + o] += m * ch.prob(x, o);
                }
            }
        }
        JointPmf::new(vec![na, no], masses)
    };
    Ok((compose(&pux, &bc.to_y)?, compose(&pvx, &bc.to_z)?, px))
}

/// Replaces axis `axis` (the channel input) of `joint` by the channel output:
/// `p(..., out, ...) = sum_x p(..., x, ...) p(out|x)`.
pub fn observe(joint: &JointPmf, axis: usize, ch: &TransitionMatrix) -> Result<JointPmf> {
    if axis >= joint.rank() || joint.dims[axis] != ch.input_size() {
        return Err(Error::DimensionMismatch {
            context: "observe input axis",
            expected: ch.input_size(),
            found: joint.dims.get(axis).copied().unwrap_or(0),
        });
    }
    let mut dims = joint.dims.clone();
    dims[axis] = ch.output_size();
    let inner: usize = joint.dims[axis + 1..].iter().product();
    let (nx, no) = (ch.input_size(), ch.output_size());
    let outer = joint.masses.len() / (nx * inner);
    let mut masses = vec![0.0; outer * no * inner];
    for a in 0..outer {
        for x in 0..nx {
            for b in 0..inner {
                let m = joint.masses[(a * nx + x) * inner + b];
                if m == 0.0 {
                    continue;
                }
                for o in 0..no {
                    masses[(a * no + o) * inner + b] += m * ch.prob(x, o);
                }
            }
        }
    }
    JointPmf::new(dims, masses)
}

/// `I(X;out)` in bits for input distribution `px` over `ch`.
pub fn channel_mutual_information(px: &Distribution, ch: &TransitionMatrix) -> Result<f64> {
    mutual_information(&push_through(px, ch)?)
}
