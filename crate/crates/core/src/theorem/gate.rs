//! Deterministic gates `X = f(U,V)` and their reduction to canonical cases.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::BroadcastChannel;

/// A deterministic map from `(u, v)` to an input symbol.
///
/// The table is indexed by `u * v_size + v`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gate {
    u_size: usize,
    v_size: usize,
    x_size: usize,
    table: Vec<usize>,
}

impl Gate {
    pub fn new(u_size: usize, v_size: usize, x_size: usize, table: Vec<usize>) -> Result<Self> {
        if u_size == 0 || v_size == 0 || x_size == 0 {
            return Err(Error::InvalidGate("empty alphabet".into()));
        }
        if table.len() != u_size * v_size {
            return Err(Error::InvalidGate(format!(
                "table has {} entries, expected {}",
                table.len(),
                u_size * v_size
            )));
        }
        if let Some(bad) = table.iter().find(|&&x| x >= x_size) {
            return Err(Error::InvalidGate(format!(
                "symbol {bad} outside X alphabet of size {x_size}"
            )));
        }
        Ok(Self {
            u_size,
            v_size,
            x_size,
            table,
        })
    }

    /// Binary gate `{0,1}^2 -> {0,1}`; bit `2u + v` of `id` is `f(u, v)`.
    pub fn binary(id: u8) -> Self {
        assert!(id < 16, "binary gate id must be < 16");
        Self {
            u_size: 2,
            v_size: 2,
            x_size: 2,
            table: (0..4).map(|k| ((id >> k) & 1) as usize).collect(),
        }
    }

    pub const ZERO: u8 = 0b0000;
    pub const ONE: u8 = 0b1111;
    pub const PASS_U: u8 = 0b1100;
    pub const PASS_V: u8 = 0b1010;
    pub const AND: u8 = 0b1000;
    pub const OR: u8 = 0b1110;
    pub const XOR: u8 = 0b0110;

    pub fn all_binary() -> Vec<Gate> {
        (0..16).map(Gate::binary).collect()
    }

    pub fn binary_id(&self) -> Option<u8> {
        if self.u_size != 2 || self.v_size != 2 || self.x_size != 2 {
            return None;
        }
        Some(
            self.table
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, &x)| acc | ((x as u8) << k)),
        )
    }

    pub fn u_size(&self) -> usize {
        self.u_size
    }

    pub fn v_size(&self) -> usize {
        self.v_size
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    #[inline]
    pub fn eval(&self, u: usize, v: usize) -> usize {
        self.table[u * self.v_size + v]
    }

    /// Human readable name for binary gates, table dump otherwise.
    pub fn name(&self) -> String {
        match self.binary_id() {
            Some(id) => BINARY_NAMES[id as usize].to_string(),
            None => format!("{:?}", self.table),
        }
    }
}

const BINARY_NAMES: [&str; 16] = [
    "ZERO",
    "NOR",
    "NOT_U_AND_V",
    "NOT_U",
    "U_AND_NOT_V",
    "NOT_V",
    "XOR",
    "NAND",
    "AND",
    "XNOR",
    "V",
    "NOT_U_OR_V",
    "U",
    "U_OR_NOT_V",
    "OR",
    "ONE",
];

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// The four representatives every binary gate reduces to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CaseId {
    Const,
    Pass,
    And,
    Xor,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [CaseId::Const, CaseId::Pass, CaseId::And, CaseId::Xor];

    pub fn representative(self) -> Gate {
        Gate::binary(match self {
            CaseId::Const => Gate::ZERO,
            CaseId::Pass => Gate::PASS_U,
            CaseId::And => Gate::AND,
            CaseId::Xor => Gate::XOR,
        })
    }
}

/// A relabeling of `(U, V, X)` for binary alphabets.
///
/// The new pair is obtained by optionally swapping `(U, V)` and then
/// complementing each coordinate. Swapping the auxiliaries also swaps the
/// receivers; complementing `X` exchanges the channel rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Relabeling {
    pub swap_uv: bool,
    pub flip_u: bool,
    pub flip_v: bool,
    pub flip_x: bool,
}

impl Relabeling {
    /// Enumerates all 16 relabelings; those without channel changes come first.
    pub fn all() -> impl Iterator<Item = Relabeling> {
        (0..16u8).map(|b| Relabeling {
            flip_x: b & 8 != 0,
            swap_uv: b & 4 != 0,
            flip_u: b & 2 != 0,
            flip_v: b & 1 != 0,
        })
    }

    /// Image of cell `(u, v)`.
    #[inline]
    pub fn map_cell(&self, u: usize, v: usize) -> (usize, usize) {
        let (a, b) = if self.swap_uv { (v, u) } else { (u, v) };
        (a ^ self.flip_u as usize, b ^ self.flip_v as usize)
    }

    /// `cell_map[2u+v]` is the index of the image cell.
    pub fn cell_map(&self) -> [usize; 4] {
        let mut m = [0; 4];
        for u in 0..2 {
            for v in 0..2 {
                let (a, b) = self.map_cell(u, v);
                m[2 * u + v] = 2 * a + b;
            }
        }
        m
    }

    /// Moves a 2x2 table of masses along the relabeling.
    pub fn transport_puv(&self, puv: &[f64; 4]) -> [f64; 4] {
        let m = self.cell_map();
        let mut out = [0.0; 4];
        for k in 0..4 {
            out[m[k]] = puv[k];
        }
        out
    }

    /// Inverse transport of a 2x2 table.
    pub fn pull_back_puv(&self, puv: &[f64; 4]) -> [f64; 4] {
        let m = self.cell_map();
        let mut out = [0.0; 4];
        for k in 0..4 {
            out[k] = puv[m[k]];
        }
        out
    }

    pub fn transport_gate(&self, g: &Gate) -> Gate {
        let m = self.cell_map();
        let mut table = vec![0; 4];
        for k in 0..4 {
            table[m[k]] = g.table[k] ^ self.flip_x as usize;
        }
        Gate {
            u_size: 2,
            v_size: 2,
            x_size: 2,
            table,
        }
    }

    pub fn transport_channel(&self, bc: &BroadcastChannel) -> BroadcastChannel {
        let swapped = if self.swap_uv {
            bc.swap_receivers()
        } else {
            bc.clone()
        };
        if self.flip_x {
            swapped.flip_inputs()
        } else {
            swapped
        }
    }
}

/// Result of reducing a gate to its canonical case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalCase {
    pub case_id: CaseId,
    pub relabeling: Relabeling,
    /// Set when the reduction complements `X` (e.g. `X = U or V` becomes an AND
    /// gate on the channel with exchanged rows).
    pub flip_channel: bool,
    /// `cell_map[2u+v]`: cell of the canonical joint receiving `p(u, v)`.
    pub cell_map: [usize; 4],
}

/// Reduces a binary gate to CONST, PASS, AND or XOR.
///
/// Relabelings are tried in a fixed order that prefers leaving the channel
/// untouched, so the result is deterministic.
pub fn gate_canonicalize(g: &Gate) -> Result<CanonicalCase> {
    if g.binary_id().is_none() {
        return Err(Error::InvalidGate(format!(
            "canonicalization needs a binary gate, got {}",
            g.name()
        )));
    }
    for r in Relabeling::all() {
        let image = r.transport_gate(g);
        for case_id in CaseId::ALL {
            if image == case_id.representative() {
                return Ok(CanonicalCase {
                    case_id,
                    relabeling: r,
                    flip_channel: r.flip_x,
                    cell_map: r.cell_map(),
                });
            }
        }
    }
    unreachable!("every binary gate reduces to one of the four cases")
}
