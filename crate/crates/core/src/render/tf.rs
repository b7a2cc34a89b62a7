use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TF_TABLE_SIZE: usize = 256;

/// Editable control node: normalized scalar value, RGB colour and opacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfNode {
    pub value: f64,
    pub color: [f64; 3],
    pub opacity: f64,
}

/// Piecewise-linear transfer function baked into a 256-entry RGBA table.
///
/// Opacities are defined for a ray step of `dt_ref` world units.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    nodes: Vec<TfNode>,
    dt_ref: f64,
    table: Vec<[f64; 4]>,
}

impl TransferFunction {
    pub fn new(nodes: Vec<TfNode>, dt_ref: f64) -> Result<Self> {
        if !(dt_ref > 0.0 && dt_ref.is_finite()) {
            return Err(Error::Parameter(format!(
                "dt_ref must be positive, got {dt_ref}"
            )));
        }
        if nodes.is_empty() {
            return Err(Error::Parameter(
                "transfer function needs at least one node".into(),
            ));
        }
        for n in &nodes {
            let in_unit = |v: f64| (0.0..=1.0).contains(&v);
            if !in_unit(n.value) || !in_unit(n.opacity) || !n.color.iter().all(|&c| in_unit(c)) {
                return Err(Error::Parameter(format!(
                    "node {n:?} has components outside [0, 1]"
                )));
            }
        }
        if nodes.windows(2).any(|w| w[1].value < w[0].value) {
            return Err(Error::Parameter(
                "transfer function nodes must be sorted by value".into(),
            ));
        }
        let table = (0..TF_TABLE_SIZE)
            .map(|i| interpolate(&nodes, i as f64 / (TF_TABLE_SIZE - 1) as f64))
            .collect();
        Ok(Self {
            nodes,
            dt_ref,
            table,
        })
    }

    pub fn nodes(&self) -> &[TfNode] {
        &self.nodes
    }

    pub fn dt_ref(&self) -> f64 {
        self.dt_ref
    }

    pub fn table(&self) -> &[[f64; 4]] {
        &self.table
    }

    /// RGBA for a normalized value, linearly interpolated between table entries.
    #[inline]
    pub fn lookup(&self, s: f64) -> [f64; 4] {
        let x = s.clamp(0.0, 1.0) * (TF_TABLE_SIZE - 1) as f64;
        let i = (x.floor() as usize).min(TF_TABLE_SIZE - 2);
        let f = x - i as f64;
        let (a, b) = (self.table[i], self.table[i + 1]);
        [
            a[0] + f * (b[0] - a[0]),
            a[1] + f * (b[1] - a[1]),
            a[2] + f * (b[2] - a[2]),
            a[3] + f * (b[3] - a[3]),
        ]
    }

    /// True when every table opacity is zero.
    pub fn is_transparent(&self) -> bool {
        self.table.iter().all(|e| e[3] == 0.0)
    }
}

fn interpolate(nodes: &[TfNode], s: f64) -> [f64; 4] {
    let rgba = |n: &TfNode| [n.color[0], n.color[1], n.color[2], n.opacity];
    let first = &nodes[0];
    let last = &nodes[nodes.len() - 1];
    if s <= first.value {
        return rgba(first);
    }
    if s >= last.value {
        return rgba(last);
    }
    let hi = nodes.partition_point(|n| n.value <= s);
    let (a, b) = (&nodes[hi - 1], &nodes[hi]);
    let span = b.value - a.value;
    let f = if span > 0.0 {
        (s - a.value) / span
    } else {
        1.0
    };
    let (ca, cb) = (rgba(a), rgba(b));
    [0, 1, 2, 3].map(|c| ca[c] + f * (cb[c] - ca[c]))
}

/// Built-in node lists: `(name, nodes)`.
pub fn presets() -> Vec<(&'static str, Vec<TfNode>)> {
    let n = |value, r, g, b, opacity| TfNode {
        value,
        color: [r, g, b],
        opacity,
    };
    vec![
        (
            "grayscale",
            vec![n(0.0, 0.0, 0.0, 0.0, 0.0), n(1.0, 1.0, 1.0, 1.0, 0.6)],
        ),
        (
            "warm",
            vec![
                n(0.0, 0.0, 0.0, 0.0, 0.0),
                n(0.3, 0.5, 0.05, 0.0, 0.02),
                n(0.6, 0.9, 0.4, 0.05, 0.15),
                n(0.85, 1.0, 0.8, 0.3, 0.4),
                n(1.0, 1.0, 1.0, 0.9, 0.6),
            ],
        ),
        (
            "spike",
            vec![
                n(0.0, 0.9, 0.9, 0.9, 0.0),
                n(0.45, 0.9, 0.9, 0.9, 0.0),
                n(0.5, 0.95, 0.85, 0.6, 0.8),
                n(0.55, 0.9, 0.9, 0.9, 0.0),
                n(1.0, 0.9, 0.9, 0.9, 0.0),
            ],
        ),
    ]
}
