//! Self-similar configurations and toppling identities.
//!
//! `M_1(x, y, z)` carries `x, y, z` at the lower-left, lower-right and top
//! corners, 3 at the bottom and left midpoints and 2 at the right midpoint.
//! `M_{n+1}(x, y, z)` is `M_n(x, 3, 3)` on the lower-left copy, `M_n(3, y, 2)`
//! on the lower-right copy and `M_n(3, 2, z)` on the top copy.

use serde::Serialize;

use crate::gasket::{
    gasket_vertices, junctions, subcopy_embedding, BoundaryCondition, Corner, GasketCoord,
    GasketGraph,
};
use crate::sandpile::{identity, is_recurrent, is_recurrent_burning, stabilize, Configuration};
use crate::{Error, Result};

/// `M_n(x, y, z)` together with its corner arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MnConfig {
    pub config: Configuration,
    pub corners: [u64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rotation {
    Ccw,
    Cw,
}

/// Values of `M_n(x, y, z)` on the full level-`n` vertex set, canonical order.
pub fn m_values(level: u32, x: u64, y: u64, z: u64) -> Result<Vec<u64>> {
    match level {
        0 => Err(Error::InvalidLevel {
            level,
            reason: "M_n is defined for n >= 1",
        }),
        1 => {
            let vertices = gasket_vertices(1);
            Ok(vertices
                .iter()
                .map(|v| match (v.a, v.b) {
                    (0, 0) => x,
                    (2, 0) => y,
                    (0, 2) => z,
                    (1, 0) | (0, 1) => 3,
                    (1, 1) => 2,
                    _ => unreachable!("level-1 vertex {v}"),
                })
                .collect())
        }
        _ => {
            let parts = [
                (Corner::LowerLeft, m_values(level - 1, x, 3, 3)?),
                (Corner::LowerRight, m_values(level - 1, 3, y, 2)?),
                (Corner::Top, m_values(level - 1, 3, 2, z)?),
            ];
            assemble(level, &parts)
        }
    }
}

/// Glues level-`(level-1)` value vectors onto the three sub-copies of level
/// `level`. Shared junction vertices must agree.
fn assemble(level: u32, parts: &[(Corner, Vec<u64>); 3]) -> Result<Vec<u64>> {
    let size = gasket_vertices(level).len();
    let mut out: Vec<Option<u64>> = vec![None; size];
    for (copy, values) in parts {
        for (small, big) in subcopy_embedding(level, *copy)?.into_iter().enumerate() {
            match out[big] {
                Some(prev) if prev != values[small] => {
                    return Err(Error::Precondition(format!(
                        "junction {} gets {} and {}",
                        gasket_vertices(level)[big],
                        prev,
                        values[small]
                    )))
                }
                _ => out[big] = Some(values[small]),
            }
        }
    }
    Ok(out.into_iter().map(|v| v.expect("sub-copies cover the gasket")).collect())
}

/// `M_n(x, y, z)` as a configuration on `G_n` with normal boundary.
pub fn build_m(level: u32, x: u64, y: u64, z: u64) -> Result<MnConfig> {
    let graph = GasketGraph::normal(level);
    Ok(MnConfig {
        config: Configuration::new(&graph, m_values(level, x, y, z)?)?,
        corners: [x, y, z],
    })
}

/// Restriction of full level-`level` values to one sub-copy.
pub fn restrict_to_subcopy(level: u32, values: &[u64], copy: Corner) -> Result<Vec<u64>> {
    Ok(subcopy_embedding(level, copy)?
        .into_iter()
        .map(|big| values[big])
        .collect())
}

/// Rotates a configuration on a normal-boundary gasket by 120 degrees.
pub fn rotate_config(graph: &GasketGraph, c: &Configuration, direction: Rotation) -> Result<Configuration> {
    c.check_graph(graph)?;
    let perm = match direction {
        Rotation::Ccw => graph.rotation_ccw()?,
        Rotation::Cw => graph.rotation_cw()?,
    };
    Ok(c.permuted(&perm))
}

/// Places `c` on the lower-left copy of level `level + 1`, its ccw rotation on
/// the lower-right copy and its cw rotation on the top copy.
pub fn match_rotated(level: u32, c: &Configuration) -> Result<Configuration> {
    let small = GasketGraph::normal(level);
    c.check_graph(&small)?;
    let plus = rotate_config(&small, c, Rotation::Ccw)?;
    let minus = rotate_config(&small, c, Rotation::Cw)?;
    let values = assemble(
        level + 1,
        &[
            (Corner::LowerLeft, c.chips().to_vec()),
            (Corner::LowerRight, plus.into_chips()),
            (Corner::Top, minus.into_chips()),
        ],
    )?;
    Configuration::new(&GasketGraph::normal(level + 1), values)
}

/// The identity of `G_level` (normal boundary) assembled from
/// `M_{level-1}(2, 2, 2)` and its two rotations, with 2 at the junctions.
pub fn build_identity_theorem(level: u32) -> Result<Configuration> {
    if level < 2 {
        return Err(Error::InvalidLevel {
            level,
            reason: "the closed-form identity needs level >= 2",
        });
    }
    let m = build_m(level - 1, 2, 2, 2)?;
    match_rotated(level - 1, &m.config)
}

/// First vertex where two configurations disagree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub index: usize,
    pub coord: GasketCoord,
    pub expected: u64,
    pub actual: u64,
}

pub fn first_mismatch(graph: &GasketGraph, expected: &[u64], actual: &[u64]) -> Option<Mismatch> {
    expected
        .iter()
        .zip(actual)
        .position(|(e, a)| e != a)
        .map(|index| Mismatch {
            index,
            coord: graph.coord(index),
            expected: expected[index],
            actual: actual[index],
        })
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingReport {
    pub level: u32,
    pub expected_gain: u64,
    pub gain: u64,
    pub pass: bool,
    pub mismatch: Option<Mismatch>,
}

/// Doubles `M_n(2, 1, 1)` and stabilizes everything but the lower-left
/// corner, which only collects chips. The corner has no outgoing edges
/// besides its two gasket edges, so this is stabilization on the gasket
/// whose sink is the lower-left corner, counting the chips that reach it.
/// Expected: the corner collects `4 * 3^n - 2` chips and the other vertices
/// return to `M_n(., 1, 1)`.
pub fn verify_doubling(level: u32) -> Result<DoublingReport> {
    let graph = GasketGraph::new(level, BoundaryCondition::CornerSink(Corner::LowerLeft));
    let full = gasket_vertices(level);
    let on_graph = |values: Vec<u64>| -> Result<Configuration> {
        let chips = full
            .iter()
            .zip(values)
            .filter(|(v, _)| graph.index_of(**v).is_some())
            .map(|(_, x)| x)
            .collect();
        Configuration::new(&graph, chips)
    };
    let doubled = on_graph(m_values(level, 2, 1, 1)?)?.scaled(2)?;
    let (out, odometer) = stabilize(&graph, &doubled, &[])?;
    let gain: u64 = (0..graph.len())
        .map(|v| graph.beta(v) as u64 * odometer.fires[v])
        .sum();
    let expected_gain = 4 * 3u64.pow(level) - 2;
    let expected = on_graph(m_values(level, 2 + 4 * 3u64.pow(level), 1, 1)?)?;
    let mismatch = first_mismatch(&graph, expected.chips(), out.chips());
    Ok(DoublingReport {
        level,
        expected_gain,
        gain,
        pass: gain == expected_gain && mismatch.is_none(),
        mismatch,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityDoublingReport {
    pub level: u32,
    /// Chips each frozen corner gains on top of the doubled identity.
    pub expected_corner_gain: u64,
    pub corner_gains: [u64; 3],
    pub pass: bool,
    pub mismatch: Option<Mismatch>,
}

/// Stabilizes `2 * id_n` on `G_n` (normal boundary) with the three corners
/// frozen. Expected: the result is `id_n + 4 * 3^(n-1)` at each corner and
/// `id_n` elsewhere, so that `(2 id_n)° = id_n` by the corner neutrality of
/// `4 * 3^(n-1)` chips.
pub fn verify_identity_doubling(level: u32) -> Result<IdentityDoublingReport> {
    if level == 0 {
        return Err(Error::InvalidLevel {
            level,
            reason: "needs level >= 1",
        });
    }
    let graph = GasketGraph::normal(level);
    let id = identity(&graph)?;
    let corners = Corner::ALL.map(|c| graph.corner_index(c).expect("normal boundary"));
    let (out, _) = stabilize(&graph, &id.scaled(2)?, &corners)?;
    let extra = 4 * 3u64.pow(level - 1);
    let mut expected = id.clone();
    for &c in &corners {
        expected.add_at(c, extra)?;
    }
    let corner_gains = corners.map(|c| out.chips()[c] - 2 * id.chips()[c]);
    let mismatch = first_mismatch(&graph, expected.chips(), out.chips());
    Ok(IdentityDoublingReport {
        level,
        expected_corner_gain: extra - 2,
        corner_gains,
        pass: mismatch.is_none(),
        mismatch,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportReport {
    pub level: u32,
    /// `eta (+) 3^n delta_y (+) 3^n delta_z == eta`
    pub restored: bool,
    /// Chips that reached the sunk corner; `2 * 3^n` expected.
    pub sink_received: u64,
    pub expected_sink: u64,
    pub pass: bool,
}

/// Corner transport on the gasket with the lower-left corner as sink.
pub fn verify_corner_transport(level: u32, eta: &Configuration) -> Result<TransportReport> {
    let graph = GasketGraph::new(level, BoundaryCondition::CornerSink(Corner::LowerLeft));
    eta.check_graph(&graph)?;
    if !is_recurrent(&graph, eta)? {
        return Err(Error::NotRecurrent);
    }
    let load = 3u64.pow(level);
    let mut loaded = eta.clone();
    for corner in [Corner::LowerRight, Corner::Top] {
        loaded.add_at(graph.corner_index(corner).expect("not the sink"), load)?;
    }
    let (out, odometer) = stabilize(&graph, &loaded, &[])?;
    let sink_received: u64 = (0..graph.len())
        .map(|v| graph.beta(v) as u64 * odometer.fires[v])
        .sum();
    let restored = out == *eta;
    Ok(TransportReport {
        level,
        restored,
        sink_received,
        expected_sink: 2 * load,
        pass: restored && sink_received == 2 * load,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct JunctionReport {
    pub level: u32,
    /// The matched configuration on level `n + 1` passes the burning test.
    pub matched_recurrent: bool,
    pub burning_all_ones: bool,
    /// Adding `2 * 3^n` at the three junctions and stabilizing restores it.
    pub invariant: bool,
    pub pass: bool,
}

/// Builds `eta_{n+1}` from `eta`, `eta+` and `eta-` and checks that it is
/// recurrent and invariant under `2 * 3^n` extra chips at each junction.
/// `eta` must be recurrent on `G_n` (normal) with 2 chips at the lower-right
/// and top corners.
pub fn verify_junction_invariance(level: u32, eta: &Configuration) -> Result<JunctionReport> {
    let graph = GasketGraph::normal(level);
    eta.check_graph(&graph)?;
    for corner in [Corner::LowerRight, Corner::Top] {
        let v = graph.corner_index(corner).expect("normal boundary");
        if eta.chips()[v] != 2 {
            return Err(Error::Precondition(format!(
                "{corner} corner holds {} chips, need 2",
                eta.chips()[v]
            )));
        }
    }
    if !is_recurrent(&graph, eta)? {
        return Err(Error::NotRecurrent);
    }
    let big = GasketGraph::normal(level + 1);
    let matched = match_rotated(level, eta)?;
    let (matched_recurrent, burn) = is_recurrent_burning(&big, &matched)?;
    let mut loaded = matched.clone();
    for j in junctions(level + 1).expect("level >= 1") {
        loaded.add_at(big.index_of(j).expect("junction"), 2 * 3u64.pow(level))?;
    }
    let (out, _) = stabilize(&big, &loaded, &[])?;
    let invariant = out == matched;
    Ok(JunctionReport {
        level,
        matched_recurrent,
        burning_all_ones: burn.is_all_ones(),
        invariant,
        pass: matched_recurrent && invariant,
    })
}
