//! EFXr orientations of multigraphs: one two-agent EFX split per bundle of
//! parallel edges.

use super::decomposable::{solve_decomposable, GroupRule};
use crate::efx_exact::AllocationCaps;
use crate::error::{Error, Result};
use crate::instance::{Allocation, GraphInstance, OrientationVector};

/// Most parallel edges between one pair of vertices.
pub const PARALLEL_CAP: usize = 20;

#[derive(Clone, Debug)]
pub struct MultigraphOutcome {
    pub orientation: OrientationVector,
    pub allocation: Allocation,
    /// Number of vertex pairs joined by at least one edge.
    pub bundles: usize,
}

pub fn multigraph_efxr(g: &GraphInstance) -> Result<MultigraphOutcome> {
    let inst = g.instance();
    let caps = AllocationCaps {
        max_agents: 2,
        max_items: PARALLEL_CAP,
    };
    let out = solve_decomposable(inst, GroupRule::Efx, caps).map_err(|e| match e {
        Error::CapExceeded { size, cap, .. } => Error::CapExceeded {
            what: "parallel edge bundle",
            size,
            cap,
        },
        // Every edge group is a pair of endpoints, so groups always
        // intersect in at most one vertex.
        Error::NotDecomposable(a, b) => Error::internal(format!("edges {a} and {b} share two endpoints")),
        other => other,
    })?;
    let orientation = g.orientation_of(&out.allocation)?;
    Ok(MultigraphOutcome {
        orientation,
        allocation: out.allocation,
        bundles: out.groups.len(),
    })
}
