//! EFXr constructions: decomposable instances, multigraphs and faces of
//! triangulated planar disks.

pub mod decomposable;
pub mod multigraph;
pub mod planar;

pub use decomposable::{
    combine_group_allocations, decompose_groups, solve_decomposable, DecomposableOutcome, GroupRule, ItemGroup,
};
pub use multigraph::{multigraph_efxr, MultigraphOutcome, PARALLEL_CAP};
pub use planar::{planar_faces_orientation, proper_violations, PlanarStats, ProperAllocation};
