//! Graph-based generation of structured test inputs.
//!
//! Inputs are read into attributed graphs ([`graph`], [`convert`]), mutated
//! ([`mutate`]), checked against a constraint file ([`dsl`]), repaired
//! ([`refine`]) and fed to a target program by a campaign ([`harness`]).

pub mod convert;
pub mod dsl;
pub mod graph;
pub mod harness;
pub mod mutate;
pub mod refine;
pub mod synth;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/graphs.md")]
    struct Graphs;
    #[doc = include_str!("../../../book/src/constraints.md")]
    struct Constraints;
    #[doc = include_str!("../../../book/src/mutation.md")]
    struct Mutation;
    #[doc = include_str!("../../../book/src/refinement.md")]
    struct Refinement;
    #[doc = include_str!("../../../book/src/campaigns.md")]
    struct Campaigns;
}
