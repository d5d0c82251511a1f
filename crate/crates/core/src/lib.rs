//! Numerical differential geometry in explicit charts, aimed at fibered
//! spaces with a horizontal distribution: coefficient expressions with
//! forward-mode derivatives, metrics and connections, projector calculus
//! with the fundamental tensors of a submersion, tension fields of sections
//! and their correction terms, and stochastic-path experiments that probe
//! the same identities along diffusions.

pub mod expr;
pub mod flow;
pub mod gallery;
pub mod geomfile;
pub mod geometry;
pub mod report;
pub mod sections;
pub mod stochastic;
pub mod submersion;
