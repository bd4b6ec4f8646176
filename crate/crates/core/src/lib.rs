//! Classification of totally reflective primitive genera of positive definite lattices.

pub mod arith;
pub mod lattice;
pub mod local;
pub mod mass;
pub mod roots;
pub mod classes;
pub mod bounds;
pub mod pipeline;

pub use arith::Rational;
pub use lattice::{GramLattice, IMat, LatticeError, RationalGram};
pub use local::{Constituent, GenusSymbol, LocalSymbol, SymbolError};
pub use mass::{mass, ExactMass, MassError};
pub use classes::{aut_order, genus_classes, is_isometric, is_totally_reflective, ClassError, GenusClassSet};
pub use roots::{is_reflective, root_set, root_system, Root, RootError, RootSystemReport, RootType};
pub use bounds::{BoundError, BoundValue, DetShape};
pub use pipeline::{ClassificationReport, GenusRecord, PipelineError, PipelineOptions, Stage, Verdict};
