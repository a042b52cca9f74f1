//! Simulation and numerical analysis of branching processes whose offspring
//! laws are drawn from a random environment, with first-class support for
//! heavy-tailed (infinite-mean) reproduction.
//!
//! The crate is organized around a small algebra of pgf transforms carried
//! in log coordinates ([`pgf`], [`logdomain`]), composed along environment
//! sequences ([`compose`], [`environment`]), and three consumers of that
//! algebra: exact and asymptotic population stepping ([`population`]),
//! a regularity classifier ([`regularity`]), and limit-law estimation
//! ([`limitlab`]). See the examples directory for end-to-end usage.

pub mod cli;
pub mod compose;
pub mod config;
pub mod environment;
pub mod limitlab;
pub mod logdomain;
pub mod pgf;
pub mod population;
pub mod regularity;
pub mod report;
pub mod special;
pub mod stats;
pub mod stable;
pub mod stream;
pub mod verify;

pub use environment::{EnvError, Environment, EnvironmentModel, EnvironmentRecord};
pub use logdomain::{ComplementCoord, TailScalar};
pub use pgf::{LawDescriptor, LawError, Offspring, OffspringLaw};
