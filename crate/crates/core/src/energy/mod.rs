//! Stored-energy densities and the operations built on them.

mod density;
mod envelope;
mod growth;
mod limit;
mod reduced;

pub use density::{frobenius, Custom, Density, EnergyDensity, Form, KindLabel, Term};
pub use envelope::{is_rank_one, lower_hull, rank_one_directions, AmplitudeGrid, EnvelopeApprox, EnvelopeValue};
pub use growth::{validate_growth, GrowthReport};
pub use limit::{default_schedule, extrapolate_triple, g_limit, GLimit, GLimitOptions, ScaledDensity};
pub use reduced::{shared, InnerSolver, ReducedDensity, ReductionMode};
