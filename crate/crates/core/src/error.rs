use thiserror::Error;

/// Errors raised by the geometry, lattice and sampling layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("geodesic endpoints coincide (separation {0:e})")]
    DegenerateEndpoints(f64),

    #[error("a geodesic endpoint is the base point of the horoball")]
    EndpointInHoroballClosure,

    #[error("window endpoint at time {time} lies inside a horoball (exits at {exit_time})")]
    WindowEndpointInHoroball { time: f64, exit_time: f64 },

    #[error("horoballs overlap: cusp height {0} must be at least 1")]
    NotDisjoint(f64),

    #[error("group element entries exceed {0} bits")]
    OverflowGuard(u64),

    #[error("element not found within word radius {0}")]
    NotFound(usize),

    #[error("unknown group preset `{0}`")]
    UnknownPreset(String),

    #[error("random walk did not converge: {0}")]
    NotConverged(String),

    #[error("quadrature failed to converge on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64 },

    #[error("breadth-first search exhausted after {0} tiles")]
    RadiusExhausted(usize),

    #[error("invalid step measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid group description: {0}")]
    InvalidGroup(String),

    #[error("operation requires a lattice horoball collection")]
    UnsupportedCollection,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
