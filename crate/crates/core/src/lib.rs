pub mod config;
pub mod dataio;
pub mod error;
pub mod evaluate;
pub mod geometry;
pub mod manualcam;
pub mod metrics;
pub mod numeric;
pub mod objectives;
pub mod ordering;
pub mod planners;
pub mod simulator;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
    #[doc = include_str!("../../../book/src/poses.md")]
    struct Poses;
    #[doc = include_str!("../../../book/src/metrics.md")]
    struct Metrics;
    #[doc = include_str!("../../../book/src/simulation.md")]
    struct Simulation;
    #[doc = include_str!("../../../book/src/planners.md")]
    struct Planners;
    #[doc = include_str!("../../../book/src/camera.md")]
    struct Camera;
    #[doc = include_str!("../../../book/src/configuration.md")]
    struct Configuration;
}
