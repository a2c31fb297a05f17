//! Time-optimal bang-bang synthesis for the left-invariant control system
//! `x' = x(f + u g)` on SO(3), `|u| <= 1`, with `|f| = cos(alpha)`,
//! `|g| = sin(alpha)` perpendicular and `alpha in (0, pi/4)`.
//!
//! The crate builds the extremal flow upstairs on SO(3), projects the
//! problem to the unit sphere through a Hopf fibration chosen so that the
//! drift vanishes at the projected initial point, constructs the synthesis
//! downstairs (switching curves, abnormal supports, snake regions, the
//! exact switching count), propagates minimum-time fronts over the whole
//! sphere, and cross-checks everything against brute-force searches.
//!
//! Modules mirror that pipeline:
//!
//! * [`lie`] - so(3) algebra, exponentials, conjugation identities;
//! * [`extremal`] - switching functions, adjoint flow, bang propagation;
//! * [`sphere`] - the projected system on S^2 and its loci;
//! * [`synthesis`] - switching curves, the chart, and `N_S(alpha)`;
//! * [`wavefront`] - fronts, minimum-time maps, overlap detection and the
//!   south-pole case classification;
//! * [`oracle`] - independent brute-force verification;
//! * [`render`] - SVG views of charts and fronts;
//! * [`verify`] - named invariant checks used by the CLI.

pub mod error;
pub mod extremal;
pub mod lattice;
pub mod lie;
pub mod oracle;
pub mod render;
pub mod sphere;
pub mod synthesis;
pub mod verify;
pub mod wavefront;

pub(crate) mod util;

pub use error::{Error, Result};
pub use lie::{Alpha, AlgebraElement, Frame, Rotation, Sign};
