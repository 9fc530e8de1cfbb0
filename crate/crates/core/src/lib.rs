//! Expected degrees of real Grassmannians and the integral-geometry
//! quantities around them: volumes, principal angles, Segre zonoids,
//! Monte Carlo estimators and a transversal-counting oracle for `G(2,4)`.

pub mod edeg;
pub mod error;
pub mod geomlin;
pub mod incidence;
pub mod mc;
pub mod quadrature;
pub mod specfun;
pub mod stats;
pub mod zonoid;

pub use error::{Error, Result};
pub use geomlin::{Frame, Mat, PrincipalAngles, RngStream};
pub use specfun::LogValue;
pub use edeg::{EdegMethod, EdegResult, LaplaceProblem};
pub use incidence::{PluckerLine, TransversalCount};
pub use stats::{Estimate, McConfig, StreamingStats, DEFAULT_SEED};
pub use zonoid::{RadialProfile2, ZonoidDescriptor};
