//! Optimal tracking of a static demand distribution by a swarm, posed in
//! 2-Wasserstein space.
//!
//! A swarm and a demand are weighted particle clouds. Moving the swarm costs
//! `α‖V‖²` (mass-weighted kinetic energy) and being away from the demand
//! costs `W₂²`. The optimum over a horizon `T` moves every particle
//! straight toward its optimal-transport target on a cosh schedule, and the
//! same motion is produced by a feedback law that re-solves the transport
//! problem as it goes.
//!
//! - [`ot`]: exact discrete optimal transport (matching and transportation
//!   simplex), Monge maps, pushforwards and a 1D quantile solver.
//! - [`geometry`]: displacement interpolation and curve speed.
//! - [`lq`]: scalar LQ tracking, closed forms and a discretized QP oracle.
//! - [`controller`]: the optimal plan, the feedback law and cost evaluation.
//! - [`transcription`]: a brute-force direct-transcription check.
//! - [`mpc`]: receding-horizon tracking of piecewise-constant demand.
//! - [`scenario`]: JSON scenarios, CSV trajectories and the invariant suite.
//!
//! Numerical code is generic over [`scalar::Scalar`] (`f64` and `f32`); the
//! aliases below fix the precision to `f64`.
//!
//! ```
//! use w2swarm::{controller, Cloud};
//!
//! let r0 = Cloud::uniform(1, vec![0.0, 1.0]).unwrap();
//! let demand = Cloud::uniform(1, vec![2.0, 3.0]).unwrap();
//! let plan = controller::plan_optimal_trajectory(&r0, &demand, 1.0, 1.0, 1000).unwrap();
//! let exact = controller::analytic_cost_swarm(2.0, 1.0, 1.0).unwrap().adopted;
//! assert!((plan.total_cost() - exact).abs() < 1e-5 * exact);
//! ```

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod error;
pub mod geometry;
pub mod lq;
pub mod mpc;
pub mod ot;
pub mod scalar;
pub mod scenario;
pub mod trajectory;
pub mod transcription;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Cloud = ot::ParticleCloud<f64>;
pub type Cloud32 = ot::ParticleCloud<f32>;
pub type Plan = ot::TransportPlan<f64>;
pub type Map = ot::TransportMap<f64>;
pub type Geodesic = geometry::GeodesicPath<f64>;
pub type Trajectory = trajectory::TrajectoryRecord<f64>;
pub type Schedule = lq::ControlSchedule<f64>;
pub type Demands = mpc::DemandSchedule<f64>;
