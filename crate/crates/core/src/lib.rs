//! Capacity bounds and end-to-end protocols for private information
//! retrieval when answers travel over noisy links or a shared
//! multiple-access channel.

pub mod bounds;
pub mod channels;
pub mod engine;
pub mod error;
pub mod gf2code;
pub mod macpir;
pub mod numerics;
pub mod privacy;
pub mod scheme;
pub mod types;

pub use bounds::{BscRegion, CornerPoint, LowerBound, StageTable, UpperBound};
pub use channels::{ChannelSpec, MacChannel, MacKind, PointChannel, RngStream};
pub use engine::SessionConfig;
pub use error::{Error, Result};
pub use gf2code::{Gf2Matrix, LinearCode};
pub use macpir::{BooleanMac, MaskVector, NegationPattern, SelectionVariant};
pub use numerics::Probability;
pub use privacy::{PrivacyReport, Protocol, QueryDistribution};
pub use scheme::{KSumQuery, LogicalPlan, QueryPlan, ReconstructionMap};
pub use types::{CapacityVector, GroupSequence, MessageStore, SessionReport, TrafficVector};
