//! Structure of ticking clocks: Koashi–Imoto blocks, non-disturbance,
//! minimal clocks, Zeno freezing and the Salecker–Wigner–Peres clock.

pub mod channel;
pub mod ki;
pub mod minimal;
pub mod swp;
pub mod zeno;

pub use channel::{channel_to_json, load_channel, parse_channel, verify_nondisturbance, QuantumChannel};
pub use ki::{block_shapes, ki_decompose, verify_decomposition, KIBlock, KIDecomposition, KIResiduals};
pub use minimal::{minimal_clock, MinimalClock};
pub use swp::{swp_demo, AlphaReport, Arrival, SwpConfig, SwpReport, TimelinePoint};
pub use zeno::{
    measurement_disturbance, zeno_experiment, zeno_with_model, DisturbanceReport, Schedule, ZenoConfig, ZenoModel,
    ZenoPoint, ZenoReport,
};
