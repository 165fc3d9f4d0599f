//! Free-space optical link: beam-spread link budget, rain-dependent
//! scintillation, the coarse/fine/ultrafine self-alignment controller and its
//! closed-loop plant, and the OOK beacon sub-channel.

mod align;
mod beacon;
mod budget;
mod scint;

pub use align::{
    run_alignment, step_alignment, write_alignment_csv, AlignmentMode, AlignmentRun,
    AlignmentSim, AlignmentState, AlignmentThresholds, ClimbState, FrameLog, SensorFrame, Transition,
    MICROSTEP_RAD,
};
pub use beacon::{
    beacon_roundtrip, detect_frame, ook_ber, BeaconFrame, BeaconResult, BARKER_13, GUARD_BITS,
};
pub use budget::{fsoc_link_state, fsoc_rx_power, OpticalLinkSpec};
pub use scint::{scintillation_series, ScintParams, ScintSample};
