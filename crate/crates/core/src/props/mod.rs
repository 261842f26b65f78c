//! Cross-module property suites: invariants over random inputs and
//! independent nalgebra oracles, plus whole-run checks of the simulator.

mod channel_link;
mod des_run;
mod framing;
mod precoding;
