//! End-to-end runs of the worked models with analytic expectations.

mod config;
mod epr_bell;
mod interferometer;
mod report;
mod toy_sdc;
mod wigner;

use rand_chacha::ChaCha8Rng;

pub use config::{
    line_col, BellParams, InterferometerParams, Mode, ScenarioConfig, ScenarioKind, ToyParams, WignerParams,
};
pub use epr_bell::{chi_square_independence, direct_chsh, direct_probabilities, run_epr_bell, LAMBDAS};
pub use interferometer::{
    beam_splitter, beam_splitter_roles, bs1_reference_state, expected_bs1_state, expected_final_state,
    run_interferometer, simulate as simulate_interferometer, InterferometerRun, CLICKS,
};
pub use report::{
    binomial_radius, tables_compatible, tally, ChainSnapshot, Expectation, OutcomeFrequency, ScenarioReport,
    TrialRecord, SIGMA_BAND,
};
pub use toy_sdc::{global_state, history_amplitudes, run_toy_sdc, staged_state, HIDDEN_VARIABLES, HISTORIES};
pub use wigner::{run_wigners_friend, FrameExhibit};

use crate::error::Result;
use crate::rng::SeedStreams;

pub(crate) fn stream(config: &ScenarioConfig, purpose: u64, index: u64) -> ChaCha8Rng {
    SeedStreams::new(config.seed).stream(purpose, index)
}

/// Dispatches on `config.scenario`.
pub fn run(config: &ScenarioConfig) -> Result<ScenarioReport> {
    config.validate()?;
    match config.scenario {
        ScenarioKind::ToySdc => run_toy_sdc(config),
        ScenarioKind::WignersFriend => run_wigners_friend(config),
        ScenarioKind::Interferometer => run_interferometer(config),
        ScenarioKind::EprBell => run_epr_bell(config),
    }
}
