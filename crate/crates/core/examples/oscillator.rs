//! Sensitivity of the oscillator constraint sets to the uncertain inputs.
//!
//! Designs `(x1, x2) = (mass, stiffness)` are admissible when the peak velocity
//! (`g1`) or the peak acceleration (`g2`) of the forced response stays below a
//! threshold. The thresholds `Ur1`, `Ur2` should dominate their own set and
//! `Ur3` enters neither constraint.
//!
//! ```bash
//! cargo run --release --example oscillator
//! cargo run --release --example oscillator -- sine:3:10
//! ```

use setsa::models::{
    oscillator_trajectory, Forcing, ModelKind, OscillatorOutput, OscillatorParams,
    OscillatorSettings,
};
use setsa::study::{run_study, summary_table, StudyConfig};

fn main() -> setsa::Result<()> {
    let forcing: Forcing = match std::env::args().nth(1) {
        Some(s) => s.parse()?,
        None => Forcing::default(),
    };
    let settings = OscillatorSettings {
        forcing,
        ..OscillatorSettings::default()
    };

    // One response at the centre of the nominal ranges.
    let nominal = OscillatorParams {
        mass: 3.0,
        damping: 1.0,
        stiffness: 35.0,
        forcing,
        horizon: settings.horizon,
        dt: settings.dt,
    };
    let peaks = oscillator_trajectory(&nominal)?;
    println!(
        "forcing {forcing}: nominal peak velocity {:.3}, peak acceleration {:.3}\n",
        peaks.max_velocity, peaks.max_acceleration
    );

    for output in [
        OscillatorOutput::G1,
        OscillatorOutput::G2,
        OscillatorOutput::Pair,
        OscillatorOutput::Intersection,
    ] {
        let mut config = StudyConfig::new(ModelKind::Oscillator(output), 100, 100);
        config.replicates = 20;
        config.oscillator = settings;
        println!("{}", summary_table(&run_study(&config)?));
    }
    Ok(())
}
