use std::path::PathBuf;

use bvoigt::diagnostics::DiagConfig;
use bvoigt::experiments::IcSpec;
use bvoigt::io::{parse_config, serialize_config, GridConfig, OutputConfig, RunConfig};
use bvoigt::models::ModelParams;
use bvoigt::spectral::DealiasFraction;
use bvoigt::timestepping::{Scheme, StepperConfig, TimeStep};

fn expected() -> RunConfig {
    RunConfig {
        grid: GridConfig {
            dim: 2,
            n: 48,
            dealias: DealiasFraction::TWO_THIRDS,
        },
        model: ModelParams {
            dim: 2,
            nu: vec![1e-2, 0.0],
            kappa: 2.5e-5,
            alpha: 0.05,
            buoyancy_axis: 1,
        },
        stepper: StepperConfig {
            scheme: Scheme::Rk4,
            step: TimeStep::Adaptive { cfl: 0.4, dt_max: 5e-3 },
            t_end: 0.75,
            output_every: 4,
            guard: 1e5,
            keep_fields: false,
        },
        ic: IcSpec {
            name: "shear_layer".into(),
            amplitude: 0.8,
            theta_amplitude: 0.3,
            seed: 17,
        },
        diag: DiagConfig {
            p_grid: vec![2.0, 3.0, 6.0],
            max_principle_tol: 1e-3,
            lp_drift_tol: 1e-4,
        },
        output: OutputConfig {
            directory: PathBuf::from("runs/golden"),
            snapshot_every: 25,
        },
    }
}

#[test]
fn golden_file_parses_to_expected_config() {
    let text = include_str!("fixtures/golden.cfg");
    assert_eq!(parse_config(text).unwrap(), expected());
}

#[test]
fn canonical_text_reparses_identically() {
    let text = serialize_config(&expected());
    assert_eq!(parse_config(&text).unwrap(), expected());
    assert_eq!(serialize_config(&parse_config(&text).unwrap()), text);
}
