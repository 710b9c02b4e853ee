//! Running every stage from an in-memory configuration.
use plab::linalg::c;
use plab::report::{run, RunConfig, Stage};
use plab::PoincareEquation;

fn main() -> plab::Result<()> {
    let eq = PoincareEquation::from_roots(&[c(2.0), c(1.0)]);
    let mut config = RunConfig::new(eq.to_spec(0));
    config.stages = Stage::ALL.to_vec();
    config.horizon = 300;
    let report = run(&config)?;
    for failure in &report.stage_errors {
        println!("stage {} failed: {}", failure.stage.name(), failure.message);
    }
    println!("violations: {}, exit code {}", report.violations.len(), report.exit_code());
    println!("{}", &report.to_json()?[..400]);
    Ok(())
}
