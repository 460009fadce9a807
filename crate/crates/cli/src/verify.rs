use anyhow::Result;
use caloronkit::io::SCHEMA_VERSION;
use caloronkit::suites::{self, Suite, SuiteConfig, SuiteReport};
use clap::Args;
use serde::Serialize;

use crate::grid_arg::{parse_grid, with_loop};
use crate::output::{sibling, write_csv, write_json};
use crate::Common;

#[derive(Args, Debug, Clone, Serialize)]
pub struct VerifyArgs {
    /// Suite name, or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub band_limit: usize,
    /// Amplitude of random algebra-valued data.
    #[arg(long, default_value_t = 0.3)]
    pub amplitude: f64,
    /// Amplitude of the exponents of random maps.
    #[arg(long, default_value_t = 0.1)]
    pub map_amplitude: f64,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    suite: &'a str,
    identity: &'a str,
    degree: Option<usize>,
    defect: f64,
    tol: f64,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    schema_version: u32,
    config: serde_json::Value,
    pass: bool,
    suites: Vec<SuiteReport>,
}

fn needs_loop(suite: Suite) -> bool {
    matches!(suite, Suite::Caloron | Suite::String | Suite::Total | Suite::Witness | Suite::Holonomy)
}

fn selected(name: &str) -> Result<Vec<Suite>> {
    if name == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    Ok(vec![name.parse::<Suite>()?])
}

pub fn run(args: &VerifyArgs, config: serde_json::Value) -> Result<bool> {
    args.common.validate()?;
    let suites = selected(&args.suite)?;
    let grid = args.common.grid.as_deref().map(parse_grid).transpose()?;
    let mut reports = Vec::with_capacity(suites.len());
    for suite in suites {
        let grid = grid.clone().map(|g| if needs_loop(suite) { with_loop(g) } else { g });
        let cfg = SuiteConfig {
            grid,
            rank: args.common.rank,
            cutoff: args.common.cutoff,
            seed: args.seed,
            band_limit: args.band_limit,
            amplitude: args.amplitude,
            map_amplitude: args.map_amplitude,
            tol: args.common.tol,
            exact_tol: args.common.exact_tol,
            ode_steps: args.common.ode_steps,
        };
        reports.push(suites::run(suite, &cfg)?);
    }

    let rows: Vec<CsvRow> = reports
        .iter()
        .flat_map(|r| {
            r.rows.iter().map(move |row| CsvRow {
                suite: r.suite.name(),
                identity: &row.identity,
                degree: row.degree,
                defect: row.defect,
                tol: row.tol,
                pass: row.pass,
            })
        })
        .collect();
    let pass = reports.iter().all(SuiteReport::passed);
    write_csv(&sibling(&args.common.out, ".csv"), &rows)?;
    write_json(
        &args.common.out,
        &VerifyReport {
            schema_version: SCHEMA_VERSION,
            config,
            pass,
            suites: reports,
        },
    )?;
    Ok(pass)
}
