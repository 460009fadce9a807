use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use caloronkit::chernweil::{chern_character, chern_simons, chern_simons_via_slices, odd_chern_character, ConnectionPath};
use caloronkit::io::{from_json, FormFile, GradedFile, GroupMapFile, PairFile, SCHEMA_VERSION};
use caloronkit::lie::default_ode_steps;
use caloronkit::stringforms::{
    default_t_factor, gerbe_defect, gerbe_terms, string_form, string_potential, tau_hat_pullback,
    total_string_potential, PotentialAlgorithm, StringFormAlgorithm,
};
use caloronkit::{ConnectionPair, GradedForm, GroupMap, MatrixForm, PairPath};
use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::output::{sibling, write_csv, write_json};
use crate::Common;

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// Chern character of a connection form.
    Chern,
    /// Odd Chern character of a map.
    OddChern,
    /// Chern-Simons form of the straight line between two connections.
    Cs,
    /// String form of a pair.
    StringForm,
    /// String potential of the straight line between two pairs.
    StringPotential,
    /// Total string potential of a pair.
    TotalStringPotential,
    /// Pullback of the flat string potential along a based map.
    TauHat,
    /// Gerbe curving of a unitary pair.
    Gerbe,
    /// Higgs holonomy map of a pair.
    Holonomy,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ComputeArgs {
    #[arg(value_enum)]
    pub quantity: Quantity,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Input files; `cs` and `string-potential` take two.
    #[arg(long = "input", short = 'i', required = true)]
    pub inputs: Vec<PathBuf>,
    /// `direct`, `via-caloron` or `both` for string forms; `direct`, `slice`
    /// or `both` for `cs`; `slice`, `explicit`, `cs-fiber` or `all` for
    /// string potentials.
    #[arg(long)]
    pub algorithm: Option<String>,
}

#[derive(Serialize)]
struct SummaryRow {
    degree: Option<usize>,
    sup_norm: f64,
    integral_re: Option<f64>,
    integral_im: Option<f64>,
    max_period: Option<f64>,
}

#[derive(Serialize)]
struct ComputeReport {
    schema_version: u32,
    config: serde_json::Value,
    output: PathBuf,
    summary: Vec<SummaryRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cross_defect: Option<f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    checks: BTreeMap<String, f64>,
    pass: bool,
}

enum Output {
    Graded(GradedForm),
    Form(MatrixForm),
    Map(GroupMap),
}

fn load<D: DeserializeOwned>(path: &Path) -> Result<D> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_pair(path: &Path) -> Result<ConnectionPair> {
    Ok(load::<PairFile>(path)?.to_pair(None)?)
}

fn load_map(path: &Path) -> Result<GroupMap> {
    Ok(load::<GroupMapFile>(path)?.to_map(None)?)
}

fn load_form(path: &Path) -> Result<MatrixForm> {
    Ok(load::<FormFile>(path)?.to_form(None)?)
}

fn form_row(f: &MatrixForm) -> Result<SummaryRow> {
    let dim = f.grid().dim();
    let integral = if f.degree() == dim && f.rank() == 1 { Some(f.integrate()?[0]) } else { None };
    let max_period = if f.grid().is_torus() && f.degree() > 0 && f.rank() == 1 {
        Some(f.periods()?.iter().map(|(_, z)| z.norm()).fold(0.0, f64::max))
    } else {
        None
    };
    Ok(SummaryRow {
        degree: Some(f.degree()),
        sup_norm: f.max_abs(),
        integral_re: integral.map(|z| z.re),
        integral_im: integral.map(|z| z.im),
        max_period,
    })
}

fn summarize(out: &Output) -> Result<Vec<SummaryRow>> {
    match out {
        Output::Graded(g) => g.terms().map(|(_, f)| form_row(f)).collect(),
        Output::Form(f) => Ok(vec![form_row(f)?]),
        Output::Map(m) => Ok(vec![SummaryRow {
            degree: None,
            sup_norm: m.values().iter().map(|z| z.norm()).fold(0.0, f64::max),
            integral_re: None,
            integral_im: None,
            max_period: None,
        }]),
    }
}

fn inputs<const N: usize>(args: &ComputeArgs) -> Result<[&Path; N]> {
    let paths: Vec<&Path> = args.inputs.iter().map(PathBuf::as_path).collect();
    paths
        .try_into()
        .map_err(|v: Vec<&Path>| anyhow::anyhow!("{:?} takes {N} input file(s), got {}", args.quantity, v.len()))
}

/// Largest pairwise defect among the results of several algorithms.
fn spread(results: &[GradedForm]) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, a) in results.iter().enumerate() {
        for b in &results[i + 1..] {
            worst = worst.max(a.max_defect(b)?);
        }
    }
    Ok(worst)
}

fn string_form_algorithms(name: Option<&str>) -> Result<Vec<StringFormAlgorithm>> {
    Ok(match name.unwrap_or("direct") {
        "direct" => vec![StringFormAlgorithm::Direct],
        "via-caloron" => vec![StringFormAlgorithm::ViaCaloron],
        "both" => vec![StringFormAlgorithm::Direct, StringFormAlgorithm::ViaCaloron],
        other => bail!("unknown string-form algorithm {other:?}"),
    })
}

fn potential_algorithms(name: Option<&str>) -> Result<Vec<PotentialAlgorithm>> {
    Ok(match name.unwrap_or("explicit") {
        "slice" => vec![PotentialAlgorithm::Slice],
        "explicit" => vec![PotentialAlgorithm::Explicit],
        "cs-fiber" => vec![PotentialAlgorithm::CsFiber],
        "all" | "both" => vec![PotentialAlgorithm::Explicit, PotentialAlgorithm::Slice, PotentialAlgorithm::CsFiber],
        other => bail!("unknown string-potential algorithm {other:?}"),
    })
}

pub fn run(args: &ComputeArgs, config: serde_json::Value) -> Result<bool> {
    args.common.validate()?;
    let algorithm = args.algorithm.as_deref();
    let cutoff = args.common.cutoff;
    let mut cross_defect = None;
    let mut checks = BTreeMap::new();
    let mut tol = args.common.tol.unwrap_or(1e-9);

    let out = match args.quantity {
        Quantity::Chern => {
            let [a] = inputs(args)?;
            let a = load_form(a)?;
            Output::Graded(chern_character(&a, cutoff.unwrap_or(2))?)
        }
        Quantity::OddChern => {
            let [g] = inputs(args)?;
            Output::Graded(odd_chern_character(&load_map(g)?, cutoff.unwrap_or(2))?)
        }
        Quantity::Cs => {
            let [a0, a1] = inputs(args)?;
            let cutoff = cutoff.unwrap_or(2);
            let path = ConnectionPath::straight_line(load_form(a0)?, load_form(a1)?)?;
            let mut results = Vec::new();
            let names = match algorithm.unwrap_or("direct") {
                "direct" => vec!["direct"],
                "slice" => vec!["slice"],
                "both" => vec!["direct", "slice"],
                other => bail!("unknown cs algorithm {other:?}"),
            };
            for name in &names {
                results.push(match *name {
                    "direct" => chern_simons(&path, cutoff)?,
                    _ => chern_simons_via_slices(&path, cutoff, &default_t_factor(cutoff))?,
                });
            }
            if results.len() > 1 {
                tol = args.common.tol.unwrap_or(1e-8);
                cross_defect = Some(spread(&results)?);
            }
            Output::Graded(results.swap_remove(0))
        }
        Quantity::StringForm => {
            let [p] = inputs(args)?;
            let p = load_pair(p)?;
            let cutoff = cutoff.unwrap_or(2);
            let results = string_form_algorithms(algorithm)?
                .into_iter()
                .map(|alg| string_form(&p, cutoff, alg))
                .collect::<caloronkit::Result<Vec<_>>>()?;
            if results.len() > 1 {
                cross_defect = Some(spread(&results)?);
            }
            Output::Graded(results.into_iter().next().expect("at least one algorithm"))
        }
        Quantity::StringPotential => {
            let [p0, p1] = inputs(args)?;
            let path = PairPath::straight_line(load_pair(p0)?, load_pair(p1)?)?;
            let cutoff = cutoff.unwrap_or(2);
            let results = potential_algorithms(algorithm)?
                .into_iter()
                .map(|alg| string_potential(&path, cutoff, alg, None))
                .collect::<caloronkit::Result<Vec<_>>>()?;
            if results.len() > 1 {
                tol = args.common.tol.unwrap_or(1e-8);
                cross_defect = Some(spread(&results)?);
            }
            Output::Graded(results.into_iter().next().expect("at least one algorithm"))
        }
        Quantity::TotalStringPotential => {
            let [p] = inputs(args)?;
            Output::Graded(total_string_potential(&load_pair(p)?, cutoff.unwrap_or(2))?)
        }
        Quantity::TauHat => {
            let [g] = inputs(args)?;
            Output::Graded(tau_hat_pullback(&load_map(g)?, cutoff.unwrap_or(2))?)
        }
        Quantity::Gerbe => {
            let [p] = inputs(args)?;
            let terms = gerbe_terms(&load_pair(p)?)?;
            let pi2 = std::f64::consts::PI * std::f64::consts::PI;
            checks.insert("defect_exact_coefficient_1_over_4pi2".into(), gerbe_defect(&terms, 1.0 / (4.0 * pi2))?);
            checks.insert("defect_exact_coefficient_1_over_8pi2".into(), gerbe_defect(&terms, 1.0 / (8.0 * pi2))?);
            Output::Form(terms.b)
        }
        Quantity::Holonomy => {
            let [p] = inputs(args)?;
            let p = load_pair(p)?;
            let samples = p.grid().shape()[p.theta_axis()];
            let steps = args.common.ode_steps.unwrap_or_else(|| default_ode_steps(samples));
            Output::Map(p.higgs_holonomy_map(steps)?)
        }
    };

    let path = &args.common.out;
    match &out {
        Output::Graded(g) => write_json(path, &GradedFile::from_graded(g))?,
        Output::Form(f) => write_json(path, &FormFile::from_form(f))?,
        Output::Map(m) => write_json(path, &GroupMapFile::from_map(m))?,
    }
    let summary = summarize(&out)?;
    write_csv(&sibling(path, ".csv"), &summary)?;
    let pass = cross_defect.is_none_or(|d| d <= tol);
    let report = ComputeReport {
        schema_version: SCHEMA_VERSION,
        config,
        output: path.clone(),
        summary,
        cross_defect,
        checks,
        pass,
    };
    write_json(&sibling(path, ".report.json"), &report)?;
    Ok(pass)
}
