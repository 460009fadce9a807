//! JSON file formats for grids, forms, maps, pairs and reports.
//!
//! Complex numbers are `[re, im]` pairs. Coefficient arrays are nested as
//! grid point, then matrix entry in row-major order.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{axes_mask, mask_axes, ExactnessReport, GradedForm, MatrixForm, Parity, Verdict};
use crate::geometry::{ConnectionPair, FramedConnection};
use crate::grid::{Grid, GridSpec};
use crate::kmodel::{EquivalenceReport, EquivalenceVerdict, ReportParams};
use crate::lie::GroupMap;
use crate::scalar::{Real, C};

/// Version tag written into every report.
pub const SCHEMA_VERSION: u32 = 1;

type Points = Vec<Vec<[f64; 2]>>;

fn encode<T: Real>(values: &[C<T>], block: usize) -> Points {
    values
        .chunks(block)
        .map(|m| m.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect())
        .collect()
}

fn decode<T: Real>(points: &Points, len: usize, block: usize, what: &str) -> Result<Vec<C<T>>> {
    if points.len() != len {
        return Err(Error::Schema(format!("{what}: {} points, grid has {len}", points.len())));
    }
    let mut out = Vec::with_capacity(len * block);
    for m in points {
        if m.len() != block {
            return Err(Error::Schema(format!("{what}: matrix with {} entries, expected {block}", m.len())));
        }
        out.extend(m.iter().map(|&[re, im]| Complex::new(T::lit(re), T::lit(im))));
    }
    Ok(out)
}

fn mask_key(mask: u32) -> String {
    mask_axes(mask).iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_key(key: &str, dim: usize) -> Result<u32> {
    if key.is_empty() {
        return Ok(0);
    }
    let axes = key
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| Error::Schema(format!("bad component key {key:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if axes.windows(2).any(|w| w[0] >= w[1]) || axes.iter().any(|&a| a >= dim) {
        return Err(Error::Schema(format!("component key {key:?} is not an increasing axis list")));
    }
    Ok(axes_mask(&axes))
}

fn build_grid<T: Real>(spec: &GridSpec, grid: Option<&Arc<Grid<T>>>) -> Result<Arc<Grid<T>>> {
    match grid {
        Some(g) if g.spec() == spec => Ok(g.clone()),
        Some(_) => Err(Error::GridMismatch),
        None => Grid::new(spec.clone()).map_err(|e| Error::Schema(format!("grid: {e}"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormFile {
    pub grid: GridSpec,
    pub degree: usize,
    pub rank: usize,
    pub coeffs: BTreeMap<String, Points>,
}

impl FormFile {
    pub fn from_form<T: Real>(form: &MatrixForm<T>) -> Self {
        let block = form.rank() * form.rank();
        let coeffs = form
            .masks()
            .iter()
            .zip(form.components())
            .map(|(&m, c)| (mask_key(m), encode(c, block)))
            .collect();
        Self {
            grid: form.grid().spec().clone(),
            degree: form.degree(),
            rank: form.rank(),
            coeffs,
        }
    }

    /// Decode, reusing `grid` when it has the same descriptor. Missing
    /// components are zero.
    pub fn to_form<T: Real>(&self, grid: Option<&Arc<Grid<T>>>) -> Result<MatrixForm<T>> {
        let grid = build_grid(&self.grid, grid)?;
        if self.rank == 0 {
            return Err(Error::Schema("rank must be positive".into()));
        }
        let block = self.rank * self.rank;
        let mut form = MatrixForm::zeros(&grid, self.degree, self.rank);
        for (key, points) in &self.coeffs {
            let mask = parse_key(key, grid.dim())?;
            if mask.count_ones() as usize != self.degree {
                return Err(Error::Schema(format!("component {key:?} in a {}-form", self.degree)));
            }
            let values = decode::<T>(points, grid.len(), block, key)?;
            form.component_mut(mask).copy_from_slice(&values);
        }
        Ok(form)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupMapFile {
    pub grid: GridSpec,
    pub rank: usize,
    pub unitary: bool,
    pub based: bool,
    pub values: Points,
}

impl GroupMapFile {
    pub fn from_map<T: Real>(g: &GroupMap<T>) -> Self {
        Self {
            grid: g.grid().spec().clone(),
            rank: g.rank(),
            unitary: g.is_unitary(),
            based: g.is_based(),
            values: encode(g.values(), g.rank() * g.rank()),
        }
    }

    pub fn to_map<T: Real>(&self, grid: Option<&Arc<Grid<T>>>) -> Result<GroupMap<T>> {
        let grid = build_grid(&self.grid, grid)?;
        let values = decode::<T>(&self.values, grid.len(), self.rank * self.rank, "values")?;
        GroupMap::new(&grid, self.rank, values, self.unitary, self.based)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    #[serde(rename = "A")]
    pub a: FormFile,
    #[serde(rename = "Phi")]
    pub phi: FormFile,
    pub unitary: bool,
}

impl PairFile {
    pub fn from_pair<T: Real>(p: &ConnectionPair<T>) -> Self {
        Self {
            a: FormFile::from_form(p.a()),
            phi: FormFile::from_form(p.phi()),
            unitary: p.is_unitary(),
        }
    }

    pub fn to_pair<T: Real>(&self, grid: Option<&Arc<Grid<T>>>) -> Result<ConnectionPair<T>> {
        let a = self.a.to_form(grid)?;
        let phi = self.phi.to_form(Some(a.grid()))?;
        ConnectionPair::new(a, phi, self.unitary)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramedFile {
    pub a: FormFile,
    pub unitary: bool,
}

impl FramedFile {
    pub fn from_framed<T: Real>(f: &FramedConnection<T>) -> Self {
        Self {
            a: FormFile::from_form(f.form()),
            unitary: f.is_unitary(),
        }
    }

    pub fn to_framed<T: Real>(&self, grid: Option<&Arc<Grid<T>>>) -> Result<FramedConnection<T>> {
        FramedConnection::new(self.a.to_form(grid)?, self.unitary)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradedFile {
    pub parity: Parity,
    pub terms: BTreeMap<String, FormFile>,
}

impl GradedFile {
    pub fn from_graded<T: Real>(g: &GradedForm<T>) -> Self {
        Self {
            parity: g.parity,
            terms: g.terms().map(|(d, f)| (d.to_string(), FormFile::from_form(f))).collect(),
        }
    }

    pub fn to_graded<T: Real>(&self, grid: Option<&Arc<Grid<T>>>) -> Result<GradedForm<T>> {
        let mut out = GradedForm::new(self.parity);
        let mut shared = grid.cloned();
        for (key, file) in &self.terms {
            let degree: usize = key.parse().map_err(|_| Error::Schema(format!("bad degree key {key:?}")))?;
            if degree != file.degree {
                return Err(Error::Schema(format!("term {key} holds a {}-form", file.degree)));
            }
            let form = file.to_form(shared.as_ref())?;
            shared.get_or_insert_with(|| form.grid().clone());
            out.insert(form)?;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeEntry {
    pub degree: usize,
    pub verdict: Verdict,
    pub closedness: f64,
    pub worst_period: f64,
    pub cycle: Vec<usize>,
    pub scale: f64,
}

impl DegreeEntry {
    pub fn from_report<T: Real>(r: &ExactnessReport<T>) -> Self {
        Self {
            degree: r.degree,
            verdict: r.verdict,
            closedness: r.closedness.as_f64(),
            worst_period: r.worst_period.as_f64(),
            cycle: r.cycle.clone(),
            scale: r.scale.as_f64(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceFile {
    pub schema_version: u32,
    pub verdict: EquivalenceVerdict,
    pub per_degree: Vec<DegreeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transgression_defect: Option<f64>,
    pub params: ReportParams,
    pub defect: GradedFile,
}

impl EquivalenceFile {
    pub fn from_report<T: Real>(r: &EquivalenceReport<T>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            verdict: r.verdict,
            per_degree: r.per_degree.iter().map(DegreeEntry::from_report).collect(),
            transgression_defect: r.transgression_defect.map(|t| t.as_f64()),
            params: r.params.clone(),
            defect: GradedFile::from_graded(&r.defect),
        }
    }
}

/// Parse JSON, mapping syntax and shape errors to [`Error::Schema`].
pub fn from_json<D: serde::de::DeserializeOwned>(text: &str) -> Result<D> {
    serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
}

pub fn to_json<S: Serialize>(value: &S) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Schema(e.to_string()))
}
