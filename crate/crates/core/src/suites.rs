//! Named verification suites. Each suite evaluates a list of identities on
//! seeded random data and reports one row per identity and degree.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::chernweil::{chern_character, chern_simons, chern_simons_via_slices, odd_chern_character, ConnectionPath};
use crate::error::{Error, Result};
use crate::forms::{GradedForm, MatrixForm};
use crate::geometry::{curvature, ConnectionPair, PairPath};
use crate::grid::{Factor, Grid, GridSpec};
use crate::kmodel::{cs_equivalent, homotopy_endpoint, homotopy_grid, inverse_witness, twz_integrand, twz_transgression, EquivalenceVerdict};
use crate::lie::{holonomy, matrix_exp, sphere_identity_map, GroupMap};
use crate::linalg;
use crate::random::{random_algebra_field, random_one_form, random_pair, random_smooth_map, RandomSpec};
use crate::stringforms::{
    default_t_factor, flat_pair, gerbe_curving_check, string_form, string_potential, surjectivity_witness,
    tau_hat_pullback, total_string_potential, universal_string_pullback, PotentialAlgorithm, StringFormAlgorithm,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Calculus,
    Caloron,
    Chernweil,
    String,
    Total,
    Twz,
    Universal,
    Witness,
    Holonomy,
    Sphere,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Calculus,
        Suite::Caloron,
        Suite::Chernweil,
        Suite::String,
        Suite::Total,
        Suite::Twz,
        Suite::Universal,
        Suite::Witness,
        Suite::Holonomy,
        Suite::Sphere,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Calculus => "calculus",
            Suite::Caloron => "caloron",
            Suite::Chernweil => "chernweil",
            Suite::String => "string",
            Suite::Total => "total",
            Suite::Twz => "twz",
            Suite::Universal => "universal",
            Suite::Witness => "witness",
            Suite::Holonomy => "holonomy",
            Suite::Sphere => "sphere",
        }
    }

    /// Grid used when the configuration does not name one.
    pub fn default_grid(self) -> GridSpec {
        match self {
            Suite::Calculus => GridSpec::torus(&[32, 32, 32]),
            Suite::Caloron | Suite::String | Suite::Total | Suite::Witness => {
                GridSpec::torus_with_loop(&[16, 16], 32)
            }
            Suite::Chernweil => GridSpec::torus(&[24, 24, 24]),
            Suite::Twz => GridSpec::torus(&[32, 32]),
            Suite::Universal => GridSpec::torus(&[16, 16, 16]),
            Suite::Holonomy => GridSpec::torus_with_loop(&[], 16),
            Suite::Sphere => GridSpec::new(
                vec![Factor::EulerSphere3 {
                    n_psi: 24,
                    n_theta: 24,
                    n_phi: 48,
                }],
                None,
            ),
        }
    }

    pub fn default_cutoff(self) -> usize {
        match self {
            Suite::String | Suite::Total => 3,
            Suite::Universal => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub grid: Option<GridSpec>,
    pub rank: usize,
    pub cutoff: Option<usize>,
    pub seed: u64,
    pub band_limit: usize,
    /// Amplitude of random algebra-valued data.
    pub amplitude: f64,
    /// Amplitude of the exponents of random group-valued maps.
    pub map_amplitude: f64,
    /// Overrides every nonzero identity tolerance.
    pub tol: Option<f64>,
    /// Relative tolerance of exactness rows.
    pub exact_tol: f64,
    pub ode_steps: Option<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            grid: None,
            rank: 2,
            cutoff: None,
            seed: 0,
            band_limit: 1,
            amplitude: 0.3,
            map_amplitude: 0.1,
            tol: None,
            exact_tol: 1e-7,
            ode_steps: None,
        }
    }
}

impl SuiteConfig {
    fn data(&self, stream: u64) -> RandomSpec {
        RandomSpec::new(self.seed, self.band_limit, self.amplitude).fork(stream)
    }

    fn maps(&self, stream: u64) -> RandomSpec {
        RandomSpec::new(self.seed, self.band_limit, self.map_amplitude).fork(stream)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub identity: String,
    pub degree: Option<usize>,
    pub defect: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub grid: GridSpec,
    pub cutoff: usize,
    pub rows: Vec<Row>,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn worst(&self) -> Option<&Row> {
        self.rows
            .iter()
            .max_by(|a, b| (a.defect / a.tol.max(f64::MIN_POSITIVE)).total_cmp(&(b.defect / b.tol.max(f64::MIN_POSITIVE))))
    }
}

struct Rows<'a> {
    cfg: &'a SuiteConfig,
    rows: Vec<Row>,
}

impl Rows<'_> {
    fn push(&mut self, identity: &str, degree: Option<usize>, defect: f64, tol: f64) {
        let tol = match self.cfg.tol {
            Some(t) if tol > 0.0 => t,
            _ => tol,
        };
        self.rows.push(Row {
            identity: identity.to_string(),
            degree,
            defect,
            tol,
            pass: defect <= tol,
        });
    }

    /// One row per degree present in either form.
    fn per_degree(&mut self, identity: &str, a: &GradedForm<f64>, b: &GradedForm<f64>, tol: f64) -> Result<()> {
        for (d, v) in a.defects(b)? {
            self.push(identity, Some(d), v, tol);
        }
        Ok(())
    }

    fn closed(&mut self, identity: &str, a: &GradedForm<f64>, tol: f64) {
        for (&d, f) in a.terms() {
            if d < f.grid().dim() {
                self.push(identity, Some(d), f.d().max_abs(), tol);
            }
        }
    }

    /// Exactness evidence relative to the form's scale.
    fn exact(&mut self, identity: &str, a: &GradedForm<f64>) -> Result<()> {
        for r in a.is_exact(self.cfg.exact_tol)? {
            self.push(identity, Some(r.degree), r.worst_period.max(r.closedness) / r.scale, self.cfg.exact_tol);
        }
        Ok(())
    }
}

/// Run one suite.
pub fn run(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let spec = cfg.grid.clone().unwrap_or_else(|| suite.default_grid());
    let grid = Grid::<f64>::new(spec.clone())?;
    let cutoff = cfg.cutoff.unwrap_or_else(|| suite.default_cutoff());
    let start = Instant::now();
    let mut rows = Rows { cfg, rows: Vec::new() };
    match suite {
        Suite::Calculus => calculus(&grid, cfg, &mut rows)?,
        Suite::Caloron => caloron(&grid, cfg, &mut rows)?,
        Suite::Chernweil => chernweil(&grid, cfg, cutoff, &mut rows)?,
        Suite::String => string(&grid, cfg, cutoff, &mut rows)?,
        Suite::Total => total(&grid, cfg, cutoff, &mut rows)?,
        Suite::Twz => twz(&grid, cfg, cutoff, &mut rows)?,
        Suite::Universal => universal(&grid, cfg, cutoff, &mut rows)?,
        Suite::Witness => witness(&grid, &mut rows)?,
        Suite::Holonomy => holonomy_suite(cfg, &mut rows)?,
        Suite::Sphere => sphere(&grid, &mut rows)?,
    }
    Ok(SuiteReport {
        suite,
        grid: spec,
        cutoff,
        rows: rows.rows,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn all_axes(grid: &Grid<f64>) -> u32 {
    (1u32 << grid.dim()) - 1
}

fn calculus(grid: &Arc<Grid<f64>>, cfg: &SuiteConfig, rows: &mut Rows) -> Result<()> {
    let n = cfg.rank;
    let f = random_algebra_field(grid, n, &cfg.data(1), false, false)?;
    let a = random_one_form(grid, n, &cfg.data(2), false, false, all_axes(grid))?;
    let b = random_one_form(grid, n, &cfg.data(3), false, false, all_axes(grid))?;
    let ab = a.wedge(&b)?;
    for (form, deg) in [(&f, 0), (&a, 1), (&ab, 2)] {
        rows.push("d(d a) = 0", Some(deg), form.d().d().max_abs(), 1e-9);
    }
    let mut rhs = a.d().wedge(&b)?;
    rhs.axpy(Complex::new(-1.0, 0.0), &a.wedge(&b.d())?)?;
    rows.push("d(a ^ b) = da ^ b - a ^ db", Some(2), ab.d().max_abs_diff(&rhs)?, 1e-9);
    let mut rhs = f.d().wedge(&a)?;
    rhs.axpy(Complex::new(1.0, 0.0), &f.wedge(&a.d())?)?;
    rows.push("d(f a) = df ^ a + f da", Some(1), f.wedge(&a)?.d().max_abs_diff(&rhs)?, 1e-9);
    if ab.degree() + 1 == grid.dim() {
        let total = ab.d().integrate()?;
        let defect = total.iter().map(|z| z.norm()).fold(0.0, f64::max);
        rows.push("integral of d omega over a closed manifold = 0", Some(grid.dim()), defect, 1e-9);
    }
    let g = random_smooth_map(grid, n, &cfg.maps(4), true, false)?;
    let theta = g.maurer_cartan();
    let flat = theta.d().add(&theta.wedge(&theta)?)?;
    rows.push("d Theta + Theta ^ Theta = 0", Some(2), flat.max_abs(), 1e-9);
    Ok(())
}

fn caloron(grid: &Arc<Grid<f64>>, cfg: &SuiteConfig, rows: &mut Rows) -> Result<()> {
    let p = random_pair(grid, cfg.rank, &cfg.data(1), true)?;
    let a = p.caloron_transform();
    let q = a.inverse_caloron()?;
    let back = q.a().max_abs_diff(p.a())?.max(q.phi().max_abs_diff(p.phi())?);
    rows.push("inverse caloron of caloron transform = (A, Phi)", None, back, 0.0);
    let again = q.caloron_transform().form().max_abs_diff(a.form())?;
    rows.push("caloron transform of inverse caloron = a", None, again, 0.0);
    let theta = p.theta_axis();
    let id = linalg::identity::<f64>(cfg.rank);
    let dtheta = MatrixForm::from_fn(grid, 1, cfg.rank, |mask, _, out| {
        if mask == 1 << theta {
            out.copy_from_slice(&id);
        }
    });
    let split = p.base_curvature().add(&p.higgs_covariant_derivative().wedge(&dtheta)?)?;
    rows.push("R = F + nabla Phi ^ dtheta", Some(2), curvature(a.form()).max_abs_diff(&split)?, 1e-9);
    Ok(())
}

fn chernweil(grid: &Arc<Grid<f64>>, cfg: &SuiteConfig, cutoff: usize, rows: &mut Rows) -> Result<()> {
    let n = cfg.rank;
    let a0 = random_one_form(grid, n, &cfg.data(1), true, false, all_axes(grid))?;
    let a1 = random_one_form(grid, n, &cfg.data(2), true, false, all_axes(grid))?;
    let ch0 = chern_character(&a0, cutoff)?;
    let ch1 = chern_character(&a1, cutoff)?;
    rows.closed("d Ch(A) = 0", &ch0, 1e-9);
    let path = ConnectionPath::straight_line(a0, a1)?;
    let cs = chern_simons(&path, cutoff)?;
    rows.per_degree("d CS(line) = Ch(A1) - Ch(A0)", &cs.d(), &ch1.sub(&ch0)?, 1e-8)?;
    let slices = chern_simons_via_slices(&path, cutoff, &default_t_factor(cutoff))?;
    rows.per_degree("CS direct = CS via slices", &cs, &slices, 1e-8)?;
    if grid.is_torus() {
        for k in -3i32..=3 {
            let g = GroupMap::from_fn(grid, 1, true, false, |p, out| {
                out[0] = Complex::from_polar(1.0, k as f64 * grid.coords(p)[0]);
            })?;
            let ch = odd_chern_character(&g, cutoff)?;
            let period = ch.get(1).map(|f| f.periods()).transpose()?.and_then(|ps| {
                ps.into_iter().find(|(axes, _)| axes == &[0]).map(|(_, v)| v)
            });
            let defect = (period.unwrap_or_default() - Complex::new(k as f64, 0.0)).norm();
            rows.push(&format!("integral of Ch_1(e^(i k x)) = k, k = {k}"), Some(1), defect, 1e-10);
        }
    }
    Ok(())
}

/// Curved path with the endpoints of the line from `p0` to `p1`.
fn curved_path(p0: &ConnectionPair<f64>, p1: &ConnectionPair<f64>, q: &ConnectionPair<f64>) -> Result<PairPath<f64>> {
    PairPath::from_fn(Factor::Lobatto { n: 33, a: 0.0, b: 1.0 }, |t| {
        let base = p0.lerp(p1, t)?;
        let bump = (std::f64::consts::PI * t).sin();
        let mut a = base.a().clone();
        a.axpy(Complex::new(bump, 0.0), q.a())?;
        let mut phi = base.phi().clone();
        phi.axpy(Complex::new(bump, 0.0), q.phi())?;
        ConnectionPair::new(a, phi, base.is_unitary())
    })
}

fn explicit(p0: &ConnectionPair<f64>, p1: &ConnectionPair<f64>, cutoff: usize) -> Result<GradedForm<f64>> {
    let line = PairPath::straight_line(p0.clone(), p1.clone())?;
    string_potential(&line, cutoff, PotentialAlgorithm::Explicit, None)
}

fn string(grid: &Arc<Grid<f64>>, cfg: &SuiteConfig, cutoff: usize, rows: &mut Rows) -> Result<()> {
    let n = cfg.rank;
    let p0 = random_pair(grid, n, &cfg.data(1), true)?;
    let p1 = random_pair(grid, n, &cfg.data(2), true)?;
    let p2 = random_pair(grid, n, &cfg.data(3), true)?;
    let s0 = string_form(&p0, cutoff, StringFormAlgorithm::Direct)?;
    let s0c = string_form(&p0, cutoff, StringFormAlgorithm::ViaCaloron)?;
    rows.per_degree("s direct = s via caloron", &s0, &s0c, 1e-9)?;
    rows.closed("d s = 0", &s0, 1e-9);
    let s1 = string_form(&p1, cutoff, StringFormAlgorithm::Direct)?;
    let line = PairPath::straight_line(p0.clone(), p1.clone())?;
    let e = string_potential(&line, cutoff, PotentialAlgorithm::Explicit, None)?;
    let sl = string_potential(&line, cutoff, PotentialAlgorithm::Slice, None)?;
    let cs = string_potential(&line, cutoff, PotentialAlgorithm::CsFiber, None)?;
    rows.per_degree("S slice = S explicit", &sl, &e, 1e-8)?;
    rows.per_degree("S cs_fiber = S explicit", &cs, &e, 1e-8)?;
    rows.per_degree("dS = s1 - s0", &e.d(), &s1.sub(&s0)?, 1e-8)?;
    let q = random_pair(grid, n, &cfg.data(4), true)?;
    let curved = string_potential(&curved_path(&p0, &p1, &q)?, cutoff, PotentialAlgorithm::Explicit, None)?;
    rows.exact("S(line) - S(curved path) is exact", &e.sub(&curved)?)?;
    let trans = explicit(&p0, &p2, cutoff)?.sub(&e)?.sub(&explicit(&p1, &p2, cutoff)?)?;
    rows.exact("S(p0, p2) - S(p0, p1) - S(p1, p2) is exact", &trans)?;
    let sum = string_form(&p0.direct_sum(&p1)?, cutoff, StringFormAlgorithm::Direct)?;
    rows.per_degree("s(p0 + p1) = s(p0) + s(p1)", &sum, &s0.add(&s1)?, 1e-13)?;
    Ok(())
}

/// Traceless part of a pair.
fn traceless(p: &ConnectionPair<f64>) -> Result<ConnectionPair<f64>> {
    let n = p.rank();
    let strip = |f: &MatrixForm<f64>| -> Result<MatrixForm<f64>> {
        let comps = f
            .components()
            .iter()
            .map(|c| {
                let mut c = c.clone();
                for m in c.chunks_mut(n * n) {
                    let tr = (0..n).map(|i| m[i * n + i]).sum::<Complex<f64>>() / n as f64;
                    (0..n).for_each(|i| m[i * n + i] -= tr);
                }
                c
            })
            .collect();
        MatrixForm::from_components(f.grid(), f.degree(), n, comps)
    };
    ConnectionPair::new(strip(p.a())?, strip(p.phi())?, p.is_unitary())
}

fn total(grid: &Arc<Grid<f64>>, cfg: &SuiteConfig, cutoff: usize, rows: &mut Rows) -> Result<()> {
    let n = cfg.rank;
    let p = random_pair(grid, n, &cfg.data(1), true)?;
    let t = total_string_potential(&p, cutoff)?;
    let line = explicit(&ConnectionPair::trivial(grid, n)?, &p, cutoff)?;
    rows.per_degree("total string potential = S(line from trivial pair)", &t, &line, 1e-8)?;
    let s = string_form(&p, cutoff, StringFormAlgorithm::Direct)?;
    rows.per_degree("d(total string potential) = s", &t.d(), &s, 1e-8)?;
    let g = random_smooth_map(grid, n, &cfg.maps(2), true, true)?;
    let tau = tau_hat_pullback(&g, cutoff)?;
    let flat = explicit(&ConnectionPair::trivial(grid, n)?, &flat_pair(&g)?, cutoff)?;
    rows.per_degree("tau_hat pullback = S(line to Flat pair)", &tau, &flat, 1e-8)?;
    rows.closed("d tau_hat pullback = 0", &tau, 1e-9);
    let su = traceless(&random_pair(grid, n, &cfg.data(3), true)?)?;
    let (_, defect) = gerbe_curving_check(&su)?;
    rows.push("S_2 = (1/2 pi i) B + d((1/4 pi^2) int <A, Phi>)", Some(2), defect, 1e-8);
    Ok(())
}

fn twz(grid: &Arc<Grid<f64>>, cfg: &SuiteConfig, cutoff: usize, rows: &mut Rows) -> Result<()> {
    let n = cfg.rank;
    let g = random_smooth_map(grid, n, &cfg.maps(1), true, false)?;
    let w = inverse_witness(&g, cutoff, cfg.exact_tol, None)?;
    rows.push("rotation homotopy trace nullity", None, twz_integrand(&w.homotopy, cutoff)?.max_abs(), 1e-10);
    let worst = w.report.per_degree.iter().map(|r| r.worst_period.max(r.closedness)).fold(0.0, f64::max);
    let ok = w.report.verdict == EquivalenceVerdict::Equivalent;
    rows.push("g + g^-1 is CS-equivalent to the identity", None, if ok { worst } else { f64::INFINITY }, 1e-10);

    let big = homotopy_grid(grid, Factor::Lobatto { n: 16, a: 0.0, b: 1.0 })?;
    let h = random_smooth_map(&big, n, &cfg.maps(2), true, false)?;
    let (g0, g1) = (homotopy_endpoint(&h, false)?, homotopy_endpoint(&h, true)?);
    let tw = twz_transgression(&h, cutoff)?;
    let delta = odd_chern_character(&g1, cutoff)?.sub(&odd_chern_character(&g0, cutoff)?)?;
    rows.per_degree("d twz(G) = Ch_odd(g1) - Ch_odd(g0)", &tw.d(), &delta, 1e-7)?;

    let ns = big.shape()[big.dim() - 1];
    let constant = GroupMap::from_fn(&big, n, true, false, |p, out| out.copy_from_slice(g0.value(p / ns)))?;
    let r = cs_equivalent(&g0, &g0, &constant, cutoff, cfg.exact_tol)?;
    let ok = r.verdict == EquivalenceVerdict::Equivalent;
    rows.push("reflexivity: constant homotopy", None, if ok { r.defect.max_abs() } else { f64::INFINITY }, 1e-10);

    let reversed = GroupMap::from_fn(&big, n, true, false, |p, out| {
        let (q, k) = (p / ns, p % ns);
        out.copy_from_slice(h.value(q * ns + ns - 1 - k));
    })?;
    let fwd = cs_equivalent(&g0, &g1, &h, cutoff, cfg.exact_tol)?;
    let back = cs_equivalent(&g1, &g0, &reversed, cutoff, cfg.exact_tol)?;
    let sym = fwd.defect.add(&back.defect)?.max_abs();
    let agree = fwd.verdict == back.verdict;
    rows.push("symmetry: reversed homotopy negates the transgression", None, if agree { sym } else { f64::INFINITY }, 1e-10);
    Ok(())
}

fn universal(grid: &Arc<Grid<f64>>, cfg: &SuiteConfig, cutoff: usize, rows: &mut Rows) -> Result<()> {
    for stream in 1..=3 {
        let spec = RandomSpec::new(cfg.seed, cfg.band_limit, 0.5).fork(stream);
        let g = random_smooth_map(grid, cfg.rank, &spec, false, false)?;
        let u = universal_string_pullback(&g, cutoff)?;
        let o = odd_chern_character(&g, cutoff)?;
        rows.per_degree(&format!("universal string form = Ch_odd, map {stream}"), &u, &o, 1e-12)?;
    }
    Ok(())
}

fn witness(grid: &Arc<Grid<f64>>, rows: &mut Rows) -> Result<()> {
    type Profile = (&'static str, fn(&[f64]) -> f64, f64);
    let profiles: [Profile; 3] = [
        ("f = 0.7", |_| 0.7, 1e-12),
        ("f = sin x1", |x| x[0].sin(), 1e-10),
        ("f = cos x1 + sin(2 x2) / 2", |x| x[0].cos() + 0.5 * x.get(1).map_or(0.0, |y| (2.0 * y).sin()), 1e-10),
    ];
    let theta = grid.distinguished_axis().ok_or(Error::NoDistinguishedCircle)?;
    let base = grid.remove_axis(theta)?;
    for (label, f, tol) in profiles {
        let p = surjectivity_witness(grid, f, 0, None)?;
        let s = explicit(&ConnectionPair::trivial(grid, 1)?, &p, 1)?;
        let s0 = s.get(0).ok_or_else(|| Error::Invariant("missing degree 0".into()))?;
        let defect = (0..base.len())
            .map(|q| (s0.at(0, q)[0] - Complex::new(f(&base.coords(q)), 0.0)).norm())
            .fold(0.0, f64::max);
        rows.push(&format!("S(line to witness) = f, k = 0, {label}"), Some(0), defect, tol);
    }
    let square = Grid::new(GridSpec::new(
        vec![
            Factor::Interval { n: 17, a: 0.0, b: 1.0 },
            Factor::Interval { n: 17, a: 0.0, b: 1.0 },
            Factor::Circle { n: 32 },
        ],
        Some(2),
    ))?;
    let p = surjectivity_witness(&square, |x: &[f64]| 0.5 + x[0] * x[1], 1, None)?;
    let s = explicit(&ConnectionPair::trivial(&square, 1)?, &p, 2)?;
    let sp = string_form(&p, 2, StringFormAlgorithm::Direct)?;
    rows.per_degree("d S(line to witness) = s(witness), k = 1", &s.d(), &sp, 1e-7)?;
    Ok(())
}

/// Closed-form holonomy errors of a constant non-normal `Phi` at the given
/// RK4 step counts.
pub fn holonomy_errors(steps: &[usize]) -> Result<Vec<f64>> {
    let phi = [
        Complex::new(0.0, 0.3),
        Complex::new(0.7, 0.1),
        Complex::new(-0.4, 0.0),
        Complex::new(0.2, -0.5),
    ];
    let samples: Vec<Complex<f64>> = (0..16).flat_map(|_| phi).collect();
    let scaled: Vec<Complex<f64>> = phi.iter().map(|z| z * 2.0 * std::f64::consts::PI).collect();
    let exact = matrix_exp(&scaled, 2);
    steps
        .iter()
        .map(|&s| Ok(linalg::max_abs_diff(&holonomy(&samples, 2, s, false)?, &exact)))
        .collect()
}

fn holonomy_suite(cfg: &SuiteConfig, rows: &mut Rows) -> Result<()> {
    let errs = holonomy_errors(&[16, 32, 64])?;
    let order = errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    rows.rows.push(Row {
        identity: "RK4 holonomy convergence order over N = 16, 32, 64 (at least 3.7)".into(),
        degree: None,
        defect: order,
        tol: 3.7,
        pass: order >= 3.7,
    });
    let n = 16;
    let half = vec![Complex::new(0.0, 0.5); n];
    let steps = cfg.ode_steps.unwrap_or_else(|| crate::lie::default_ode_steps(n));
    let h = holonomy(&half, 1, steps, true)?;
    rows.push("holonomy of (i/2) I = -I", None, (h[0] + 1.0).norm(), 1e-10);
    Ok(())
}

fn sphere(grid: &Arc<Grid<f64>>, rows: &mut Rows) -> Result<()> {
    let g = sphere_identity_map(grid)?;
    let ch = odd_chern_character(&g, 1)?;
    let top = ch.get(3).ok_or_else(|| Error::Degree("no degree-3 term".into()))?;
    let value = top.integrate()?[0];
    rows.push("|integral of Ch_3(identity of SU(2))| = 1", Some(3), (value.norm() - 1.0).abs(), 1e-3);
    rows.push("integral of Ch_3 = -1 in the chart orientation", Some(3), (value + 1.0).norm(), 1e-3);
    Ok(())
}
