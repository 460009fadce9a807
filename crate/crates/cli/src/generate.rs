use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use caloronkit::io::{GroupMapFile, PairFile};
use caloronkit::kmodel::homotopy_grid;
use caloronkit::lie::rotation_homotopy_family;
use caloronkit::random::{random_pair, random_smooth_map, RandomSpec};
use caloronkit::{Factor, Grid};
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::grid_arg::{parse_grid, with_loop};
use crate::output::write_json;
use crate::Common;

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Data {
    /// A connection pair `(A, Phi)` on `M x S^1`.
    Pair,
    /// A smooth group-valued map.
    Map,
    /// A map on `M x [0, 1]`, the parameter being the last axis.
    Homotopy,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HomotopyKind {
    /// Rotation from `g + g^-1` to the identity; needs `--from`.
    Rotation,
    /// Random smooth homotopy.
    Random,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub data: Data,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Seed of the random data.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Highest Fourier mode of random fields.
    #[arg(long, default_value_t = 1)]
    pub band_limit: usize,
    /// Amplitude of random fields (default 0.3 for pairs, 0.1 for maps).
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Produce unitary data.
    #[arg(long)]
    pub unitary: bool,
    /// Produce a based map (identity on the base slice of the loop).
    #[arg(long)]
    pub based: bool,
    #[arg(long, value_enum, default_value_t = HomotopyKind::Rotation)]
    pub kind: HomotopyKind,
    /// Map file the rotation homotopy starts from.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Lobatto nodes along the homotopy parameter.
    #[arg(long, default_value_t = 24)]
    pub t_nodes: usize,
}

impl GenerateArgs {
    fn spec(&self, default_amplitude: f64) -> Result<RandomSpec> {
        let seed = self.seed.context("--seed is required for random data")?;
        Ok(RandomSpec::new(seed, self.band_limit, self.amplitude.unwrap_or(default_amplitude)))
    }

    fn grid(&self) -> Result<caloronkit::GridSpec> {
        parse_grid(self.common.grid.as_deref().context("--grid is required")?)
    }
}

pub fn run(args: &GenerateArgs) -> Result<()> {
    args.common.validate()?;
    let rank = args.common.rank;
    let t_factor = Factor::Lobatto { n: args.t_nodes, a: 0.0, b: 1.0 };
    match (args.data, args.kind) {
        (Data::Pair, _) => {
            let grid = Grid::new(with_loop(args.grid()?))?;
            let p = random_pair(&grid, rank, &args.spec(0.3)?, args.unitary)?;
            write_json(&args.common.out, &PairFile::from_pair(&p))
        }
        (Data::Map, _) => {
            let spec = args.grid()?;
            let spec = if args.based { with_loop(spec) } else { spec };
            let grid = Grid::new(spec)?;
            let g = random_smooth_map(&grid, rank, &args.spec(0.1)?, args.unitary, args.based)?;
            write_json(&args.common.out, &GroupMapFile::from_map(&g))
        }
        (Data::Homotopy, HomotopyKind::Rotation) => {
            let from = args.from.as_ref().context("--kind rotation needs --from <map.json>")?;
            let text = std::fs::read_to_string(from).with_context(|| format!("reading {}", from.display()))?;
            let g = caloronkit::io::from_json::<GroupMapFile>(&text)?.to_map::<f64>(None)?;
            let big = homotopy_grid(g.grid(), t_factor)?;
            let h = rotation_homotopy_family(&g, &big)?;
            write_json(&args.common.out, &GroupMapFile::from_map(&h))
        }
        (Data::Homotopy, HomotopyKind::Random) => {
            if args.from.is_some() {
                bail!("--from is only used by --kind rotation");
            }
            let base = Grid::new(args.grid()?)?;
            let big = homotopy_grid(&base, t_factor)?;
            let h = random_smooth_map(&big, rank, &args.spec(0.1)?, args.unitary, false)?;
            write_json(&args.common.out, &GroupMapFile::from_map(&h))
        }
    }
}
