use anyhow::{bail, Context, Result};
use caloronkit::{Factor, GridSpec};

/// Parse a grid descriptor.
///
/// `AxBxC` is a torus; a trailing `s1` marks the last circle as the loop
/// direction (`32x32x64s1`). `s3:AxBxC` is the Euler chart of the 3-sphere.
pub fn parse_grid(text: &str) -> Result<GridSpec> {
    let text = text.trim();
    if let Some(rest) = text.strip_prefix("s3:") {
        let n = samples(rest)?;
        let [n_psi, n_theta, n_phi] = n[..] else {
            bail!("a 3-sphere grid needs three sample counts, got {rest:?}");
        };
        return Ok(GridSpec::new(vec![Factor::EulerSphere3 { n_psi, n_theta, n_phi }], None));
    }
    match text.strip_suffix("s1") {
        Some(body) => {
            let n = samples(body)?;
            let (last, base) = n.split_last().context("empty grid descriptor")?;
            Ok(GridSpec::torus_with_loop(base, *last))
        }
        None => Ok(GridSpec::torus(&samples(text)?)),
    }
}

fn samples(text: &str) -> Result<Vec<usize>> {
    if text.is_empty() {
        bail!("empty grid descriptor");
    }
    text.split('x')
        .map(|s| s.parse::<usize>().with_context(|| format!("bad sample count {s:?} in grid {text:?}")))
        .collect()
}

/// Mark the last circle as the loop direction when no factor is marked yet.
pub fn with_loop(mut spec: GridSpec) -> GridSpec {
    if spec.distinguished_circle.is_none()
        && matches!(spec.factors.last(), Some(Factor::Circle { .. }))
    {
        spec.distinguished_circle = Some(spec.factors.len() - 1);
    }
    spec
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptors() {
        assert_eq!(parse_grid("32x32x64s1").unwrap(), GridSpec::torus_with_loop(&[32, 32], 64));
        assert_eq!(parse_grid("16x16").unwrap(), GridSpec::torus(&[16, 16]));
        assert_eq!(parse_grid("64s1").unwrap(), GridSpec::torus_with_loop(&[], 64));
        assert!(matches!(
            parse_grid("s3:8x8x16").unwrap().factors[0],
            Factor::EulerSphere3 { n_psi: 8, n_theta: 8, n_phi: 16 }
        ));
        assert!(parse_grid("16xx16").is_err());
        assert!(parse_grid("s3:8x8").is_err());
        assert_eq!(with_loop(GridSpec::torus(&[8, 16])), GridSpec::torus_with_loop(&[8], 16));
    }
}
