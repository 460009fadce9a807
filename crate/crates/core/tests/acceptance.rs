//! Acceptance criteria 1-10, each at its stated grid, tolerance and time
//! budget. Prints one pass/fail line per criterion.

use caloronkit::suites::{run, Row, Suite, SuiteConfig, SuiteReport};

struct Criterion {
    id: usize,
    title: &'static str,
    suite: Suite,
    seconds: f64,
    /// Restricts the criterion to some rows of its suite.
    rows: fn(&Row) -> bool,
}

/// The gerbe row fails with the stated coefficient `1/(4 pi^2)`; the data
/// single out `1/(8 pi^2)` (see `gerbe_identity_fits_one_over_eight_pi_squared`).
const KNOWN_FAILURES: &[(usize, &str)] = &[(5, "S_2 = (1/2 pi i) B + d((1/4 pi^2) int <A, Phi>)")];

fn criteria() -> Vec<Criterion> {
    let all: fn(&Row) -> bool = |_| true;
    vec![
        Criterion { id: 1, title: "calculus suite, T^3 32^3", suite: Suite::Calculus, seconds: 30.0, rows: all },
        Criterion { id: 2, title: "caloron suite, T^2 x S^1 16x16x32, rank 2", suite: Suite::Caloron, seconds: 30.0, rows: all },
        Criterion { id: 3, title: "Chern-Weil suite, T^3 24^3, rank 2, cutoff 2", suite: Suite::Chernweil, seconds: 120.0, rows: all },
        Criterion { id: 4, title: "string suite, 16x16x32, rank 2, cutoff 3", suite: Suite::String, seconds: 180.0, rows: all },
        Criterion { id: 5, title: "total string potential suite", suite: Suite::Total, seconds: 180.0, rows: all },
        Criterion { id: 6, title: "universal string form = odd Chern character", suite: Suite::Universal, seconds: 10.0, rows: all },
        Criterion { id: 7, title: "TWZ suite, T^2 32^2, rank 2, cutoff 2", suite: Suite::Twz, seconds: 120.0, rows: all },
        Criterion { id: 8, title: "surjectivity witness, k = 0", suite: Suite::Witness, seconds: 10.0, rows: |r| r.identity.contains("k = 0") },
        Criterion { id: 9, title: "holonomy convergence order", suite: Suite::Holonomy, seconds: 10.0, rows: |r| r.identity.contains("order") },
        Criterion { id: 10, title: "S^3 integrality, 24x24x48", suite: Suite::Sphere, seconds: 120.0, rows: |r| r.identity.starts_with('|') },
    ]
}

fn describe(row: &Row) -> String {
    let degree = row.degree.map(|d| format!(" [deg {d}]")).unwrap_or_default();
    format!(
        "    {} {}{}: {:.3e} (tol {:e})",
        if row.pass { "ok  " } else { "FAIL" },
        row.identity,
        degree,
        row.defect,
        row.tol
    )
}

fn main() {
    let cfg = SuiteConfig::default();
    let mut unexpected = Vec::new();
    for c in criteria() {
        let report: SuiteReport = run(c.suite, &cfg).unwrap_or_else(|e| panic!("criterion {}: {e}", c.id));
        let rows: Vec<&Row> = report.rows.iter().filter(|r| (c.rows)(r)).collect();
        assert!(!rows.is_empty(), "criterion {} selected no rows", c.id);
        let in_time = report.seconds < c.seconds;
        let pass = in_time && rows.iter().all(|r| r.pass);
        println!(
            "criterion {:>2} {}: {} ({:.1} s of {:.0} s)",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.title,
            report.seconds,
            c.seconds
        );
        for r in &report.rows {
            println!("{}", describe(r));
            let known = KNOWN_FAILURES.iter().any(|&(id, label)| id == c.id && label == r.identity);
            if (c.rows)(r) && r.pass == known {
                unexpected.push(format!("criterion {}: {} ({})", c.id, r.identity, if known { "now passes" } else { "fails" }));
            }
        }
        if !in_time {
            unexpected.push(format!("criterion {}: {:.1} s exceeds {:.0} s", c.id, report.seconds, c.seconds));
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected outcomes: {unexpected:#?}");
        std::process::exit(1);
    }
    println!("acceptance: all outcomes as expected");
}
