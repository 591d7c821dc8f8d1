//! Lookup tables for the tolerance calibrator: `k* = sup{k : Bin(k; n, ε) <= δ}`
//! and the smallest `ε` certified by a marginal calibrator at level `α`.

use crate::calibration::tolerance_eps_given_alpha;
use crate::dists::{binom_sup_k, SupK};
use crate::error::Result;
use serde::Serialize;
use std::fmt::Write;

pub const TABLE_NS: [u64; 4] = [100, 1000, 10_000, 100_000];
/// Levels used for both axes, in display order.
pub const TABLE_LEVELS: [f64; 5] = [0.10, 0.05, 0.01, 0.005, 0.001];

/// Decimal rounding of a percentage to four places.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Rounding {
    /// Toward zero.
    #[default]
    Truncate,
    /// Toward `+∞`; never understates the level.
    Up,
    HalfUp,
}

impl Rounding {
    /// Percent value of `p` in units of `1e-4` percent.
    pub fn ticks(self, p: f64) -> u64 {
        let scaled = p * 1e6;
        let t = match self {
            Rounding::Truncate => scaled.floor(),
            Rounding::Up => scaled.ceil(),
            Rounding::HalfUp => (scaled + 0.5).floor(),
        };
        t.max(0.0) as u64
    }

    pub fn format(self, p: f64) -> String {
        let t = self.ticks(p);
        format!("{}.{:04}", t / 10_000, t % 10_000)
    }
}

/// `cells[i][d][e]` for `ns[i]`, `δ = TABLE_LEVELS[d]`, `ε = TABLE_LEVELS[e]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1 {
    pub ns: Vec<u64>,
    pub cells: Vec<[[SupK; 5]; 5]>,
}

/// `cells[i][d][a]` holds `ε` as a fraction for `δ = TABLE_LEVELS[d]`,
/// `α = TABLE_LEVELS[a]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2 {
    pub ns: Vec<u64>,
    pub cells: Vec<[[f64; 5]; 5]>,
}

pub fn table1(ns: &[u64]) -> Result<Table1> {
    let mut cells = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut block = [[SupK::Infeasible; 5]; 5];
        for (d, &delta) in TABLE_LEVELS.iter().enumerate() {
            for (e, &eps) in TABLE_LEVELS.iter().enumerate() {
                block[d][e] = binom_sup_k(n, eps, delta)?;
            }
        }
        cells.push(block);
    }
    Ok(Table1 { ns: ns.to_vec(), cells })
}

pub fn table2(ns: &[u64]) -> Result<Table2> {
    let mut cells = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut block = [[0.0; 5]; 5];
        for (d, &delta) in TABLE_LEVELS.iter().enumerate() {
            for (a, &alpha) in TABLE_LEVELS.iter().enumerate() {
                block[d][a] = tolerance_eps_given_alpha(n, alpha, delta)?;
            }
        }
        cells.push(block);
    }
    Ok(Table2 { ns: ns.to_vec(), cells })
}

fn level_label(v: f64) -> String {
    format!("{}%", Rounding::HalfUp.format(v).trim_end_matches('0').trim_end_matches('.'))
}

fn render<F: Fn(usize, usize, usize) -> String>(title: &str, axis: &str, ns: &[u64], cell: F) -> String {
    let mut out = String::new();
    writeln!(out, "{title}").unwrap();
    for (i, n) in ns.iter().enumerate() {
        writeln!(out).unwrap();
        writeln!(out, "n = {n}").unwrap();
        write!(out, "{:>8}", "delta").unwrap();
        for &l in &TABLE_LEVELS {
            write!(out, "{:>10}", format!("{axis}={}", level_label(l))).unwrap();
        }
        writeln!(out).unwrap();
        for (d, &delta) in TABLE_LEVELS.iter().enumerate() {
            write!(out, "{:>8}", level_label(delta)).unwrap();
            for c in 0..TABLE_LEVELS.len() {
                write!(out, "{:>10}", cell(i, d, c)).unwrap();
            }
            writeln!(out).unwrap();
        }
    }
    out
}

/// Aligned text; an empty defining set prints as 0.
pub fn render_table1(t: &Table1) -> String {
    render("sup{k : Bin(k; n, eps) <= delta}", "eps", &t.ns, |i, d, e| {
        t.cells[i][d][e].or_zero().to_string()
    })
}

/// Aligned text in percent with four decimals.
pub fn render_table2(t: &Table2, rounding: Rounding) -> String {
    render(
        "smallest eps (%) with eps >= inf{p : Bin(floor(alpha(n+1) - 1); n, p) <= delta}",
        "alpha",
        &t.ns,
        |i, d, a| rounding.format(t.cells[i][d][a]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_cells() {
        let t1 = table1(&TABLE_NS).unwrap();
        assert_eq!(t1.cells[3][1][2], SupK::Value(948));
        assert_eq!(t1.cells[0][0][2], SupK::Infeasible);

        let t2 = table2(&TABLE_NS).unwrap();
        assert_eq!(Rounding::Truncate.format(t2.cells[2][4][0]), "10.9486");
        assert_eq!(Rounding::Truncate.format(t2.cells[0][0][3]), "0.0000");
        assert_eq!(Rounding::Truncate.format(t2.cells[1][0][0]), "11.2203");
    }

    #[test]
    fn rounding_modes() {
        // 13.835184...% : truncation and half-up agree, round-up differs
        let p = 0.1383518438;
        assert_eq!(Rounding::Truncate.format(p), "13.8351");
        assert_eq!(Rounding::HalfUp.format(p), "13.8352");
        assert_eq!(Rounding::Up.format(p), "13.8352");
        // 1.1000179...% : half-up rounds down, round-up does not
        let p = 0.011000179;
        assert_eq!(Rounding::HalfUp.format(p), "1.1000");
        assert_eq!(Rounding::Up.format(p), "1.1001");
        assert_eq!(Rounding::Up.format(0.0), "0.0000");
    }

    #[test]
    fn rendering_is_stable_and_accepts_custom_ns() {
        let t = table1(&[50, 200]).unwrap();
        let a = render_table1(&t);
        assert_eq!(a, render_table1(&table1(&[50, 200]).unwrap()));
        assert!(a.contains("n = 50") && a.contains("n = 200"));
        let lines: Vec<&str> = a.lines().collect();
        assert!(lines[3].contains("eps=10%") && lines[3].contains("eps=0.1%"));
        assert!(lines[4].starts_with("     10%"));
    }
}
