//! Path-length and radius distributions as `length,value` tables and SVG bar
//! charts.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::arch::{generate_er_dag, ArchDag, Edge};
use crate::error::{Error, Result};
use crate::paths::{path_length_histogram, radius_distribution};

#[derive(Clone, Debug, PartialEq)]
pub struct DistributionTable {
    /// `(length, value)` for every length `2..=L`, zeros included.
    pub rows: Vec<(usize, f64)>,
}

impl DistributionTable {
    pub fn total(&self) -> f64 {
        self.rows.iter().map(|r| r.1).sum()
    }

    /// `sum l v_l / sum v_l`; `None` for an all-zero table.
    pub fn first_moment(&self) -> Option<f64> {
        let total = self.total();
        (total > 0.0).then(|| self.rows.iter().map(|&(l, v)| l as f64 * v).sum::<f64>() / total)
    }

    pub fn value(&self, length: usize) -> f64 {
        self.rows.iter().find(|r| r.0 == length).map_or(0.0, |r| r.1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("length,value\n");
        for (l, v) in &self.rows {
            let _ = writeln!(out, "{l},{v}");
        }
        out
    }

    /// A plain bar chart: one bar per length, value labels on the y axis.
    pub fn to_svg(&self, title: &str) -> String {
        const W: f64 = 480.0;
        const H: f64 = 320.0;
        const LEFT: f64 = 60.0;
        const BOTTOM: f64 = 40.0;
        const TOP: f64 = 30.0;
        const RIGHT: f64 = 20.0;
        let plot_w = W - LEFT - RIGHT;
        let plot_h = H - TOP - BOTTOM;
        let max = self.rows.iter().map(|r| r.1).fold(0.0f64, f64::max);
        let scale = if max > 0.0 { plot_h / max } else { 0.0 };
        let slot = plot_w / self.rows.len().max(1) as f64;
        let base = H - BOTTOM;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="18" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
            W / 2.0,
            escape(title)
        );
        let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#, W - RIGHT);
        let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{base}" stroke="black"/>"#);
        for (k, &(l, v)) in self.rows.iter().enumerate() {
            let h = v * scale;
            let x = LEFT + k as f64 * slot;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="steelblue"/>"#,
                x + slot * 0.1,
                base - h,
                slot * 0.8,
                h
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{l}</text>"#,
                x + slot / 2.0,
                base + 15.0
            );
        }
        for frac in [0.0, 0.5, 1.0] {
            let y = base - frac * plot_h;
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
                LEFT - 5.0,
                y + 4.0,
                format_tick(frac * max)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">path length (nodes)</text>"#,
            LEFT + plot_w / 2.0,
            H - 5.0
        );
        s.push_str("</svg>\n");
        s
    }
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{:.3}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Source→sink path counts per length.
pub fn histogram_table(dag: &ArchDag) -> Result<DistributionTable> {
    let hist = path_length_histogram(dag, 1, dag.num_nodes())?;
    Ok(DistributionTable { rows: hist.dense_f64() })
}

/// Radius distribution `rho_l` per length.
pub fn radius_table(dag: &ArchDag, weights: &BTreeMap<Edge, f64>, normalized: bool) -> Result<DistributionTable> {
    let rho = radius_distribution(dag, weights, normalized)?;
    Ok(DistributionTable {
        rows: (2..=dag.num_nodes()).map(|l| (l, rho.mass.get(&l).copied().unwrap_or(0.0))).collect(),
    })
}

/// Mean source→sink histogram over DAGs generated with seeds
/// `seed..seed+seeds`.
pub fn averaged_histogram(num_nodes: usize, p: f64, seeds: u64, seed: u64) -> Result<DistributionTable> {
    if seeds == 0 {
        return Err(Error::InvalidParameter("need at least one seed".into()));
    }
    let mut sums = vec![0.0; num_nodes.saturating_sub(1)];
    for s in 0..seeds {
        let dag = generate_er_dag(num_nodes, p, seed.wrapping_add(s))?;
        for (slot, (_, v)) in sums.iter_mut().zip(histogram_table(&dag)?.rows) {
            *slot += v;
        }
    }
    Ok(DistributionTable {
        rows: sums.into_iter().enumerate().map(|(k, v)| (k + 2, v / seeds as f64)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{binomial, uniform_weights};

    #[test]
    fn complete_six_is_binomial() {
        let t = histogram_table(&ArchDag::complete(6).unwrap()).unwrap();
        for &(l, v) in &t.rows {
            assert_eq!(v, binomial(4, l - 2));
        }
        assert!(t.to_csv().starts_with("length,value\n2,1\n3,4\n"));
    }

    #[test]
    fn chain_single_bar() {
        let dag = ArchDag::chain(4).unwrap();
        let t = radius_table(&dag, &uniform_weights(&dag, 0.5), false).unwrap();
        assert_eq!(t.rows, vec![(2, 0.0), (3, 0.0), (4, 0.125)]);
    }

    #[test]
    fn averaged_histogram_tracks_expectation() {
        // E[N_l] for k = 1 is C(L-2, l-2) p^(l-1).
        let t = averaged_histogram(6, 0.5, 2000, 0).unwrap();
        let e3 = binomial(4, 1) * 0.25;
        assert!((t.value(3) - e3).abs() < 0.1, "{}", t.value(3));
    }

    #[test]
    fn svg_has_one_bar_per_length() {
        let t = histogram_table(&ArchDag::complete(5).unwrap()).unwrap();
        let svg = t.to_svg("a < b");
        assert_eq!(svg.matches("fill=\"steelblue\"").count(), 4);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn empty_table_renders() {
        let t = histogram_table(&ArchDag::empty(3).unwrap()).unwrap();
        assert_eq!(t.first_moment(), None);
        assert!(t.to_svg("empty").contains("<svg"));
    }
}
