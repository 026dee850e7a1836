//! File formats: partition documents, run tables and SVG snapshots.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::enhance::AneHistory;
use crate::error::Result;
use crate::geometry::{BBox, Point};
use crate::partition::PhysicalPartition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellExport {
    pub id: usize,
    pub level: usize,
    pub vertices: Vec<Point>,
}

/// JSON document describing one physical partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionExport {
    pub layer: usize,
    /// `[x_min, x_max, y_min, y_max]`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 4]>,
    pub cells: Vec<CellExport>,
    pub adjacency: Vec<[usize; 2]>,
}

impl PartitionExport {
    pub fn from_partition(pp: &PhysicalPartition) -> Self {
        let d = pp.domain;
        Self {
            layer: pp.layer,
            domain: Some([d.x_min, d.x_max, d.y_min, d.y_max]),
            cells: pp
                .cells
                .iter()
                .map(|c| CellExport { id: c.id, level: c.level, vertices: c.vertices.clone() })
                .collect(),
            adjacency: pp.adjacency.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub const RUN_TABLE_HEADER: &str = "structure,params,error,xi_rel,eta,status";

/// CSV run table, six decimals; `eta` is empty when undefined.
pub fn run_table_csv(history: &AneHistory) -> String {
    let mut out = String::from(RUN_TABLE_HEADER);
    out.push('\n');
    for r in &history.records {
        let eta = r.eta.map(|e| format!("{e:.6}")).unwrap_or_default();
        let _ = writeln!(out, "{},{},{:.6},{:.6},{},{}", r.structure, r.params, r.error, r.xi_rel, eta, r.status.as_str());
    }
    out
}

/// Fixed-width text rendering of a run table.
pub fn pretty_run_table(csv: &str) -> String {
    let rows: Vec<Vec<&str>> = csv.lines().filter(|l| !l.is_empty()).map(|l| l.split(',').collect()).collect();
    let cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().map(|r| r.get(c).map_or(0, |s| s.len())).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, r) in rows.iter().enumerate() {
        let line: Vec<String> = (0..cols)
            .map(|c| {
                let cell = r.get(c).copied().unwrap_or("");
                let cell = if i > 0 && cell.is_empty() { "--" } else { cell };
                format!("{cell:<w$}", w = widths[c].max(2))
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

const SVG_SIZE: f64 = 600.0;
const PALETTE: [&str; 6] = ["#dbe9f6", "#fde0c5", "#d9f0d3", "#f2d7ee", "#fff2b3", "#e0e0e0"];

/// SVG with one `<polygon>` per cell, shaded by the layer that last cut it.
pub fn render_svg(doc: &PartitionExport) -> String {
    let bbox = match doc.domain {
        Some([x0, x1, y0, y1]) => BBox { min: Point::new(x0, y0), max: Point::new(x1, y1) },
        None => {
            let all: Vec<Point> = doc.cells.iter().flat_map(|c| c.vertices.iter().copied()).collect();
            if all.is_empty() {
                BBox { min: Point::new(0.0, 0.0), max: Point::new(1.0, 1.0) }
            } else {
                BBox::of(&all)
            }
        }
    };
    let span = bbox.width().max(bbox.height()).max(f64::MIN_POSITIVE);
    let s = SVG_SIZE / span;
    let (w, h) = (bbox.width() * s, bbox.height() * s);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"-4 -4 {:.0} {:.0}\">",
        w + 8.0,
        h + 8.0
    );
    for c in &doc.cells {
        let pts: Vec<String> = c
            .vertices
            .iter()
            .map(|p| format!("{:.3},{:.3}", (p.x - bbox.min.x) * s, (bbox.max.y - p.y) * s))
            .collect();
        let fill = PALETTE[c.level.saturating_sub(1) % PALETTE.len()];
        let _ = writeln!(
            out,
            "  <polygon data-id=\"{}\" points=\"{}\" fill=\"{fill}\" stroke=\"#202020\" stroke-width=\"1\"/>",
            c.id,
            pts.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enhance::{AneRunRecord, RunStatus};
    use crate::network::Architecture;
    use crate::partition::build_layer1;
    use crate::quadrature::RectDomain;

    fn record(eta: Option<f64>, status: RunStatus) -> AneRunRecord {
        AneRunRecord {
            structure: "2-12-1".into(),
            params: 37,
            error: 0.357414,
            xi: 0.357414,
            xi_rel: 0.357414,
            eta,
            status,
            iterations: 10,
            loss: 1.0,
            cells: 36,
        }
    }

    #[test]
    fn csv_layout() {
        let h = AneHistory {
            records: vec![record(None, RunStatus::Accepted), record(Some(0.2931981), RunStatus::Final)],
            low_eta_streak: 0,
            converged: true,
        };
        let csv = run_table_csv(&h);
        assert_eq!(
            csv,
            "structure,params,error,xi_rel,eta,status\n2-12-1,37,0.357414,0.357414,,accepted\n2-12-1,37,0.357414,0.357414,0.293198,final\n"
        );
        assert!(pretty_run_table(&csv).lines().nth(1).unwrap().contains("--"));
    }

    #[test]
    fn svg_counts() {
        let arch = Architecture::new(vec![1]).unwrap();
        let net = crate::network::Network::zeros(&arch);
        let pp = build_layer1(&net, &RectDomain::symmetric_unit());
        let doc = PartitionExport::from_partition(&pp);
        assert_eq!(render_svg(&doc).matches("<polygon").count(), 2);
        let back = PartitionExport::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
        let empty = PartitionExport { layer: 1, domain: None, cells: vec![], adjacency: vec![] };
        let svg = render_svg(&empty);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }
}
