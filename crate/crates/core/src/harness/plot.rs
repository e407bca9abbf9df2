use std::path::{Path, PathBuf};

use log::warn;
use plotters::prelude::*;

use super::run::{aggregate, MetricsTable};
use crate::error::{Error, Result};

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Plot(e.to_string())
}

/// Metrics files matching a glob pattern, in path order.
pub fn expand(pattern: &str) -> Result<Vec<PathBuf>> {
    let paths = glob::glob(pattern).map_err(|e| Error::Config(format!("bad glob {pattern}: {e}")))?;
    let mut out: Vec<PathBuf> = paths
        .filter_map(|p| p.map_err(|e| warn!("skipping {}: {e}", e.path().display())).ok())
        .collect();
    out.sort();
    Ok(out)
}

/// One line per metric: the mean over files with a band of one standard error.
fn chart(path: &Path, title: &str, series: &[(f64, f64, f64)]) -> Result<()> {
    let root = SVGBackend::new(path, (720, 420)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (x0, x1) = match (series.first(), series.last()) {
        (Some(a), Some(b)) if b.0 > a.0 => (a.0, b.0),
        (Some(a), _) => (a.0, a.0 + 1.0),
        _ => (0.0, 1.0),
    };
    let lo = series.iter().map(|s| s.1 - s.2).fold(f64::INFINITY, f64::min);
    let hi = series.iter().map(|s| s.1 + s.2).fold(f64::NEG_INFINITY, f64::max);
    let (y0, y1) = if lo.is_finite() && hi.is_finite() {
        let pad = ((hi - lo) * 0.05).max(1e-3);
        (lo - pad, hi + pad)
    } else {
        (0.0, 1.0)
    };
    let mut c = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(56)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    c.configure_mesh().x_desc("iteration").draw().map_err(plot_err)?;
    if !series.is_empty() {
        let band: Vec<(f64, f64)> = series
            .iter()
            .map(|s| (s.0, s.1 + s.2))
            .chain(series.iter().rev().map(|s| (s.0, s.1 - s.2)))
            .collect();
        c.draw_series(std::iter::once(Polygon::new(band, BLUE.mix(0.2)))).map_err(plot_err)?;
        c.draw_series(LineSeries::new(series.iter().map(|s| (s.0, s.1)), &BLUE)).map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Writes `return_<i>.svg` per agent and `welfare.svg` into `out`.
pub fn plot(files: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out)?;
    let tables = files.iter().map(|f| MetricsTable::read(f)).collect::<Result<Vec<_>>>()?;
    let agg = aggregate(&tables)?;
    let agents = agg.header.iter().filter(|h| h.starts_with("return_") && h.ends_with("_mean")).count();
    let mut names: Vec<(String, String)> = (0..agents).map(|i| (format!("return_{i}"), format!("agent {} return", i + 1))).collect();
    names.push(("welfare".into(), "social welfare".into()));
    let iterations = agg.column("iteration").unwrap_or_default();
    names
        .into_iter()
        .map(|(col, title)| {
            let mean = agg.column(&format!("{col}_mean")).unwrap_or_default();
            let se = agg.column(&format!("{col}_stderr")).unwrap_or_default();
            let series: Vec<(f64, f64, f64)> = iterations.iter().zip(&mean).zip(&se).map(|((&x, &m), &s)| (x, m, s)).collect();
            let path = out.join(format!("{col}.svg"));
            chart(&path, &title, &series)?;
            Ok(path)
        })
        .collect()
}
