//! Turns report files into gnuplot-ready `.dat` tables and SVG figures.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::error::CliError;

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

struct Figure<'a> {
    title: &'a str,
    x_label: &'a str,
    y_label: &'a str,
    series: Vec<Series>,
    note: Option<String>,
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().split(',').map(str::to_string).collect();
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|v| v.trim().parse().unwrap_or(f64::NAN)).collect())
        .collect();
    Ok((header, rows))
}

fn column(header: &[String], name: &str) -> Option<usize> {
    header.iter().position(|h| h == name)
}

fn write_dat(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut out = format!("# {}\n", columns.join(" "));
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:.10e}")).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    std::fs::write(path, out).map_err(|e| CliError::io(path, e))
}

fn bounds(series: &[Series]) -> ((f64, f64), (f64, f64)) {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return ((0.0, 1.0), (0.0, 1.0));
    }
    let pad = |a: f64, b: f64| {
        let d = if b > a { 0.05 * (b - a) } else { 0.5 * a.abs().max(1.0) };
        (a - d, b + d)
    };
    (pad(x0, x1), pad(y0, y1))
}

fn draw(path: &Path, fig: &Figure) -> Result<(), CliError> {
    let err = |e: &dyn std::fmt::Display| CliError::Plot(path.display().to_string(), e.to_string());
    let ((x0, x1), (y0, y1)) = bounds(&fig.series);
    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(fig.title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| err(&e))?;
    chart
        .configure_mesh()
        .x_desc(fig.x_label)
        .y_desc(fig.y_label)
        .draw()
        .map_err(|e| err(&e))?;
    let palette = [BLUE, RED, BLACK, GREEN];
    for (i, s) in fig.series.iter().enumerate() {
        let color = palette[i % palette.len()];
        let pts: Vec<(f64, f64)> = s.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
        let anno = if s.dashed {
            chart.draw_series(DashedLineSeries::new(pts, 6, 4, color.stroke_width(2)))
        } else {
            chart.draw_series(LineSeries::new(pts, color.stroke_width(2)))
        }
        .map_err(|e| err(&e))?;
        anno.label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| err(&e))?;
    if let Some(note) = &fig.note {
        root.draw(&Text::new(note.clone(), (90, 50), ("sans-serif", 15)))
            .map_err(|e| err(&e))?;
    }
    root.present().map_err(|e| err(&e))
}

fn radial_figure(dir: &Path, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let (header, rows) = read_table(&dir.join("trajectory.csv"))?;
    let (Some(it), Some(ia)) = (column(&header, "t"), column(&header, "alpha")) else {
        return Ok(());
    };
    let deficit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| std::f64::consts::PI - r[ia] > 0.0)
        .map(|r| (r[it], (std::f64::consts::PI - r[ia]).ln()))
        .collect();
    let mut series = vec![Series {
        label: "log(pi - alpha)".into(),
        points: deficit.clone(),
        dashed: false,
    }];
    let mut note = None;
    let mut dat: Vec<Vec<f64>> = deficit.iter().map(|&(t, y)| vec![t, y, f64::NAN]).collect();
    let exp_path = dir.join("exponent.json");
    if exp_path.exists() {
        let text = std::fs::read_to_string(&exp_path).map_err(|e| CliError::io(&exp_path, e))?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Plot(exp_path.display().to_string(), e.to_string()))?;
        let slope = v["slope"].as_f64().unwrap_or(f64::NAN);
        let (ta, tb) = (v["window"][0].as_f64().unwrap_or(f64::NAN), v["window"][1].as_f64().unwrap_or(f64::NAN));
        let inside: Vec<&(f64, f64)> = deficit.iter().filter(|(t, _)| *t >= ta && *t <= tb).collect();
        if !inside.is_empty() {
            let b = inside.iter().map(|(t, y)| y - slope * t).sum::<f64>() / inside.len() as f64;
            series.push(Series {
                label: format!("fit, slope {slope:.4}"),
                points: vec![(ta, b + slope * ta), (tb, b + slope * tb)],
                dashed: true,
            });
            for row in &mut dat {
                if row[0] >= ta && row[0] <= tb {
                    row[2] = b + slope * row[0];
                }
            }
            note = Some(format!(
                "slope {slope:.5}, N1 {:.5}",
                v["N1_formula"].as_f64().unwrap_or(f64::NAN)
            ));
        }
    }
    write_dat(&dir.join("radial_fit.dat"), &["t", "log_deficit", "fit"], &dat)?;
    draw(
        &dir.join("radial_fit.svg"),
        &Figure {
            title: "radial deficit and exponent fit",
            x_label: "t = log r",
            y_label: "log(pi - alpha)",
            series,
            note,
        },
    )?;
    written.extend([dir.join("radial_fit.dat"), dir.join("radial_fit.svg")]);
    Ok(())
}

fn margin_figure(dir: &Path, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let (header, rows) = read_table(&dir.join("summary.csv"))?;
    let (Some(ir), Some(im), Some(il), Some(irhs)) = (
        column(&header, "R"),
        column(&header, "margin"),
        column(&header, "lhs_max"),
        column(&header, "rhs"),
    ) else {
        return Ok(());
    };
    let dat: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[ir], r[il], r[irhs], r[im]]).collect();
    write_dat(&dir.join("margin.dat"), &["R", "lhs_max", "rhs", "margin"], &dat)?;
    draw(
        &dir.join("margin_vs_R.svg"),
        &Figure {
            title: "estimate margin against window radius",
            x_label: "R",
            y_label: "rhs - lhs_max",
            series: vec![Series {
                label: "margin".into(),
                points: dat.iter().map(|r| (r[0], r[3])).collect(),
                dashed: false,
            }],
            note: None,
        },
    )?;
    written.extend([dir.join("margin.dat"), dir.join("margin_vs_R.svg")]);
    Ok(())
}

fn energy_figure(dir: &Path, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let (header, rows) = read_table(&dir.join("energy.csv"))?;
    let (Some(it), Some(ie), Some(is)) = (column(&header, "t"), column(&header, "energy"), column(&header, "sup_rho")) else {
        return Ok(());
    };
    let dat: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[it], r[ie], r[is]]).collect();
    write_dat(&dir.join("energy.dat"), &["t", "energy", "sup_rho"], &dat)?;
    draw(
        &dir.join("energy.svg"),
        &Figure {
            title: "discrete energy along the flow",
            x_label: "t",
            y_label: "energy",
            series: vec![Series {
                label: "energy".into(),
                points: dat.iter().map(|r| (r[0], r[1])).collect(),
                dashed: false,
            }],
            note: None,
        },
    )?;
    written.extend([dir.join("energy.dat"), dir.join("energy.svg")]);
    Ok(())
}

fn growth_figure(dir: &Path, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = dir.join("scan.json");
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Plot(path.display().to_string(), e.to_string()))?;
    let radii: Vec<f64> = v["R"].as_array().map(|a| a.iter().filter_map(|x| x.as_f64()).collect()).unwrap_or_default();
    let sups: Vec<f64> = v["sups"].as_array().map(|a| a.iter().map(|x| x.as_f64().unwrap_or(f64::NAN)).collect()).unwrap_or_default();
    let dat: Vec<Vec<f64>> = radii.iter().zip(&sups).map(|(r, s)| vec![r.ln(), s.ln()]).collect();
    write_dat(&dir.join("growth.dat"), &["log_R", "log_sup"], &dat)?;
    draw(
        &dir.join("growth.svg"),
        &Figure {
            title: "growth scan",
            x_label: "log R",
            y_label: "log sup",
            series: vec![Series {
                label: "sup over the window".into(),
                points: dat.iter().map(|r| (r[0], r[1])).collect(),
                dashed: false,
            }],
            note: v["exponent"].as_f64().map(|e| format!("fitted exponent {e:.4}")),
        },
    )?;
    written.extend([dir.join("growth.dat"), dir.join("growth.svg")]);
    Ok(())
}

fn collect_dirs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    out.push(dir.to_path_buf());
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for d in subdirs {
        collect_dirs(&d, out)?;
    }
    Ok(())
}

/// Writes figures for every recognised report under `dir`.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::MissingReport(dir.display().to_string()));
    }
    let mut dirs = Vec::new();
    collect_dirs(dir, &mut dirs)?;
    let mut written = Vec::new();
    for d in &dirs {
        if d.join("trajectory.csv").exists() && d.join("roots.json").exists() {
            radial_figure(d, &mut written)?;
        }
        if d.join("summary.csv").exists() {
            margin_figure(d, &mut written)?;
        }
        if d.join("energy.csv").exists() {
            energy_figure(d, &mut written)?;
        }
        if d.join("scan.json").exists() {
            growth_figure(d, &mut written)?;
        }
    }
    if written.is_empty() {
        return Err(CliError::MissingReport(dir.display().to_string()));
    }
    Ok(written)
}
