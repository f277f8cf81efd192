//! Report artifacts: distribution plots, the OOD heatmap, and result tables.
//!
//! Everything is emitted as plain text formats with no external assets or
//! plotting dependencies — SVG polyline histograms, a single-file HTML
//! heatmap, RFC 4180 CSV, and JSON — and all of it is deterministic byte for
//! byte given the same inputs, so reports can be diffed across runs.

use std::fs;
use std::path::{Path, PathBuf};

use crate::corpus::attack_metadata;
use crate::error::{Error, Result};
use crate::eval::{Aggregates, IdTable, OodMatrix};

// ---------------------------------------------------------------------------
// Distribution SVG
// ---------------------------------------------------------------------------

/// One curve of a distribution plot.
#[derive(Debug, Clone, PartialEq)]
pub struct DistSeries {
    pub name: String,
    pub values: Vec<f64>,
}

const PALETTE: [&str; 6] = ["#4C78A8", "#E45756", "#54A24B", "#F58518", "#B279A2", "#72B7B2"];

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 420.0;
const MARGIN_L: f64 = 62.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 52.0;

fn fmt_px(v: f64) -> String {
    format!("{v:.2}")
}

fn fmt_val(v: f64) -> String {
    format!("{v:.4}")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render per-class normalized histograms as overlaid polylines.
///
/// All series share one bin grid spanning the pooled value range; each
/// series is normalized by its own count, so classes of different sizes
/// remain comparable (shape, not mass). The optional threshold draws as a
/// dotted vertical marker.
pub fn distribution_svg(
    series: &[DistSeries],
    bins: usize,
    threshold: Option<f64>,
    x_label: &str,
    title: &str,
) -> Result<String> {
    if series.is_empty() {
        return Err(Error::InvalidInput("distribution plot needs at least one series".into()));
    }
    if bins < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 bins, got {bins}")));
    }
    for s in series {
        if s.values.is_empty() {
            return Err(Error::InvalidInput(format!("series {:?} is empty", s.name)));
        }
        if s.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("series {:?} has non-finite values", s.name)));
        }
    }

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in series.iter().flat_map(|s| &s.values).chain(threshold.iter()) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = (hi - lo) * 0.04;
    let (lo, hi) = (lo - pad, hi + pad);
    let bin_w = (hi - lo) / bins as f64;

    let fractions: Vec<Vec<f64>> = series
        .iter()
        .map(|s| {
            let mut counts = vec![0usize; bins];
            for &v in &s.values {
                let b = (((v - lo) / bin_w) as usize).min(bins - 1);
                counts[b] += 1;
            }
            counts
                .iter()
                .map(|&c| c as f64 / s.values.len() as f64)
                .collect()
        })
        .collect();
    let ymax = fractions
        .iter()
        .flatten()
        .copied()
        .fold(f64::MIN, f64::max)
        .max(1e-9);

    let plot_w = SVG_W - MARGIN_L - MARGIN_R;
    let plot_h = SVG_H - MARGIN_T - MARGIN_B;
    let x_of = |v: f64| MARGIN_L + (v - lo) / (hi - lo) * plot_w;
    let y_of = |f: f64| MARGIN_T + plot_h - f / ymax * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
         viewBox=\"0 0 {SVG_W} {SVG_H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        fmt_px(SVG_W / 2.0),
        xml_escape(title)
    ));

    // Axes and ticks.
    let x_axis_y = MARGIN_T + plot_h;
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\"/>\n",
        fmt_px(MARGIN_L),
        fmt_px(x_axis_y),
        fmt_px(MARGIN_L + plot_w),
        fmt_px(x_axis_y)
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\"/>\n",
        fmt_px(MARGIN_L),
        fmt_px(MARGIN_T),
        fmt_px(MARGIN_L),
        fmt_px(x_axis_y)
    ));
    for i in 0..=4 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let x = x_of(v);
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#333\"/>\n",
            fmt_px(x),
            fmt_px(x_axis_y),
            fmt_px(x_axis_y + 5.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            fmt_px(x),
            fmt_px(x_axis_y + 19.0),
            fmt_val(v)
        ));
    }
    for i in 0..=2 {
        let f = ymax * i as f64 / 2.0;
        let y = y_of(f);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#ddd\"/>\n",
            fmt_px(MARGIN_L),
            fmt_px(y),
            fmt_px(MARGIN_L + plot_w)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            fmt_px(MARGIN_L - 6.0),
            fmt_px(y + 4.0),
            fmt_val(f)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        fmt_px(MARGIN_L + plot_w / 2.0),
        fmt_px(SVG_H - 14.0),
        xml_escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">fraction of class</text>\n",
        fmt_px(MARGIN_T + plot_h / 2.0)
    ));

    // The curves.
    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let points: Vec<String> = fractions[si]
            .iter()
            .enumerate()
            .map(|(b, &f)| {
                let center = lo + (b as f64 + 0.5) * bin_w;
                format!("{},{}", fmt_px(x_of(center)), fmt_px(y_of(f)))
            })
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            points.join(" "),
            color
        ));
        // Legend entry.
        let ly = MARGIN_T + 14.0 + 18.0 * si as f64;
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
            fmt_px(SVG_W - MARGIN_R - 150.0),
            fmt_px(ly),
            fmt_px(SVG_W - MARGIN_R - 126.0),
            color
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            fmt_px(SVG_W - MARGIN_R - 120.0),
            fmt_px(ly + 4.0),
            xml_escape(&s.name)
        ));
    }

    if let Some(t) = threshold {
        let x = x_of(t);
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#555\" stroke-width=\"1.5\" stroke-dasharray=\"4 3\"/>\n",
            fmt_px(x),
            fmt_px(MARGIN_T),
            fmt_px(x_axis_y)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"#555\">threshold {}</text>\n",
            fmt_px(x + 4.0),
            fmt_px(MARGIN_T + plot_h - 6.0),
            fmt_val(t)
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_distribution_svg(
    series: &[DistSeries],
    bins: usize,
    threshold: Option<f64>,
    x_label: &str,
    title: &str,
    out: &Path,
) -> Result<()> {
    let svg = distribution_svg(series, bins, threshold, x_label, title)?;
    fs::write(out, svg).map_err(|e| Error::io(out, e))
}

// ---------------------------------------------------------------------------
// Heatmap
// ---------------------------------------------------------------------------

/// Cell color for an EER: green at 10% and below, through amber at 35%, to
/// red at 50% and above. The green channel never increases with EER, so
/// "greener = better" holds literally.
pub fn heat_color(eer: f64) -> (u8, u8, u8) {
    const GREEN: (f64, f64, f64) = (87.0, 187.0, 138.0); // #57BB8A
    const AMBER: (f64, f64, f64) = (255.0, 187.0, 102.0); // #FFBB66
    const RED: (f64, f64, f64) = (230.0, 124.0, 115.0); // #E67C73
    let lerp = |a: (f64, f64, f64), b: (f64, f64, f64), t: f64| {
        (
            (a.0 + (b.0 - a.0) * t).round() as u8,
            (a.1 + (b.1 - a.1) * t).round() as u8,
            (a.2 + (b.2 - a.2) * t).round() as u8,
        )
    };
    if eer <= 10.0 {
        lerp(GREEN, GREEN, 0.0)
    } else if eer <= 35.0 {
        lerp(GREEN, AMBER, (eer - 10.0) / 25.0)
    } else if eer < 50.0 {
        lerp(AMBER, RED, (eer - 35.0) / 15.0)
    } else {
        lerp(RED, RED, 0.0)
    }
}

fn css_color((r, g, b): (u8, u8, u8)) -> String {
    format!("#{r:02X}{g:02X}{b:02X}")
}

/// Render the OOD matrix as a color-coded single-file HTML table.
///
/// Rows carry the training attack, the feature it selected, and the
/// synthesis system behind the attack; diagonal (in-domain) cells get a
/// distinct border, and heavier rules mark the train/dev partition boundary
/// in both directions.
pub fn heatmap_html(ood: &OodMatrix) -> String {
    use crate::corpus::Partition;

    let mut html = String::from(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Out-of-domain EER matrix</title>\n<style>\n\
         body { font-family: sans-serif; margin: 24px; }\n\
         table { border-collapse: collapse; }\n\
         th, td { border: 1px solid #bbb; padding: 4px 8px; text-align: right; font-size: 13px; }\n\
         th { background: #f2f2f2; }\n\
         td.diag { outline: 2px solid #222; outline-offset: -2px; font-weight: bold; }\n\
         .qsep { border-left: 3px solid #222; }\n\
         tr.qrow td, tr.qrow th { border-top: 3px solid #222; }\n\
         .meta { text-align: left; }\n\
         </style>\n</head>\n<body>\n\
         <h1>Out-of-domain EER matrix</h1>\n\
         <p>Rows: training attack and its selected feature. Columns: evaluation attack. \
         Cells: EER in percent with the trained polarity kept, so transfer failures can exceed 50. \
         Outlined diagonal cells are the in-domain results.</p>\n",
    );
    html.push_str(&format!(
        "<p>Color scale: <span style=\"background:{}\">&nbsp;&le;10&nbsp;</span> \
         <span style=\"background:{}\">&nbsp;35&nbsp;</span> \
         <span style=\"background:{}\">&nbsp;&ge;50&nbsp;</span></p>\n",
        css_color(heat_color(0.0)),
        css_color(heat_color(35.0)),
        css_color(heat_color(100.0))
    ));
    html.push_str("<table>\n<tr><th class=\"meta\">Train</th><th class=\"meta\">System</th><th class=\"meta\">Feature</th>");
    for (c, attack) in ood.eval_attacks.iter().enumerate() {
        let sep = if c > 0
            && ood.eval_attacks[c - 1].partition() == Partition::Train
            && attack.partition() == Partition::Dev
        {
            " class=\"qsep\""
        } else {
            ""
        };
        html.push_str(&format!("<th{sep}>{attack}</th>"));
    }
    html.push_str("</tr>\n");

    for (i, row) in ood.rows.iter().enumerate() {
        let quadrant_break = i > 0
            && ood.rows[i - 1].train_attack.partition() == Partition::Train
            && row.train_attack.partition() == Partition::Dev;
        html.push_str(&format!(
            "<tr{}><th class=\"meta\">{}</th><td class=\"meta\">{}</td><td class=\"meta\">{}</td>",
            if quadrant_break { " class=\"qrow\"" } else { "" },
            row.train_attack,
            attack_metadata(row.train_attack).system,
            row.feature_name
        ));
        for (c, (&eval_attack, &cell)) in ood.eval_attacks.iter().zip(&row.cells).enumerate() {
            let mut classes = Vec::new();
            if eval_attack == row.train_attack {
                classes.push("diag");
            }
            if c > 0
                && ood.eval_attacks[c - 1].partition() == Partition::Train
                && eval_attack.partition() == Partition::Dev
            {
                classes.push("qsep");
            }
            let class_attr = if classes.is_empty() {
                String::new()
            } else {
                format!(" class=\"{}\"", classes.join(" "))
            };
            html.push_str(&format!(
                "<td{} style=\"background:{}\">{:.1}</td>",
                class_attr,
                css_color(heat_color(cell)),
                cell
            ));
        }
        html.push_str("</tr>\n");
    }
    html.push_str("</table>\n</body>\n</html>\n");
    html
}

pub fn emit_heatmap_html(ood: &OodMatrix, out: &Path) -> Result<()> {
    fs::write(out, heatmap_html(ood)).map_err(|e| Error::io(out, e))
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_line(fields: &[String]) -> String {
    let mut line = fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",");
    line.push_str("\r\n");
    line
}

/// EERs are presented with one decimal, like the reference tables.
fn fmt_eer(v: f64) -> String {
    format!("{v:.1}")
}

pub fn id_table_csv(id: &IdTable) -> String {
    let mut out = csv_line(&[
        "attack".into(),
        "feature_index".into(),
        "feature_name".into(),
        "train_eer_percent".into(),
        "test_eer_percent".into(),
    ]);
    for row in &id.rows {
        out.push_str(&csv_line(&[
            row.attack.to_string(),
            row.feature_index.to_string(),
            row.feature_name.clone(),
            fmt_eer(row.train_eer_percent),
            fmt_eer(row.test_eer_percent),
        ]));
    }
    out
}

pub fn ood_csv(ood: &OodMatrix) -> String {
    let mut header = vec![
        "train_attack".into(),
        "feature_index".into(),
        "feature_name".into(),
    ];
    header.extend(ood.eval_attacks.iter().map(|a| a.to_string()));
    let mut out = csv_line(&header);
    for row in &ood.rows {
        let mut fields = vec![
            row.train_attack.to_string(),
            row.feature_index.to_string(),
            row.feature_name.clone(),
        ];
        fields.extend(row.cells.iter().map(|&c| fmt_eer(c)));
        out.push_str(&csv_line(&fields));
    }
    out
}

pub fn aggregates_csv(agg: &Aggregates) -> String {
    let mut out = csv_line(&[
        "attack".into(),
        "id_eer_percent".into(),
        "ood_eer_percent".into(),
    ]);
    for a in &agg.per_attack {
        out.push_str(&csv_line(&[
            a.attack.to_string(),
            fmt_eer(a.id_eer_percent),
            fmt_eer(a.ood_eer_percent),
        ]));
    }
    out
}

pub fn quadrants_csv(agg: &Aggregates) -> String {
    let mut out = csv_line(&[
        "block".into(),
        "mean_eer_percent".into(),
        "stddev_eer_percent".into(),
        "cells".into(),
    ]);
    for (name, stat) in [
        ("train_to_train", agg.quadrants.train_to_train),
        ("dev_to_dev", agg.quadrants.dev_to_dev),
        ("cross", agg.quadrants.cross),
    ] {
        out.push_str(&csv_line(&[
            name.into(),
            fmt_eer(stat.mean),
            fmt_eer(stat.stddev),
            stat.count.to_string(),
        ]));
    }
    out
}

/// Write the full table set: CSV for reading, JSON for exact reloading.
/// Returns the paths written.
pub fn emit_tables(id: &IdTable, agg: &Aggregates, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, content: String| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    emit("id.csv", id_table_csv(id))?;
    emit("id.json", to_pretty_json(id))?;
    emit("aggregates.csv", aggregates_csv(agg))?;
    emit("quadrants.csv", quadrants_csv(agg))?;
    emit("aggregates.json", to_pretty_json(agg))?;
    Ok(written)
}

pub(crate) fn to_pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}
