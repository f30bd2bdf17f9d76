use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use super::{ExperimentConfig, ExperimentResult, ModelKind, PipelineError, RunRecord, Stage};

pub const CSV_HEADER: &str = "fold,model,epoch,loss,subset_acc,hamming_acc,ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Loss,
    SubsetAccuracy,
    HammingAccuracy,
}

impl Metric {
    pub fn of(self, r: &RunRecord) -> f64 {
        match self {
            Metric::Loss => r.loss,
            Metric::SubsetAccuracy => r.subset_acc,
            Metric::HammingAccuracy => r.hamming_acc,
        }
    }
}

/// Mean and sample standard deviation; the deviation is 0 for fewer than
/// two samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Stat {
        let v: Vec<f64> = values.into_iter().collect();
        let n = v.len();
        if n == 0 {
            return Stat {
                mean: f64::NAN,
                std: f64::NAN,
                n,
            };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Stat { mean, std, n }
    }
}

pub fn write_csv<W: Write>(records: &[RunRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.fold, r.model, r.epoch, r.loss, r.subset_acc, r.hamming_acc, r.ms
        )?;
    }
    w.flush()
}

pub(super) fn summary_text(res: &ExperimentResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "original_nodes={}", res.original_nodes);
    let _ = writeln!(s, "original_edges={}", res.original_edges);
    let _ = writeln!(s, "summary_nodes={}", res.summary_nodes);
    let _ = writeln!(s, "summary_edges={}", res.summary_edges);
    match res.compression_rate {
        Some(c) => {
            let _ = writeln!(s, "compression_rate={c:.6}");
        }
        None => {
            let _ = writeln!(s, "compression_rate=undefined");
        }
    }
    let _ = writeln!(s, "labeled_nodes={}", res.labeled_nodes);
    let _ = writeln!(s, "classes={}", res.classes);
    let _ = writeln!(s, "folds={}", res.reports.len());
    for model in ModelKind::ALL {
        let Some(last) = res.last_epoch(model) else {
            continue;
        };
        for (tag, epoch) in [("epoch0", 0), ("final", last)] {
            let sub = res.stat(model, epoch, Metric::SubsetAccuracy);
            let ham = res.stat(model, epoch, Metric::HammingAccuracy);
            let _ = writeln!(
                s,
                "{model}.{tag} epoch={epoch} subset_acc={:.4}±{:.4} hamming_acc={:.4}±{:.4}",
                sub.mean, sub.std, ham.mean, ham.std
            );
        }
    }
    s
}

/// Line chart of the fold-mean of `metric` per epoch, transfer and
/// baseline models only.
pub fn plot_svg(records: &[RunRecord], metric: Metric, title: &str) -> String {
    let mut series: BTreeMap<ModelKind, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.model != ModelKind::Summary) {
        series
            .entry(r.model)
            .or_default()
            .entry(r.epoch)
            .or_default()
            .push(metric.of(r));
    }
    let means: Vec<(ModelKind, Vec<(usize, f64)>)> = series
        .into_iter()
        .map(|(m, by_epoch)| {
            let pts = by_epoch
                .into_iter()
                .map(|(e, v)| (e, Stat::of(v).mean))
                .collect();
            (m, pts)
        })
        .collect();
    let max_epoch = means
        .iter()
        .flat_map(|(_, p)| p.iter().map(|&(e, _)| e))
        .max()
        .unwrap_or(0)
        .max(1);
    let y_max = match metric {
        Metric::Loss => means
            .iter()
            .flat_map(|(_, p)| p.iter().map(|&(_, v)| v))
            .filter(|v| v.is_finite())
            .fold(0.0_f64, f64::max)
            .max(1e-9),
        _ => 1.0,
    };
    let (w, h, left, right, top, bottom) = (640.0, 400.0, 60.0, 20.0, 40.0, 50.0);
    let px = |e: usize| left + (w - left - right) * e as f64 / max_epoch as f64;
    let py = |v: f64| top + (h - top - bottom) * (1.0 - v / y_max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{left},{top} L{left},{} L{},{}" stroke="black" fill="none"/>"#,
        h - bottom,
        w - right,
        h - bottom
    );
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.2}</text>"#,
            left - 6.0,
            py(v) + 4.0
        );
    }
    for i in 0..=5 {
        let e = max_epoch * i / 5;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{e}</text>"#,
            px(e),
            h - bottom + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">epoch</text>"#,
        (left + w - right) / 2.0,
        h - 10.0
    );
    for (i, (model, pts)) in means.iter().enumerate() {
        let color = if *model == ModelKind::Transfer {
            "#d62728"
        } else {
            "#1f77b4"
        };
        let path: Vec<String> = pts
            .iter()
            .filter(|(_, v)| v.is_finite())
            .map(|&(e, v)| format!("{:.1},{:.1}", px(e), py(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="{color}" stroke-width="2" fill="none"/>"#,
            path.join(" ")
        );
        let ly = top + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{color}">{model}</text>"#,
            w - right - 80.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub(super) fn write_outputs(
    cfg: &ExperimentConfig,
    res: &ExperimentResult,
) -> Result<(), PipelineError> {
    let io_err = |e: io::Error| PipelineError::data(Stage::Output, e);
    let out = &cfg.out;
    std::fs::write(out.join("results.csv"), res.csv()).map_err(io_err)?;
    std::fs::write(out.join("summary.txt"), res.summary_text()).map_err(io_err)?;
    let mut report = String::new();
    for (fold, r) in res.reports.iter().enumerate() {
        for line in r.to_text().lines() {
            let _ = writeln!(report, "fold{fold}.{line}");
        }
    }
    std::fs::write(out.join("transfer_report.txt"), report).map_err(io_err)?;
    if cfg.record_time {
        let mut t = String::from("fold,model,total_ms\n");
        for model in ModelKind::ALL {
            for fold in 0..res.reports.len() {
                let total = res
                    .records
                    .iter()
                    .filter(|r| r.fold == fold && r.model == model)
                    .map(|r| r.ms)
                    .max()
                    .unwrap_or(0);
                let _ = writeln!(t, "{fold},{model},{total}");
            }
        }
        std::fs::write(out.join("timings.txt"), t).map_err(io_err)?;
    }
    // plots are a convenience; failing to write them never fails the run
    let _ = std::fs::write(
        out.join("accuracy.svg"),
        plot_svg(
            &res.records,
            Metric::SubsetAccuracy,
            "subset accuracy (mean over folds)",
        ),
    );
    let _ = std::fs::write(
        out.join("loss.svg"),
        plot_svg(
            &res.records,
            Metric::Loss,
            "training loss (mean over folds)",
        ),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(fold: usize, model: ModelKind, epoch: usize, acc: f64) -> RunRecord {
        RunRecord {
            fold,
            model,
            epoch,
            loss: 1.0 - acc,
            subset_acc: acc,
            hamming_acc: acc,
            ms: 0,
        }
    }

    #[test]
    fn stat_uses_sample_deviation() {
        let s = Stat::of([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(Stat::of([7.0]).std, 0.0);
        assert!(Stat::of([]).mean.is_nan());
    }

    #[test]
    fn csv_has_fixed_header() {
        let mut buf = Vec::new();
        write_csv(&[rec(0, ModelKind::Baseline, 0, 0.5)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{CSV_HEADER}\n0,baseline,0,0.5,0.5,0.5,0\n")
        );
    }

    #[test]
    fn svg_has_one_line_per_model() {
        let recs = [
            rec(0, ModelKind::Transfer, 0, 0.8),
            rec(0, ModelKind::Transfer, 1, 0.9),
            rec(0, ModelKind::Baseline, 0, 0.2),
            rec(0, ModelKind::Baseline, 1, 0.4),
            rec(0, ModelKind::Summary, 0, 0.3),
        ];
        let svg = plot_svg(&recs, Metric::SubsetAccuracy, "a < b");
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
