use std::fmt::Write as _;

use super::EvalError;
use crate::dataset::Label;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Instances scoring at or above this value are called malware. The first
    /// point carries `+inf`.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    /// `fpr,tpr,threshold`, one row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr,threshold\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", p.fpr, p.tpr, p.threshold);
        }
        out
    }

    /// Operating point with the highest TPR not exceeding `max_fpr`.
    pub fn tpr_at(&self, max_fpr: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.fpr <= max_fpr)
            .map(|p| p.tpr)
            .fold(0.0, f64::max)
    }

    /// Standalone SVG plot of the curve with the AUC in the caption.
    pub fn to_svg(&self, title: &str) -> String {
        const SIZE: f64 = 400.0;
        const MARGIN: f64 = 50.0;
        let x = |fpr: f64| MARGIN + fpr * SIZE;
        let y = |tpr: f64| MARGIN + (1.0 - tpr) * SIZE;
        let full = SIZE + 2.0 * MARGIN;
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            svg,
            r#"<rect width="{full}" height="{full}" fill="white"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999" stroke-dasharray="4 4"/>"##,
            x(0.0),
            y(0.0),
            x(1.0),
            y(1.0)
        );
        for tick in 0..=5 {
            let v = tick as f64 / 5.0;
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="middle">{v:.1}</text>"#,
                x(v),
                MARGIN + SIZE + 16.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="end">{v:.1}</text>"#,
                MARGIN - 6.0,
                y(v) + 4.0
            );
        }
        let path: Vec<String> = self
            .points
            .iter()
            .map(|p| format!("{:.3},{:.3}", x(p.fpr), y(p.tpr)))
            .collect();
        let _ = writeln!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="2"/>"##,
            path.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">False positive rate</text>"#,
            MARGIN + SIZE / 2.0,
            full - 12.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">True positive rate</text>"#,
            MARGIN + SIZE / 2.0,
            MARGIN + SIZE / 2.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="30" text-anchor="middle" font-size="14">{} (AUC = {:.3})</text>"#,
            MARGIN + SIZE / 2.0,
            escape_xml(title),
            self.auc
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">AUC = {:.4}</text>"#,
            MARGIN + SIZE - 8.0,
            MARGIN + SIZE - 10.0,
            self.auc
        );
        svg.push_str("</svg>\n");
        svg
    }
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn check_inputs(scores: &[f64], truth: &[Label]) -> Result<(u64, u64), EvalError> {
    if scores.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            truth: truth.len(),
            other: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(EvalError::NanScore(i));
    }
    let malware = truth.iter().filter(|l| l.is_malware()).count();
    let benign = truth.len() - malware;
    if malware == 0 || benign == 0 {
        return Err(EvalError::SingleClass { benign, malware });
    }
    Ok((benign as u64, malware as u64))
}

/// Threshold sweep over the distinct scores, highest first.
///
/// Instances with equal scores cross the threshold together, which yields a
/// diagonal segment. The area is integrated by trapezoids in count space and
/// normalised once at the end.
pub fn roc_auc(scores: &[f64], truth: &[Label]) -> Result<RocCurve, EvalError> {
    let (n_benign, n_malware) = check_inputs(scores, truth)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    // Twice the area under the staircase, in units of one (benign, malware) pair.
    let mut twice_area: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        let (tp_before, fp_before) = (tp, fp);
        while i < order.len() && scores[order[i]] == threshold {
            if truth[order[i]].is_malware() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        twice_area += (fp - fp_before) as u128 * (tp + tp_before) as u128;
        points.push(RocPoint {
            fpr: fp as f64 / n_benign as f64,
            tpr: tp as f64 / n_malware as f64,
            threshold,
        });
    }
    let auc = twice_area as f64 / (2.0 * n_benign as f64 * n_malware as f64);
    Ok(RocCurve { points, auc })
}

/// Probability that a malware score beats a benign one, ties counting half.
pub fn mann_whitney_auc(scores: &[f64], truth: &[Label]) -> Result<f64, EvalError> {
    let (n_benign, n_malware) = check_inputs(scores, truth)?;
    let mut benign: Vec<f64> = scores
        .iter()
        .zip(truth)
        .filter(|(_, l)| !l.is_malware())
        .map(|(&s, _)| s)
        .collect();
    benign.sort_by(f64::total_cmp);
    let mut twice_wins: u128 = 0;
    for (&s, _) in scores.iter().zip(truth).filter(|(_, l)| l.is_malware()) {
        let below = benign.partition_point(|&b| b < s);
        let not_above = benign.partition_point(|&b| b <= s);
        twice_wins += 2 * below as u128 + (not_above - below) as u128;
    }
    Ok(twice_wins as f64 / (2.0 * n_benign as f64 * n_malware as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Benign as B, Malware as M};

    #[test]
    fn four_point_example() {
        let scores = [0.9, 0.4, 0.6, 0.1];
        let truth = [M, M, B, B];
        let roc = roc_auc(&scores, &truth).unwrap();
        assert_eq!(roc.auc, 0.75);
        assert_eq!(mann_whitney_auc(&scores, &truth).unwrap(), 0.75);
        let first = roc.points[0];
        let last = *roc.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
    }

    #[test]
    fn separation_extremes() {
        let truth = [M, M, B, B];
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &truth).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &truth).unwrap().auc, 0.0);
        assert_eq!(roc_auc(&[0.5; 4], &truth).unwrap().auc, 0.5);
    }

    #[test]
    fn tied_scores_form_one_step() {
        let roc = roc_auc(&[0.7, 0.7, 0.2], &[M, B, B]).unwrap();
        assert_eq!(roc.points.len(), 3);
        assert_eq!((roc.points[1].fpr, roc.points[1].tpr), (0.5, 1.0));
        assert_eq!(roc.auc, 0.75);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            roc_auc(&[0.1, 0.2], &[M, M]),
            Err(EvalError::SingleClass { .. })
        ));
        assert_eq!(
            roc_auc(&[f64::NAN, 0.2], &[M, B]),
            Err(EvalError::NanScore(0))
        );
        assert!(matches!(
            mann_whitney_auc(&[0.1], &[M, B]),
            Err(EvalError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn svg_mentions_auc() {
        let roc = roc_auc(&[0.9, 0.4, 0.6, 0.1], &[M, M, B, B]).unwrap();
        let svg = roc.to_svg("rf <test>");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("AUC = 0.750"));
        assert!(svg.contains("&lt;test&gt;"));
        assert_eq!(roc.to_csv().lines().next(), Some("fpr,tpr,threshold"));
    }
}
