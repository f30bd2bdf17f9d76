use super::matrix::DenseMatrix;
use super::RgcnError;
use crate::graph::NodeId;
use crate::labels::LabelMatrix;

pub const PROB_EPS: f64 = 1e-7;

/// Mean binary cross-entropy over `rows` × all classes, with
/// probabilities clamped to `[PROB_EPS, 1 - PROB_EPS]`.
pub fn bce_loss(
    probs: &DenseMatrix,
    targets: &LabelMatrix,
    rows: &[NodeId],
) -> Result<f64, RgcnError> {
    check_shapes(probs, targets)?;
    if rows.is_empty() {
        return Err(RgcnError::EmptyRows);
    }
    let mut total = 0.0;
    for &r in rows {
        for (&p, &t) in probs.row(r).iter().zip(targets.row(r)) {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            total -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        }
    }
    Ok(total / (rows.len() * targets.num_classes()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Fraction of rows whose rounded prediction equals the target row.
    pub subset_accuracy: f64,
    /// Fraction of individual entries predicted correctly.
    pub hamming_accuracy: f64,
}

/// Rounds probabilities at 0.5 (ties go to 1) and scores them against
/// binary targets.
pub fn evaluate(
    probs: &DenseMatrix,
    targets: &LabelMatrix,
    rows: &[NodeId],
) -> Result<Metrics, RgcnError> {
    check_shapes(probs, targets)?;
    if rows.is_empty() {
        return Err(RgcnError::EmptyRows);
    }
    if rows
        .iter()
        .any(|&r| targets.row(r).iter().any(|&t| t != 0.0 && t != 1.0))
    {
        return Err(RgcnError::NonBinaryTargets);
    }
    let mut exact = 0usize;
    let mut agree = 0usize;
    for &r in rows {
        let hits = probs
            .row(r)
            .iter()
            .zip(targets.row(r))
            .filter(|(&p, &t)| (p >= 0.5) == (t == 1.0))
            .count();
        agree += hits;
        if hits == targets.num_classes() {
            exact += 1;
        }
    }
    Ok(Metrics {
        subset_accuracy: exact as f64 / rows.len() as f64,
        hamming_accuracy: agree as f64 / (rows.len() * targets.num_classes().max(1)) as f64,
    })
}

fn check_shapes(probs: &DenseMatrix, targets: &LabelMatrix) -> Result<(), RgcnError> {
    if probs.shape() != (targets.num_rows(), targets.num_classes()) {
        return Err(RgcnError::Shape(format!(
            "predictions are {}×{}, targets {}×{}",
            probs.rows(),
            probs.cols(),
            targets.num_rows(),
            targets.num_classes()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::read_labels;

    fn labels(rows: &[&[f64]]) -> LabelMatrix {
        let names: Vec<String> = (0..rows.len()).map(|i| format!("<n{i}>")).collect();
        let classes: Vec<String> = (0..rows[0].len()).map(|c| format!("<c{c}>")).collect();
        let mut text = String::new();
        for (i, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    text += &format!("<n{i}>\t<c{c}>\t{v}\n");
                }
            }
        }
        read_labels(&text, &names, Some(&classes)).unwrap()
    }

    fn probs(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_vec(rows.len(), rows[0].len(), rows.concat()).unwrap()
    }

    #[test]
    fn perfect_prediction_has_near_zero_loss() {
        let t = labels(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let p = probs(&[&[1.0 - PROB_EPS, PROB_EPS], &[PROB_EPS, 1.0 - PROB_EPS]]);
        assert!(bce_loss(&p, &t, &[0, 1]).unwrap() <= 1e-6);
        // exact 0/1 probabilities are clamped rather than producing infinities
        let p = probs(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(bce_loss(&p, &t, &[0, 1]).unwrap() <= 1e-6);
    }

    #[test]
    fn one_half_gives_ln_two() {
        let t = labels(&[&[1.0, 0.0, 0.5]]);
        let p = probs(&[&[0.5, 0.5, 0.5]]);
        assert!((bce_loss(&p, &t, &[0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn empty_rows_are_undefined() {
        let t = labels(&[&[1.0]]);
        let p = probs(&[&[0.3]]);
        assert_eq!(bce_loss(&p, &t, &[]), Err(RgcnError::EmptyRows));
        assert_eq!(evaluate(&p, &t, &[]), Err(RgcnError::EmptyRows));
    }

    #[test]
    fn metrics_on_a_two_by_two_case() {
        let t = labels(&[&[1.0, 0.0], &[1.0, 1.0]]);
        let p = probs(&[&[0.9, 0.2], &[0.8, 0.1]]);
        let m = evaluate(&p, &t, &[0, 1]).unwrap();
        assert_eq!(m.subset_accuracy, 0.5);
        assert_eq!(m.hamming_accuracy, 0.75);
        let exact = evaluate(&probs(&[&[1.0, 0.0], &[1.0, 1.0]]), &t, &[0, 1]).unwrap();
        assert_eq!(exact.subset_accuracy, 1.0);
    }

    #[test]
    fn ties_round_up() {
        let t = labels(&[&[1.0]]);
        assert_eq!(
            evaluate(&probs(&[&[0.5]]), &t, &[0])
                .unwrap()
                .subset_accuracy,
            1.0
        );
    }

    #[test]
    fn soft_targets_are_rejected_by_evaluate() {
        let t = labels(&[&[0.5]]);
        assert_eq!(
            evaluate(&probs(&[&[0.5]]), &t, &[0]),
            Err(RgcnError::NonBinaryTargets)
        );
    }
}
