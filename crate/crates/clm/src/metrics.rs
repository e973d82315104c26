use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Wall-clock time per stage, in the order the stages ran.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub stages: Vec<(String, Duration)>,
    pub total: Duration,
}

impl StageTimings {
    pub fn push(&mut self, name: &str, d: Duration) {
        self.stages.push((name.to_string(), d));
    }

    pub fn stage_sum(&self) -> Duration {
        self.stages.iter().map(|(_, d)| *d).sum()
    }
}

/// Classification metrics. Timings are reported in the table only so that
/// the JSON form is reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<String>,
    pub total: usize,
    pub accuracy: f64,
    pub per_class_accuracy: Vec<f64>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub per_class_ap: Vec<f64>,
    pub mean_ap: f64,
    /// Summed dual objective after each alternation round, for training
    /// reports.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_trajectory: Vec<f64>,
    #[serde(skip)]
    pub timings: StageTimings,
}

/// Non-interpolated average precision: the mean, over positives, of the
/// precision at each positive's rank. Items are ranked by descending score,
/// earlier items first among equal scores. `None` without positives.
pub fn average_precision(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if positive[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    (hits > 0).then(|| sum / hits as f64)
}

impl EvalReport {
    /// Builds the report from true labels, predictions and per-item score
    /// vectors. Classes without test items get accuracy and AP 0 and are
    /// left out of the mean AP.
    pub fn new(classes: Vec<String>, truth: &[usize], predicted: &[usize], scores: &[Vec<f64>]) -> Self {
        let m = classes.len();
        let mut confusion = vec![vec![0; m]; m];
        for (&t, &p) in truth.iter().zip(predicted) {
            confusion[t][p] += 1;
        }
        let correct: usize = (0..m).map(|c| confusion[c][c]).sum();
        let total = truth.len();
        let per_class_accuracy = confusion
            .iter()
            .enumerate()
            .map(|(c, row)| {
                let n: usize = row.iter().sum();
                if n == 0 {
                    0.0
                } else {
                    row[c] as f64 / n as f64
                }
            })
            .collect();
        let aps: Vec<Option<f64>> = (0..m)
            .map(|c| {
                let s: Vec<f64> = scores.iter().map(|v| v[c]).collect();
                let pos: Vec<bool> = truth.iter().map(|&t| t == c).collect();
                average_precision(&s, &pos)
            })
            .collect();
        let present: Vec<f64> = aps.iter().flatten().copied().collect();
        let mean_ap = if present.is_empty() {
            0.0
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        };
        Self {
            classes,
            total,
            accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
            per_class_accuracy,
            confusion,
            per_class_ap: aps.into_iter().map(|a| a.unwrap_or(0.0)).collect(),
            mean_ap,
            objective_trajectory: Vec::new(),
            timings: StageTimings::default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "images: {}", self.total)?;
        writeln!(f, "accuracy: {:.4}", self.accuracy)?;
        writeln!(f, "mAP: {:.4}", self.mean_ap)?;
        let width = self.classes.iter().map(|c| c.len()).max().unwrap_or(5).max(5);
        writeln!(f)?;
        writeln!(f, "{:<width$}  {:>8}  {:>8}", "class", "acc", "AP")?;
        for (c, name) in self.classes.iter().enumerate() {
            writeln!(
                f,
                "{name:<width$}  {:>8.4}  {:>8.4}",
                self.per_class_accuracy[c], self.per_class_ap[c]
            )?;
        }
        writeln!(f)?;
        writeln!(f, "confusion (rows: true, columns: predicted)")?;
        write!(f, "{:<width$}", "")?;
        for c in 0..self.classes.len() {
            write!(f, " {c:>5}")?;
        }
        writeln!(f)?;
        for (c, row) in self.confusion.iter().enumerate() {
            write!(f, "{:<width$}", self.classes[c])?;
            for v in row {
                write!(f, " {v:>5}")?;
            }
            writeln!(f)?;
        }
        if !self.objective_trajectory.is_empty() {
            writeln!(f)?;
            let t: Vec<String> = self.objective_trajectory.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(f, "objective: {}", t.join(" -> "))?;
        }
        if !self.timings.stages.is_empty() {
            writeln!(f)?;
            for (name, d) in &self.timings.stages {
                writeln!(f, "{name:<12} {:>9.3} s", d.as_secs_f64())?;
            }
            writeln!(f, "{:<12} {:>9.3} s", "total", self.timings.total.as_secs_f64())?;
        }
        Ok(())
    }
}
