//! Semi-supervised datasets drawn from the true mixture.

use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{log_classify, MixtureParams};
use crate::rng::{rng_for, stream};

/// `{X1, Y1, X2, Y2}`: the first `αn` pairs are labeled, the remaining
/// labels are hidden (kept in `y2` when known, e.g. for simulated data).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x1: Vec<f64>,
    y1: Vec<usize>,
    x2: Vec<f64>,
    y2: Option<Vec<usize>>,
    seed: u64,
}

/// `round(α n)` if `α n` is an integer (to 1e-9), else a precondition error.
pub fn labeled_count(n: usize, alpha: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::precondition(format!("alpha = {alpha} outside [0, 1]")));
    }
    let an = alpha * n as f64;
    let rounded = an.round();
    if (an - rounded).abs() > 1e-9 {
        return Err(Error::precondition(format!(
            "alpha * n = {alpha} * {n} = {an} is not an integer"
        )));
    }
    Ok(rounded as usize)
}

impl Dataset {
    pub fn from_parts(x1: Vec<f64>, y1: Vec<usize>, x2: Vec<f64>, y2: Option<Vec<usize>>, seed: u64) -> Result<Self> {
        if x1.len() != y1.len() {
            return Err(Error::precondition(format!(
                "|X1| = {} but |Y1| = {}",
                x1.len(),
                y1.len()
            )));
        }
        if let Some(y2) = &y2 {
            if y2.len() != x2.len() {
                return Err(Error::precondition(format!(
                    "|X2| = {} but |Y2| = {}",
                    x2.len(),
                    y2.len()
                )));
            }
        }
        let labels = y1.iter().chain(y2.iter().flatten());
        if labels.clone().any(|&y| y == 0) {
            return Err(Error::domain("labels are 1-based"));
        }
        if x1.iter().chain(&x2).any(|x| !x.is_finite()) {
            return Err(Error::domain("data points must be finite"));
        }
        Ok(Dataset { x1, y1, x2, y2, seed })
    }

    pub fn x1(&self) -> &[f64] {
        &self.x1
    }

    pub fn y1(&self) -> &[usize] {
        &self.y1
    }

    pub fn x2(&self) -> &[f64] {
        &self.x2
    }

    pub fn y2(&self) -> Option<&[usize]> {
        self.y2.as_deref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.x1.len() + self.x2.len()
    }

    pub fn n_labeled(&self) -> usize {
        self.x1.len()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.x2.len()
    }

    /// Labeled fraction; zero for an empty dataset.
    pub fn alpha(&self) -> f64 {
        if self.n() == 0 {
            0.0
        } else {
            self.x1.len() as f64 / self.n() as f64
        }
    }

    /// The observed data `D`, with `Y2` removed.
    pub fn observed_only(&self) -> Dataset {
        Dataset {
            y2: None,
            ..self.clone()
        }
    }

    /// Same observed data with `Y2` replaced by `y2`.
    pub fn with_y2(&self, y2: Vec<usize>) -> Result<Dataset> {
        Dataset::from_parts(self.x1.clone(), self.y1.clone(), self.x2.clone(), Some(y2), self.seed)
    }

    /// Swap the two labels everywhere (K = 2).
    pub fn swap_labels(&self) -> Dataset {
        let flip = |ys: &[usize]| ys.iter().map(|&y| 3 - y).collect::<Vec<_>>();
        Dataset {
            y1: flip(&self.y1),
            y2: self.y2.as_deref().map(flip),
            ..self.clone()
        }
    }

    /// Writes `index,x,y,observed`; hidden labels are written when known
    /// with `observed = 0`, or left empty.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in self.rows() {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Dataset> {
        let mut r = csv::Reader::from_path(path)?;
        let mut rows: Vec<CsvRow> = Vec::new();
        for row in r.deserialize() {
            rows.push(row?);
        }
        rows.sort_by_key(|r| r.index);
        Dataset::from_rows(&rows, 0)
    }

    fn rows(&self) -> Vec<CsvRow> {
        let labeled = self.x1.iter().zip(&self.y1).map(|(&x, &y)| (x, Some(y), true));
        let hidden: Vec<Option<usize>> = match &self.y2 {
            Some(y2) => y2.iter().map(|&y| Some(y)).collect(),
            None => vec![None; self.x2.len()],
        };
        let unlabeled = self.x2.iter().zip(hidden).map(|(&x, y)| (x, y, false));
        labeled
            .chain(unlabeled)
            .enumerate()
            .map(|(index, (x, y, observed))| CsvRow {
                index,
                x,
                y,
                observed: u8::from(observed),
            })
            .collect()
    }

    fn from_rows(rows: &[CsvRow], seed: u64) -> Result<Dataset> {
        let split = rows.iter().take_while(|r| r.observed == 1).count();
        if rows[split..].iter().any(|r| r.observed == 1) {
            return Err(Error::precondition("observed rows must precede hidden rows"));
        }
        let mut y1 = Vec::with_capacity(split);
        for r in &rows[..split] {
            y1.push(r.y.ok_or_else(|| Error::precondition(format!("observed row {} has no label", r.index)))?);
        }
        let hidden: Option<Vec<usize>> = rows[split..].iter().map(|r| r.y).collect();
        Dataset::from_parts(
            rows[..split].iter().map(|r| r.x).collect(),
            y1,
            rows[split..].iter().map(|r| r.x).collect(),
            hidden,
            seed,
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    index: usize,
    x: f64,
    y: Option<usize>,
    observed: u8,
}

/// Draws `n` i.i.d. pairs `y ~ Cat(a)`, `x ~ N(b_y, σ²)`; the first `αn`
/// are labeled and the rest keep their labels in `y2`.
pub fn sample_dataset(truth: &MixtureParams, n: usize, alpha: f64, seed: u64) -> Result<Dataset> {
    if truth.dim() != 1 {
        return Err(Error::Unsupported("datasets hold scalar observations (M = 1)".into()));
    }
    let n1 = labeled_count(n, alpha)?;
    let mut rng = rng_for(seed, stream::DATA);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut label = truth.components();
        for (k, &a) in truth.mixing().iter().enumerate() {
            acc += a;
            if u < acc {
                label = k + 1;
                break;
            }
        }
        // guard against rounding in the cumulative sum
        while truth.mixing()[label - 1] == 0.0 {
            label -= 1;
        }
        let z: f64 = rng.sample(StandardNormal);
        xs.push(truth.means()[label - 1][0] + truth.sigma() * z);
        ys.push(label);
    }
    let x2 = xs.split_off(n1);
    let y2 = ys.split_off(n1);
    Dataset::from_parts(xs, ys, x2, Some(y2), seed)
}

/// `ln q(Y2 | X2) = Σ_i ln q(y_i | x_i)`.
pub fn true_log_conditional(y2: &[usize], x2: &[f64], truth: &MixtureParams) -> Result<f64> {
    if y2.len() != x2.len() {
        return Err(Error::precondition(format!(
            "|Y2| = {} but |X2| = {}",
            y2.len(),
            x2.len()
        )));
    }
    y2.iter()
        .zip(x2)
        .map(|(&y, &x)| log_classify(std::slice::from_ref(&x), y, truth))
        .sum()
}

/// Iterates all `2^m` binary label assignments in a fixed order: bit `i` of
/// the counter selects label 2 for point `i`.
pub fn binary_assignments(m: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..1u64 << m).map(move |mask| (0..m).map(|i| 1 + ((mask >> i) & 1) as usize).collect())
}
