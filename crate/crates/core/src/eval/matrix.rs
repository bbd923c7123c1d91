use std::collections::{BTreeMap, BTreeSet};

use super::{EvalCurve, EvalError};

/// A single train/test miss rate, in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixCell {
    pub train: String,
    pub test: String,
    pub mr_percent: f64,
}

impl MatrixCell {
    pub fn new(train: impl Into<String>, test: impl Into<String>, mr_percent: f64) -> Self {
        Self {
            train: train.into(),
            test: test.into(),
            mr_percent,
        }
    }
}

/// Miss rates of every trained model on every test set. Rows are test sets,
/// columns train models; the column average summarizes how well a model
/// generalizes.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizationMatrix {
    pub train_models: Vec<String>,
    pub test_sets: Vec<String>,
    pub cells: BTreeMap<(String, String), f64>,
    pub column_averages: BTreeMap<String, f64>,
    /// Train model with the lowest average; the first one on ties.
    pub best: String,
}

impl GeneralizationMatrix {
    /// Assembles the grid. Without explicit axes, both are sorted by name so
    /// the result does not depend on the order of `cells`.
    pub fn from_cells(
        cells: &[MatrixCell],
        axes: Option<(Vec<String>, Vec<String>)>,
    ) -> Result<Self, EvalError> {
        if cells.is_empty() {
            return Err(EvalError::EmptyMatrix);
        }
        let (train_models, test_sets) = axes.unwrap_or_else(|| {
            let trains: BTreeSet<&str> = cells.iter().map(|c| c.train.as_str()).collect();
            let tests: BTreeSet<&str> = cells.iter().map(|c| c.test.as_str()).collect();
            (
                trains.into_iter().map(String::from).collect(),
                tests.into_iter().map(String::from).collect(),
            )
        });

        let mut grid = BTreeMap::new();
        for c in cells {
            if !train_models.contains(&c.train) || !test_sets.contains(&c.test) {
                return Err(EvalError::UnexpectedCell {
                    train: c.train.clone(),
                    test: c.test.clone(),
                });
            }
            if grid
                .insert((c.train.clone(), c.test.clone()), c.mr_percent)
                .is_some()
            {
                return Err(EvalError::DuplicateCell {
                    train: c.train.clone(),
                    test: c.test.clone(),
                });
            }
        }

        let mut column_averages = BTreeMap::new();
        for train in &train_models {
            let mut sum = 0.0;
            for test in &test_sets {
                sum += grid.get(&(train.clone(), test.clone())).ok_or_else(|| {
                    EvalError::MissingCell {
                        train: train.clone(),
                        test: test.clone(),
                    }
                })?;
            }
            column_averages.insert(train.clone(), sum / test_sets.len() as f64);
        }

        let best = train_models
            .iter()
            .fold(None::<&String>, |best, t| match best {
                Some(b) if column_averages[b] <= column_averages[t] => Some(b),
                _ => Some(t),
            })
            .cloned()
            .unwrap_or_default();

        Ok(Self {
            train_models,
            test_sets,
            cells: grid,
            column_averages,
            best,
        })
    }

    pub fn cell(&self, train: &str, test: &str) -> Option<f64> {
        self.cells.get(&(train.to_string(), test.to_string())).copied()
    }

    /// Rows are test sets, then an `Average` row and a `Best` row marking the
    /// winning column with `*`. Values are printed with two decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("test");
        for t in &self.train_models {
            out.push(',');
            out.push_str(t);
        }
        out.push('\n');
        for test in &self.test_sets {
            out.push_str(test);
            for train in &self.train_models {
                out.push_str(&format!(",{:.2}", self.cells[&(train.clone(), test.clone())]));
            }
            out.push('\n');
        }
        out.push_str("Average");
        for train in &self.train_models {
            out.push_str(&format!(",{:.2}", self.column_averages[train]));
        }
        out.push_str("\nBest");
        for train in &self.train_models {
            out.push(',');
            if *train == self.best {
                out.push('*');
            }
        }
        out.push('\n');
        out
    }
}

/// Builds the matrix from evaluated curves; cells hold `100 * log_avg_mr`.
pub fn build_matrix(runs: &[(String, String, EvalCurve)]) -> Result<GeneralizationMatrix, EvalError> {
    let cells: Vec<MatrixCell> = runs
        .iter()
        .map(|(train, test, curve)| MatrixCell::new(train.clone(), test.clone(), 100.0 * curve.log_avg_mr))
        .collect();
    GeneralizationMatrix::from_cells(&cells, None)
}
