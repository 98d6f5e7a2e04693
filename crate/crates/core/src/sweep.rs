//! Full-factorial parameter sweeps scored by stylized-fact fitness.
//!
//! A plan names a model, a base config and an ordered list of parameters,
//! each with a list of values. Cells are the lexicographic Cartesian product
//! in declared order, so the last parameter varies fastest. Every replicate
//! of every cell runs with seed `stable_hash([base_seed, cell, replicate])`,
//! which makes the result independent of how the work is scheduled.
//!
//! ```toml
//! model = "hybrid"
//! replicates = 3
//! base_seed = 7
//! steps = 4000
//!
//! [base]
//! n_agents = 50
//!
//! [[params]]
//! name = "limit_rate"
//! values = [3.0, 40.0]
//!
//! [[params]]
//! name = "update_prob"
//! values = [0.01, 0.05, 0.2]
//! ```
//!
//! A cell that fails to run, produces a degenerate series, or keeps a
//! one-sided book for most of the run is flagged; failures become rows, they
//! never abort the sweep. Flagged cells rank after every unflagged cell.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::output::ModelKind;
use crate::rng::stable_hash;
use crate::stats::{evaluate, ComplianceScores, Evaluation, ScoringConfig, Weights};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParam {
    /// Config field, dotted for nested fields (`noise.limit_rate`).
    pub name: String,
    pub values: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub model: ModelKind,
    /// Overrides on the model's default config.
    #[serde(default = "empty_table")]
    pub base: Value,
    #[serde(default)]
    pub params: Vec<SweepParam>,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub steps: Option<usize>,
    pub burn_in_fraction: Option<f64>,
    #[serde(default)]
    pub scoring: ScoringConfig,
    #[serde(default)]
    pub weights: Weights,
    /// One-sided fraction above which a cell is flagged as starved.
    #[serde(default = "default_one_sided_limit")]
    pub one_sided_limit: f64,
}

fn empty_table() -> Value {
    Value::Object(Default::default())
}

fn one() -> usize {
    1
}

fn default_one_sided_limit() -> f64 {
    0.5
}

impl SweepPlan {
    pub fn from_toml(text: &str) -> Result<Self> {
        let plan: SweepPlan = toml::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::config("replicates", "must be >= 1"));
        }
        for (i, p) in self.params.iter().enumerate() {
            if p.values.is_empty() {
                return Err(Error::config(&format!("params[{i}].values"), "must not be empty"));
            }
            if self.params[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::config(&format!("params[{i}].name"), format!("duplicate '{}'", p.name)));
            }
        }
        self.scoring.validate()?;
        Weights::new(self.weights.0)?;
        if !(0.0..=1.0).contains(&self.one_sided_limit) {
            return Err(Error::config("one_sided_limit", "must lie in [0, 1]"));
        }
        // every cell must at least parse; range errors surface as flagged rows
        let base = self.base_config()?;
        for cell in expand(self)? {
            base.with_overrides(&self.overrides(&cell))?;
        }
        Ok(())
    }

    pub fn base_config(&self) -> Result<ModelConfig> {
        let mut c = ModelConfig::from_value(self.model, self.base.clone())?;
        if let Some(s) = self.steps {
            c.set_steps(s);
        }
        if let Some(b) = self.burn_in_fraction {
            c.set_burn_in_fraction(b);
        }
        Ok(c)
    }

    pub fn cell_count(&self) -> usize {
        self.params.iter().map(|p| p.values.len()).product()
    }

    fn overrides<'a>(&'a self, cell: &'a Cell) -> Vec<(&'a str, Value)> {
        self.params
            .iter()
            .zip(&cell.values)
            .map(|(p, v)| (p.name.as_str(), v.clone()))
            .collect()
    }

    /// Config for one replicate of one cell.
    pub fn cell_config(&self, cell: &Cell, replicate: usize) -> Result<ModelConfig> {
        let mut c = self.base_config()?.with_overrides(&self.overrides(cell))?;
        c.set_seed(stable_hash(&[self.base_seed, cell.index as u64, replicate as u64]));
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub values: Vec<Value>,
}

/// Cells in lexicographic order of the declared parameters.
pub fn expand(plan: &SweepPlan) -> Result<Vec<Cell>> {
    if let Some(p) = plan.params.iter().find(|p| p.values.is_empty()) {
        return Err(Error::config(&p.name, "empty value list"));
    }
    let n = plan.cell_count();
    Ok((0..n)
        .map(|index| {
            let mut rest = index;
            let mut values = vec![Value::Null; plan.params.len()];
            for (slot, p) in values.iter_mut().zip(&plan.params).rev() {
                *slot = p.values[rest % p.values.len()].clone();
                rest /= p.values.len();
            }
            Cell { index, values }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub seed: u64,
    pub evaluation: Evaluation,
    pub one_sided_fraction: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CellFlags {
    /// Replicates whose run failed.
    pub failed: usize,
    /// Replicates whose return series could not be scored.
    pub degenerate: usize,
    /// Replicates whose book was one-sided for more than the plan's limit.
    pub one_sided: usize,
}

impl CellFlags {
    pub fn any(&self) -> bool {
        self.failed + self.degenerate + self.one_sided > 0
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        for (n, name) in [(self.failed, "failed"), (self.degenerate, "degenerate"), (self.one_sided, "one_sided")] {
            if n > 0 {
                parts.push(name);
            }
        }
        parts.join("|")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: Cell,
    pub replicates: Vec<ReplicateResult>,
    /// Median component scores across replicates.
    pub scores: [f64; 3],
    pub fitness_sum: f64,
    pub fitness_product: f64,
    pub flags: CellFlags,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub param_names: Vec<String>,
    pub cells: Vec<CellResult>,
}

/// Median; the mean of the middle pair for even lengths.
pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn run_replicate(plan: &SweepPlan, cell: &Cell, replicate: usize) -> ReplicateResult {
    let failed = |seed: u64, e: Error| ReplicateResult {
        replicate,
        seed,
        evaluation: evaluate(&[], None, &plan.scoring, plan.weights),
        one_sided_fraction: 0.0,
        error: Some(e.to_string()),
    };
    let cfg = match plan.cell_config(cell, replicate) {
        Ok(c) => c,
        Err(e) => return failed(0, e),
    };
    let seed = cfg.seed();
    match cfg.run() {
        Ok((out, _)) => {
            let volume: Vec<f64> = out.trimmed_volume().iter().map(|&v| v as f64).collect();
            ReplicateResult {
                replicate,
                seed,
                evaluation: evaluate(out.trimmed_returns(), Some(&volume), &plan.scoring, plan.weights),
                one_sided_fraction: out.one_sided_fraction(),
                error: None,
            }
        }
        Err(e) => failed(seed, e),
    }
}

fn aggregate(plan: &SweepPlan, cell: Cell, replicates: Vec<ReplicateResult>) -> CellResult {
    let pick = |f: &dyn Fn(&ReplicateResult) -> f64| median(&replicates.iter().map(f).collect::<Vec<_>>());
    let component = |i: usize| pick(&|r| r.evaluation.fitness.scores.as_array()[i]);
    let flags = CellFlags {
        failed: replicates.iter().filter(|r| r.error.is_some()).count(),
        degenerate: replicates
            .iter()
            .filter(|r| r.error.is_none() && r.evaluation.degeneracy.is_some())
            .count(),
        one_sided: replicates
            .iter()
            .filter(|r| r.one_sided_fraction > plan.one_sided_limit)
            .count(),
    };
    CellResult {
        scores: [component(0), component(1), component(2)],
        fitness_sum: pick(&|r| r.evaluation.fitness.fitness_sum),
        fitness_product: pick(&|r| r.evaluation.fitness.fitness_product),
        cell,
        replicates,
        flags,
    }
}

/// Runs every replicate of every cell on `workers` threads (0 for rayon's
/// default) and assembles the rows in cell order.
pub fn run_sweep(plan: &SweepPlan, workers: usize) -> Result<SweepResult> {
    plan.validate()?;
    let cells = expand(plan)?;
    let units: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..plan.replicates).map(move |r| (c, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let mut runs: Vec<ReplicateResult> =
        pool.install(|| units.par_iter().map(|&(c, r)| run_replicate(plan, &cells[c], r)).collect());
    let mut rows = Vec::with_capacity(cells.len());
    for cell in cells.into_iter().rev() {
        let reps = runs.split_off(runs.len() - plan.replicates);
        rows.push(aggregate(plan, cell, reps));
    }
    rows.reverse();
    Ok(SweepResult {
        param_names: plan.params.iter().map(|p| p.name.clone()).collect(),
        cells: rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankKey {
    Sum,
    Product,
}

impl std::str::FromStr for RankKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(RankKey::Sum),
            "product" => Ok(RankKey::Product),
            other => Err(format!("unknown rank key '{other}'")),
        }
    }
}

/// Unflagged cells by descending fitness, then flagged cells by descending
/// fitness; ties keep cell order.
pub fn rank(result: &SweepResult, key: RankKey) -> Vec<&CellResult> {
    let value = |c: &CellResult| match key {
        RankKey::Sum => c.fitness_sum,
        RankKey::Product => c.fitness_product,
    };
    let mut rows: Vec<&CellResult> = result.cells.iter().collect();
    rows.sort_by(|a, b| {
        a.flags
            .any()
            .cmp(&b.flags.any())
            .then(value(b).total_cmp(&value(a)))
            .then(a.cell.index.cmp(&b.cell.index))
    });
    rows
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl SweepResult {
    /// One row per cell: index, parameter values, median scores and fitness,
    /// flag counts.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["cell".to_string()];
        header.extend(self.param_names.iter().cloned());
        header.extend(
            [
                "tails",
                "no_autocorr",
                "clustering",
                "fitness_sum",
                "fitness_product",
                "failed",
                "degenerate",
                "one_sided",
                "flags",
            ]
            .map(String::from),
        );
        w.write_record(&header)?;
        for c in &self.cells {
            let mut row = vec![c.cell.index.to_string()];
            row.extend(c.cell.values.iter().map(value_text));
            row.extend(c.scores.iter().map(f64::to_string));
            row.push(c.fitness_sum.to_string());
            row.push(c.fitness_product.to_string());
            row.push(c.flags.failed.to_string());
            row.push(c.flags.degenerate.to_string());
            row.push(c.flags.one_sided.to_string());
            row.push(c.flags.label());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per replicate with its own scores.
    pub fn write_replicates_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "cell",
            "replicate",
            "seed",
            "tails",
            "no_autocorr",
            "clustering",
            "fitness_sum",
            "fitness_product",
            "one_sided_fraction",
            "error",
        ])?;
        for c in &self.cells {
            for r in &c.replicates {
                let f = &r.evaluation.fitness;
                let s: ComplianceScores = f.scores;
                w.write_record([
                    c.cell.index.to_string(),
                    r.replicate.to_string(),
                    r.seed.to_string(),
                    s.tails.to_string(),
                    s.no_autocorr.to_string(),
                    s.clustering.to_string(),
                    f.fitness_sum.to_string(),
                    f.fitness_product.to_string(),
                    r.one_sided_fraction.to_string(),
                    r.error.clone().or_else(|| r.evaluation.degeneracy.clone()).unwrap_or_default(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(text: &str) -> SweepPlan {
        SweepPlan::from_toml(text).unwrap()
    }

    const SMALL: &str = r#"
model = "zim"
replicates = 2
base_seed = 3
steps = 400

[[params]]
name = "limit_rate"
values = [5.0, 10.0]

[[params]]
name = "market_rate"
values = [0.5, 1.0, 2.0]
"#;

    #[test]
    fn expansion_is_lexicographic() {
        let p = plan(
            r#"
model = "zim"
[[params]]
name = "price_mode"
values = ["per_order", "shared"]
[[params]]
name = "seed"
values = [1, 2]
"#,
        );
        let cells = expand(&p).unwrap();
        let got: Vec<(String, String)> = cells
            .iter()
            .map(|c| (value_text(&c.values[0]), value_text(&c.values[1])))
            .collect();
        let want = [("per_order", "1"), ("per_order", "2"), ("shared", "1"), ("shared", "2")];
        assert_eq!(got, want.map(|(a, b)| (a.to_string(), b.to_string())));
        assert_eq!(expand(&plan(SMALL)).unwrap().len(), 6);
        assert_eq!(expand(&plan("model = \"cont\"")).unwrap().len(), 1);
    }

    #[test]
    fn plan_validation() {
        for bad in [
            "model = \"zim\"\nreplicates = 0",
            "model = \"zim\"\n[[params]]\nname = \"limit_rate\"\nvalues = []",
            "model = \"zim\"\n[[params]]\nname = \"limit_rat\"\nvalues = [1.0]",
            "model = \"zim\"\nbogus = 1",
            "model = \"zim\"\n[base]\nlimit_rat = 1.0",
            "model = \"zim\"\nweights = [0.5, 0.5, 0.5]",
            "model = \"zim\"\n[[params]]\nname = \"steps\"\nvalues = [1.5]",
        ] {
            let err = SweepPlan::from_toml(bad).unwrap_err();
            assert!(err.is_validation(), "{bad}: {err}");
        }
    }

    #[test]
    fn seeds_follow_the_stable_hash() {
        let p = plan(SMALL);
        let cells = expand(&p).unwrap();
        let c = p.cell_config(&cells[4], 1).unwrap();
        assert_eq!(c.seed(), stable_hash(&[3, 4, 1]));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = plan(SMALL);
        let a = run_sweep(&p, 1).unwrap();
        let b = run_sweep(&p, 3).unwrap();
        assert_eq!(a, b);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_csv(&mut x).unwrap();
        b.write_csv(&mut y).unwrap();
        assert_eq!(x, y);
        assert_eq!(a.cells.len(), 6);
        assert!(a.cells.iter().enumerate().all(|(i, c)| c.cell.index == i));
    }

    #[test]
    fn failing_cells_become_flagged_rows() {
        let p = plan(
            r#"
model = "zim"
steps = 200
[[params]]
name = "limit_rate"
values = [-1.0, 10.0]
"#,
        );
        let r = run_sweep(&p, 1).unwrap();
        assert_eq!(r.cells[0].flags.failed, 1);
        assert_eq!(r.cells[0].fitness_product, 0.0);
        assert!(!r.cells[1].flags.any());
        assert_eq!(rank(&r, RankKey::Product)[1].cell.index, 0);
    }

    fn row(index: usize, sum: f64, product: f64, flagged: bool) -> CellResult {
        CellResult {
            cell: Cell { index, values: vec![] },
            replicates: vec![],
            scores: [0.0; 3],
            fitness_sum: sum,
            fitness_product: product,
            flags: CellFlags {
                degenerate: flagged as usize,
                ..CellFlags::default()
            },
        }
    }

    #[test]
    fn ranking_orders() {
        let r = SweepResult {
            param_names: vec![],
            cells: vec![row(0, 0.2, 0.0, false), row(1, 0.5, 0.3, false), row(2, 0.9, 0.9, false)],
        };
        let idx = |key| rank(&r, key).iter().map(|c| c.cell.index).collect::<Vec<_>>();
        assert_eq!(idx(RankKey::Product), [2, 1, 0]);
        let ties = SweepResult {
            param_names: vec![],
            cells: vec![row(0, 0.5, 0.5, false), row(1, 0.5, 0.5, false), row(2, 0.9, 0.9, true)],
        };
        let idx = rank(&ties, RankKey::Sum).iter().map(|c| c.cell.index).collect::<Vec<_>>();
        assert_eq!(idx, [0, 1, 2]);
        let single = SweepResult {
            param_names: vec![],
            cells: vec![row(0, 0.1, 0.1, false)],
        };
        assert_eq!(rank(&single, RankKey::Sum).len(), 1);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
