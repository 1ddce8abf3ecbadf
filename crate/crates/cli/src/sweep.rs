//! Expansion of sweep arguments into a batch matrix.

use anyhow::Result;

use crate::invalid;

/// Keys that take comma-separated lists in a sweep.
const SWEPT: &[&str] = &["policy", "n_robots", "r_comm"];

pub struct SweepPlan {
    /// Override lists, one per batch, in policy, n_robots, r_comm order.
    pub cells: Vec<Vec<String>>,
    pub rounds: usize,
}

impl SweepPlan {
    pub fn new(overrides: &[String]) -> Result<Self> {
        let mut rounds = 20;
        let mut fixed = Vec::new();
        let mut axes: Vec<(&str, Vec<String>)> = Vec::new();
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| invalid(o, "override must look like key=value"))?;
            let k = k.trim();
            if k == "rounds" {
                rounds = v
                    .trim()
                    .parse()
                    .ok()
                    .filter(|&n: &usize| n > 0)
                    .ok_or_else(|| invalid("rounds", format!("invalid count {v:?}")))?;
            } else if let Some(&key) = SWEPT.iter().find(|&&s| s == k) {
                let values: Vec<String> = v.split(',').map(|s| s.trim().to_string()).collect();
                if values.iter().any(String::is_empty) {
                    return Err(invalid(key, format!("empty value in list {v:?}")));
                }
                if axes.iter().any(|(a, _)| *a == key) {
                    return Err(invalid(key, "given twice"));
                }
                axes.push((key, values));
            } else {
                fixed.push(o.clone());
            }
        }
        axes.sort_by_key(|(k, _)| SWEPT.iter().position(|s| s == k));

        let mut cells = vec![fixed];
        for (key, values) in &axes {
            cells = cells
                .into_iter()
                .flat_map(|base| {
                    values.iter().map(move |v| {
                        let mut c = base.clone();
                        c.push(format!("{key}={v}"));
                        c
                    })
                })
                .collect();
        }
        Ok(SweepPlan { cells, rounds })
    }

    pub fn total_rounds(&self) -> usize {
        self.cells.len() * self.rounds
    }
}
