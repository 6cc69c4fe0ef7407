use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{run_ladder, LadderReport, Variant};
use crate::encoders::ModelConfig;
use crate::ingest::{PairRecord, SamplePlan};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Delta {
    None,
    PlusBn,
    MinusPool,
    MinusInit,
}

impl Delta {
    pub const ALL: [Delta; 4] = [Delta::None, Delta::PlusBn, Delta::MinusPool, Delta::MinusInit];

    pub fn label(self) -> &'static str {
        match self {
            Delta::None => "none",
            Delta::PlusBn => "+BN",
            Delta::MinusPool => "-Pool",
            Delta::MinusInit => "-Init",
        }
    }

    pub fn apply(self, base: &ModelConfig) -> ModelConfig {
        let mut c = base.clone();
        match self {
            Delta::None => {}
            Delta::PlusBn => c.use_bn = true,
            Delta::MinusPool => c.use_pooling = false,
            Delta::MinusInit => c.use_he_init = false,
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub family: String,
    pub blocks: usize,
    pub delta: Delta,
    pub config_id: String,
    pub runs: usize,
    pub failed: usize,
    pub mean_acc: f64,
    pub sd_acc: f64,
    pub mean_ea: f64,
    /// `mean_acc` minus the same family's `none` cell.
    pub diff: f64,
}

/// A qualitative expectation checked against the measured table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub family: String,
    pub claim: String,
    pub observed: bool,
}

#[derive(Debug, Clone)]
pub struct AblationReport {
    pub cells: Vec<AblationCell>,
    pub flags: Vec<Flag>,
    pub ladder: LadderReport,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Runs every base config with every delta over the ladder (fixed test
/// regime) and tabulates mean accuracy differences against each base.
pub fn run_ablations(
    records: &[PairRecord],
    plan: &SamplePlan,
    bases: &[ModelConfig],
    deltas: &[Delta],
    variant: Variant,
    seeds: &[u64],
) -> Result<AblationReport> {
    let mut deltas: Vec<Delta> = deltas.to_vec();
    if !deltas.contains(&Delta::None) {
        deltas.insert(0, Delta::None);
    }
    let mut configs = Vec::new();
    let mut keys = Vec::new();
    for base in bases {
        for &d in &deltas {
            let c = d.apply(base);
            keys.push((base.clone(), d, c.id()));
            configs.push(c);
        }
    }
    let ladder = run_ladder(records, plan, &configs, variant, seeds)?;
    let mut cells = Vec::new();
    for (base, delta, id) in &keys {
        let rows: Vec<_> = ladder
            .rows
            .iter()
            .filter(|r| r.regime == "fixed" && &r.config_id == id)
            .collect();
        let accs: Vec<f64> = rows.iter().filter_map(|r| r.result.as_ref().map(|e| e.acc)).collect();
        let eas: Vec<f64> = rows.iter().filter_map(|r| r.result.as_ref().map(|e| e.ea)).collect();
        let (mean_acc, sd_acc) = mean_sd(&accs);
        cells.push(AblationCell {
            family: format!("{}{}", base.family_name(), base.blocks),
            blocks: base.blocks,
            delta: *delta,
            config_id: id.clone(),
            runs: accs.len(),
            failed: rows.len() - accs.len(),
            mean_acc,
            sd_acc,
            mean_ea: mean_sd(&eas).0,
            diff: f64::NAN,
        });
    }
    for i in 0..cells.len() {
        let base = cells
            .iter()
            .find(|c| c.family == cells[i].family && c.delta == Delta::None)
            .map_or(f64::NAN, |c| c.mean_acc);
        cells[i].diff = cells[i].mean_acc - base;
    }
    let mut flags = Vec::new();
    for c in &cells {
        let claim = match c.delta {
            Delta::None => continue,
            Delta::PlusBn => "adding BN lowers accuracy",
            Delta::MinusPool => "removing pooling lowers accuracy",
            Delta::MinusInit => "removing He init lowers accuracy",
        };
        flags.push(Flag {
            family: c.family.clone(),
            claim: claim.to_string(),
            observed: c.diff < 0.0,
        });
        if c.delta == Delta::MinusPool {
            flags.push(Flag {
                family: c.family.clone(),
                claim: "without pooling accuracy falls below random matching (EA)".to_string(),
                observed: c.mean_acc < c.mean_ea,
            });
        }
    }
    Ok(AblationReport { cells, flags, ladder })
}

impl AblationReport {
    /// Families as rows, deltas as columns, accuracy differences as cells.
    pub fn render_table(&self) -> String {
        let mut deltas: Vec<Delta> = Vec::new();
        let mut families: Vec<String> = Vec::new();
        for c in &self.cells {
            if !deltas.contains(&c.delta) {
                deltas.push(c.delta);
            }
            if !families.contains(&c.family) {
                families.push(c.family.clone());
            }
        }
        let mut s = format!("{:<10} {:>10}", "family", "base acc");
        for d in deltas.iter().filter(|d| **d != Delta::None) {
            let _ = write!(s, " {:>10}", d.label());
        }
        s.push('\n');
        for f in &families {
            let get = |d: Delta| self.cells.iter().find(|c| &c.family == f && c.delta == d);
            let base = get(Delta::None).map_or(f64::NAN, |c| c.mean_acc);
            let _ = write!(s, "{f:<10} {base:>10.4}");
            for d in deltas.iter().filter(|d| **d != Delta::None) {
                match get(*d) {
                    Some(c) if c.runs > 0 => {
                        let _ = write!(s, " {:>+10.4}", c.diff);
                    }
                    _ => {
                        let _ = write!(s, " {:>10}", "failed");
                    }
                }
            }
            s.push('\n');
        }
        s.push('\n');
        for fl in &self.flags {
            let _ = writeln!(
                s,
                "[{}] {}: {}",
                if fl.observed { "observed" } else { "not observed" },
                fl.family,
                fl.claim
            );
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("family,blocks,delta,config,runs,failed,mean_acc,sd_acc,mean_ea,diff\n");
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
                c.family,
                c.blocks,
                c.delta.label(),
                c.config_id,
                c.runs,
                c.failed,
                c.mean_acc,
                c.sd_acc,
                c.mean_ea,
                c.diff
            );
        }
        s
    }
}
