//! Result files: a magic line followed by one JSON document.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use mrsolve::model::{evaluate_indirect, evaluate_perfect, validate_timing, Assignment, Evaluation, Instance, Schedule, TimedWalk};
use mrsolve::npcst::{hit_profit, MetricTree, NpcstInstance};

use crate::instance_file::InstanceFile;

pub const MAGIC: &str = "mrsolve-result 1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Service {
    Indirect,
    Perfect,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Sum of client latencies.
    Sum,
    /// Largest client latency.
    Max,
    /// Profit of clients hit by `tree` within `stretch` times their radius.
    Profit,
    /// Mean distortion of an embedding; checked by recomputation.
    Distortion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub command: String,
    pub instance_sha256: String,
    pub seed: u64,
    pub config: Value,
    pub objective_kind: Objective,
    /// `null` when some client is never served.
    pub objective: Option<f64>,
    pub service: Option<Service>,
    /// Per client, `null` when unserved.
    pub latencies: Vec<Option<f64>>,
    pub walks: Vec<TimedWalk>,
    pub assignments: Vec<Option<Assignment>>,
    pub tree: Option<MetricTree>,
    pub stretch: Option<f64>,
    pub certificates: Value,
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the canonical form, so formatting of the source file is irrelevant.
pub fn instance_hash(file: &InstanceFile) -> String {
    sha256_hex(&file.to_text())
}

pub fn latencies_of(ev: &Evaluation) -> Vec<Option<f64>> {
    ev.latencies.iter().map(|&l| l.is_finite().then_some(l)).collect()
}

pub fn aggregate(latencies: &[Option<f64>], kind: Objective) -> Option<f64> {
    let mut acc = 0.0f64;
    for l in latencies {
        let l = (*l)?;
        acc = match kind {
            Objective::Max => acc.max(l),
            _ => acc + l,
        };
    }
    Some(acc)
}

impl ResultFile {
    pub fn to_text(&self) -> String {
        let body = serde_json::to_string_pretty(self).expect("result serializes");
        format!("{MAGIC}\n{body}\n")
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        let (head, body) = text.split_once('\n').ok_or("result file has no body")?;
        if head.trim_end() != MAGIC {
            return Err(format!("expected `{MAGIC}` on the first line"));
        }
        serde_json::from_str(body).map_err(|e| format!("malformed result body: {e}"))
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            walks: self.walks.clone(),
            assignments: self.assignments.clone(),
        }
    }
}

/// What `verify` re-derived.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub command: String,
    pub checks: Vec<String>,
}

/// Re-checks a result against its instance using only the two files. Every
/// recomputed quantity must equal the reported one exactly.
pub fn verify(result: &ResultFile, file: &InstanceFile) -> Result<VerifyReport, String> {
    let mut checks = Vec::new();
    if result.instance_sha256 != instance_hash(file) {
        return Err("instance hash differs from the one recorded in the result".into());
    }
    checks.push("instance hash".to_string());
    let inst = file.instance().map_err(|e| e.to_string())?;
    match result.objective_kind {
        Objective::Sum | Objective::Max => verify_schedule(result, &inst, &mut checks)?,
        Objective::Profit => verify_tree(result, file, &inst, &mut checks)?,
        Objective::Distortion => verify_embedding(result, &inst, &mut checks)?,
    }
    Ok(VerifyReport {
        command: result.command.clone(),
        checks,
    })
}

fn verify_schedule(result: &ResultFile, inst: &Instance, checks: &mut Vec<String>) -> Result<(), String> {
    let sched = result.schedule();
    if sched.assignments.len() != inst.clients.len() && !sched.walks.is_empty() {
        return Err(format!("{} assignments for {} clients", sched.assignments.len(), inst.clients.len()));
    }
    if sched.walks.is_empty() {
        // an oracle run without a witness is checked by recomputation
        return verify_rerun(result, inst, checks);
    }
    validate_timing(inst, &sched).map_err(|e| e.to_string())?;
    for (w, walk) in sched.walks.iter().enumerate() {
        let depot = inst.repairmen[walk.owner].depot;
        if walk.nodes.first() != Some(&depot) {
            return Err(format!("walk {w} does not start at its depot"));
        }
    }
    checks.push("walk timing and depots".into());
    let ev = match result.service {
        Some(Service::Perfect) => evaluate_perfect(inst, &sched),
        Some(Service::Indirect) => evaluate_indirect(inst, &sched),
        None => return Err("schedule without a service semantics".into()),
    }
    .map_err(|e| e.to_string())?;
    let lat = latencies_of(&ev);
    if lat != result.latencies {
        let c = lat.iter().zip(&result.latencies).position(|(a, b)| a != b).unwrap_or(0);
        return Err(format!("client {c}: recomputed latency {:?}, reported {:?}", lat.get(c), result.latencies.get(c)));
    }
    checks.push(format!("{} latencies re-evaluated", lat.len()));
    let agg = aggregate(&lat, result.objective_kind);
    if agg != result.objective {
        return Err(format!("recomputed objective {agg:?}, reported {:?}", result.objective));
    }
    checks.push("objective".into());
    Ok(())
}

fn verify_rerun(result: &ResultFile, inst: &Instance, checks: &mut Vec<String>) -> Result<(), String> {
    let budget: mrsolve::oracles::OracleBudget = serde_json::from_value(result.config["caps"].clone()).map_err(|e| e.to_string())?;
    let ex = match result.objective_kind {
        Objective::Sum => mrsolve::oracles::exact_sum_mr(inst, &budget),
        _ => mrsolve::oracles::exact_max_mr(inst, &budget),
    }
    .map_err(|e| e.to_string())?;
    if Some(ex.objective) != result.objective {
        return Err(format!("oracle recomputed {}, reported {:?}", ex.objective, result.objective));
    }
    checks.push("oracle objective recomputed".into());
    Ok(())
}

fn verify_tree(result: &ResultFile, file: &InstanceFile, inst: &Instance, checks: &mut Vec<String>) -> Result<(), String> {
    let (root, budget, clients) = file.npcst_parts().ok_or("instance has no npcst block")?;
    let ni = NpcstInstance {
        metric: &inst.metric,
        root,
        clients,
        budget,
    };
    let Some(tree) = &result.tree else {
        let opt = mrsolve::oracles::exact_npcst(&ni).map_err(|e| e.to_string())?;
        if Some(opt) != result.objective {
            return Err(format!("oracle recomputed {opt}, reported {:?}", result.objective));
        }
        checks.push("oracle objective recomputed".into());
        return Ok(());
    };
    let n = inst.n();
    if tree.nodes.iter().any(|&u| u >= n) || !tree.nodes.contains(&root) {
        return Err("tree nodes out of range or root missing".into());
    }
    if tree.edges.len() + 1 != tree.nodes.len() {
        return Err(format!("{} edges for {} nodes is not a tree", tree.edges.len(), tree.nodes.len()));
    }
    // connectivity from the root over the listed edges
    let mut reached = vec![root];
    let mut grew = true;
    while grew {
        grew = false;
        for &(a, b) in &tree.edges {
            for (x, y) in [(a, b), (b, a)] {
                if reached.contains(&x) && !reached.contains(&y) {
                    reached.push(y);
                    grew = true;
                }
            }
        }
    }
    if reached.len() != tree.nodes.len() || tree.nodes.iter().any(|u| !reached.contains(u)) {
        return Err("tree edges do not connect its nodes".into());
    }
    let cost: f64 = tree.edges.iter().map(|&(a, b)| inst.metric.d(a, b)).sum();
    if cost != tree.cost {
        return Err(format!("recomputed tree cost {cost}, reported {}", tree.cost));
    }
    checks.push("tree shape and cost".into());
    let stretch = result.stretch.ok_or("profit result without a stretch factor")?;
    let (_, profit) = hit_profit(&tree.nodes, &ni, stretch);
    if Some(profit) != result.objective {
        return Err(format!("recomputed profit {profit}, reported {:?}", result.objective));
    }
    checks.push("profit of hit clients".into());
    Ok(())
}

fn verify_embedding(result: &ResultFile, inst: &Instance, checks: &mut Vec<String>) -> Result<(), String> {
    let count = result.config["count"].as_u64().ok_or("embedding result without a tree count")? as usize;
    let dist = mrsolve::frt::sample_distribution(&inst.metric, count, result.seed);
    let n = inst.n();
    for t in &dist.trees {
        for u in 0..n {
            for v in 0..n {
                if t.distance(u, v) < inst.metric.d(u, v) {
                    return Err(format!("tree with seed {} shrinks the pair ({u},{v})", t.seed));
                }
            }
        }
    }
    checks.push(format!("{count} trees dominate the metric"));
    let mean = mrsolve::frt::mean_distortion(&inst.metric, &dist);
    if Some(mean) != result.objective {
        return Err(format!("recomputed mean distortion {mean}, reported {:?}", result.objective));
    }
    checks.push("mean distortion".into());
    Ok(())
}
