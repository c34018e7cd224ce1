//! Rounding the relaxed LP into a schedule, and the full Sum-MR pipeline.
//!
//! Stamps are processed in increasing order, `4 omega` rounds each. In a
//! round every repairman picks one class of length at most `mu v_r q`,
//! walks it at full speed and returns to its depot; a client counts as
//! served once a picked class reaches its `mu q` ball. Picks are made by
//! conditional expectations over the LP's own distribution (class `p`
//! with probability `x[r,p,q] / omega`), which serves at least
//! `ceil(F / 2 omega)` new clients per round, `F` being the LP mass of the
//! still unserved clients up to `q`.
//!
//! The resulting schedule serves clients indirectly. [`to_perfect`] turns
//! it into one where every client meets a repairman, using rounds of
//! geometrically growing length along each repairman's walk.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invariant, Error, Result};
use crate::lp::{check_rplp, fits, solve_sum_mr_lp, ColumnGenerationStats, ExactPricer, FractionalSolution, LpConfig, NpcstPricer, PathClass, Pricer};
use crate::model::{build_time_grid, evaluate_indirect, evaluate_perfect, scale_instance, Assignment, Evaluation, Instance, Schedule, TimedWalk};
use crate::npcst::general::{GeneralConfig, GeneralSolver};
use crate::npcst::NpcstSolver;
use crate::num::tol;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Selection {
    Derandomized,
    /// Figure-style random picks, for experiments only.
    Randomized { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub stamp: usize,
    pub q: f64,
    /// Round within the stamp, from 1.
    pub f: usize,
    pub start: f64,
    /// Walk of each repairman (depot only when idle).
    pub walks: Vec<Vec<usize>>,
    pub served: Vec<usize>,
    /// LP mass up to `q` of the clients unserved before the round.
    pub mass: f64,
    pub required: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub stamp: usize,
    /// LP mass up to the stamp of clients still unserved after it.
    pub residual: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingTrace {
    pub steps: Vec<StepRecord>,
    /// `h[s] = sum_c y[c][s]`.
    pub h: Vec<f64>,
    pub decay: Vec<DecayCheck>,
    /// Stamp index at which each client was served.
    pub served_stamp: Vec<Option<usize>>,
    /// Rounds appended after the last stamp because clients were left.
    pub extra_rounds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    /// Every round served at least its required count.
    pub coverage: bool,
    /// Every client was served within the grid.
    pub complete: bool,
    /// Every client's latency is at most `16 mu omega q` for its stamp.
    pub per_client: bool,
    pub total_latency: f64,
    /// `32 mu omega` times the LP objective.
    pub total_bound: f64,
    pub total: bool,
    /// Residual mass decay at every stamp.
    pub decay: bool,
}

impl Certificates {
    pub fn all(&self) -> bool {
        self.coverage && self.complete && self.per_client && self.total && self.decay
    }

    /// The first failed certificate as an error.
    pub fn check(&self) -> Result<()> {
        let failed = [
            (self.coverage, "round-coverage"),
            (self.complete, "all-served"),
            (self.per_client, "client-latency"),
            (self.total, "total-latency"),
            (self.decay, "residual-decay"),
        ];
        match failed.iter().find(|f| !f.0) {
            Some(&(_, name)) => Err(invariant(name, format!("certificate failed: {self:?}"))),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MraOutcome {
    pub schedule: Schedule,
    pub evaluation: Evaluation,
    pub trace: RoundingTrace,
    pub certificates: Certificates,
}

struct Candidate {
    id: usize,
    class: PathClass,
    prob: f64,
    hits: Vec<bool>,
}

/// Candidate classes for repairman `r` at stamp `s`: the LP support, the
/// depot, and every class in `extra` that fits, each once.
fn candidates(inst: &Instance, frac: &FractionalSolution, r: usize, s: usize, extra: &[PathClass]) -> Vec<Candidate> {
    let q = frac.stamps[s];
    let mu = frac.mu;
    let mut out: Vec<Candidate> = Vec::new();
    let add = |id: usize, class: &PathClass, prob: f64, out: &mut Vec<Candidate>| {
        if let Some(c) = out.iter_mut().find(|c| c.class.visited == class.visited) {
            c.prob += prob;
            return;
        }
        let hits = (0..inst.clients.len()).map(|c| class.hits(inst, c, mu * q)).collect();
        out.push(Candidate {
            id,
            class: class.clone(),
            prob,
            hits,
        });
    };
    for (&(rr, p, ss), &v) in &frac.x {
        if rr == r && ss == s {
            add(p, &frac.classes[p], v / frac.omega, &mut out);
        }
    }
    let total: f64 = out.iter().map(|c| c.prob).sum();
    let base = frac.classes.len();
    // not picking a class leaves the repairman at its depot
    add(base, &PathClass::depot_only(inst, r), (1.0 - total).max(0.0), &mut out);
    for (i, p) in frac.classes.iter().chain(extra).enumerate() {
        if p.repairman == r && fits(inst, p, q, mu) {
            add(base + 1 + i, p, 0.0, &mut out);
        }
    }
    out.sort_by_key(|c| c.id);
    out
}

/// Picks one candidate per repairman maximizing the conditional expectation
/// of the summed weight of newly covered clients.
fn conditional_pick(cands: &[Vec<Candidate>], unserved: &[bool], w: &[f64]) -> Vec<usize> {
    let m = unserved.len();
    // miss[r][c]: probability that repairman r's random pick misses c
    let miss: Vec<Vec<f64>> = cands
        .iter()
        .map(|cs| {
            (0..m)
                .map(|c| {
                    let hit: f64 = cs.iter().filter(|k| k.hits[c]).map(|k| k.prob).sum();
                    (1.0 - hit).clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect();
    let mut decided = vec![1.0; m];
    let mut picks = Vec::with_capacity(cands.len());
    for r in 0..cands.len() {
        let later: Vec<f64> = (0..m).map(|c| miss[r + 1..].iter().map(|row| row[c]).product()).collect();
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (k, cand) in cands[r].iter().enumerate() {
            let v: f64 = (0..m)
                .filter(|&c| unserved[c])
                .map(|c| {
                    let own = if cand.hits[c] { 0.0 } else { 1.0 };
                    w[c] * (1.0 - decided[c] * own * later[c])
                })
                .sum();
            if v > best.0 + 1e-12 {
                best = (v, k);
            }
        }
        for (c, d) in decided.iter_mut().enumerate() {
            if cands[r][best.1].hits[c] {
                *d = 0.0;
            }
        }
        picks.push(best.1);
    }
    picks
}

fn random_pick(cands: &[Vec<Candidate>], rng: &mut ChaCha8Rng) -> Vec<usize> {
    cands
        .iter()
        .map(|cs| {
            let depot = cs.iter().position(|c| c.class.walk.len() == 1).unwrap_or(0);
            let mut u: f64 = rng.gen();
            for (k, c) in cs.iter().enumerate() {
                if u < c.prob {
                    return k;
                }
                u -= c.prob;
            }
            depot
        })
        .collect()
}

/// One round at stamp `s`. Returns the class per repairman, the newly
/// served clients, the unserved mass and the required count.
pub fn greedy_step(
    inst: &Instance,
    frac: &FractionalSolution,
    s: usize,
    unserved: &[bool],
    extra: &[Vec<PathClass>],
    selection: Selection,
    rng: &mut ChaCha8Rng,
) -> (Vec<PathClass>, Vec<usize>, f64, u64) {
    let m = inst.clients.len();
    let mass_of: Vec<f64> = (0..m).map(|c| frac.y_prefix(c, s).clamp(0.0, 1.0)).collect();
    let mass: f64 = (0..m).filter(|&c| unserved[c]).map(|c| mass_of[c]).sum();
    let required = (mass / (2.0 * frac.omega) - 1e-7).ceil().max(0.0) as u64;
    let cands: Vec<Vec<Candidate>> = (0..inst.repairmen.len())
        .map(|r| candidates(inst, frac, r, s, extra.get(r).map_or(&[], |v| v.as_slice())))
        .collect();
    let covered = |picks: &[usize]| -> Vec<usize> {
        (0..m)
            .filter(|&c| unserved[c] && picks.iter().enumerate().any(|(r, &k)| cands[r][k].hits[c]))
            .collect()
    };
    let picks = match selection {
        Selection::Derandomized => {
            // prefer the pick that removes the most LP mass when it also
            // meets the count that the plain count objective guarantees
            let by_mass = conditional_pick(&cands, unserved, &mass_of);
            if covered(&by_mass).len() as u64 >= required {
                by_mass
            } else {
                conditional_pick(&cands, unserved, &vec![1.0; m])
            }
        }
        Selection::Randomized { .. } => random_pick(&cands, rng),
    };
    let served = covered(&picks);
    let classes = picks.iter().enumerate().map(|(r, &k)| cands[r][k].class.clone()).collect();
    (classes, served, mass, required)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MraConfig {
    pub selection: Selection,
    /// Abort on the first failed certificate.
    pub strict: bool,
}

impl Default for MraConfig {
    fn default() -> Self {
        Self {
            selection: Selection::Derandomized,
            strict: true,
        }
    }
}

/// Rounds a relaxed LP solution. `extra[r]` may add classes for repairman
/// `r` beyond those in `frac`.
pub fn run_sum_mra(inst: &Instance, frac: &FractionalSolution, extra: &[Vec<PathClass>], cfg: &MraConfig) -> Result<MraOutcome> {
    check_rplp(inst, frac)?;
    let (mu, omega) = (frac.mu, frac.omega);
    let rounds = 4.0 * omega;
    if rounds.fract() != 0.0 {
        return Err(Error::Invalid(format!("4 omega must be an integer, got {rounds}")));
    }
    let rounds = rounds as usize;
    let m = inst.clients.len();
    let k = inst.repairmen.len();
    let mut rng = ChaCha8Rng::seed_from_u64(match cfg.selection {
        Selection::Randomized { seed } => seed,
        Selection::Derandomized => 0,
    });
    let mut unserved = vec![true; m];
    let mut served_stamp = vec![None; m];
    let mut walks: Vec<TimedWalk> = (0..k)
        .map(|r| TimedWalk {
            owner: r,
            nodes: vec![inst.repairmen[r].depot],
            times: vec![0.0],
        })
        .collect();
    let h: Vec<f64> = (0..frac.stamps.len()).map(|s| (0..m).map(|c| frac.y[c][s]).sum()).collect();
    let mut steps = Vec::new();
    let mut decay = Vec::new();
    let mut clock = 0.0;
    let mut extra_rounds = 0;
    let last = frac.stamps.len() - 1;
    let mut s = 0;
    let mut f = 0;
    loop {
        if s > last {
            // rounds beyond the grid, only if clients remain
            if unserved.iter().all(|&u| !u) || extra_rounds >= 4 * rounds * (m + 1) {
                break;
            }
            extra_rounds += 1;
        }
        let ss = s.min(last);
        let q = frac.stamps[ss];
        f += 1;
        let (classes, served, mass, required) = greedy_step(inst, frac, ss, &unserved, extra, cfg.selection, &mut rng);
        for (r, p) in classes.iter().enumerate() {
            if p.walk.len() > 1 {
                let rep = &inst.repairmen[r];
                walks[r].push(rep.depot, clock);
                let mut out = p.walk.clone();
                out.push(rep.depot);
                let tw = TimedWalk::full_speed(r, out, clock, rep.speed, &inst.metric);
                for (&u, &t) in tw.nodes.iter().zip(&tw.times).skip(1) {
                    walks[r].push(u, t);
                }
            }
        }
        for &c in &served {
            unserved[c] = false;
            served_stamp[c] = Some(ss);
        }
        steps.push(StepRecord {
            stamp: ss,
            q,
            f,
            start: clock,
            walks: classes.into_iter().map(|p| p.walk).collect(),
            served,
            mass,
            required,
        });
        clock += 2.0 * mu * q;
        if s <= last && f == rounds {
            let residual: f64 = (0..m).filter(|&c| unserved[c]).map(|c| frac.y_prefix(c, s)).sum();
            let bound: f64 = (0..=s).map(|j| h[j] / 4f64.powi((s - j + 1) as i32)).sum();
            decay.push(DecayCheck {
                stamp: s,
                residual,
                bound,
                holds: residual <= bound + 1e-7,
            });
        }
        if f == rounds {
            f = 0;
            s += 1;
        }
        if s > last && f == 0 && unserved.iter().all(|&u| !u) {
            break;
        }
    }
    let schedule = Schedule {
        walks,
        assignments: vec![None; m],
    };
    let evaluation = evaluate_indirect(inst, &schedule)?;
    let per_client = (0..m).all(|c| match served_stamp[c] {
        Some(s) if s <= last => evaluation.latencies[c] <= 16.0 * mu * omega * frac.stamps[s] * (1.0 + 1e-9),
        _ => false,
    });
    let total_bound = 32.0 * mu * omega * frac.objective;
    let certificates = Certificates {
        coverage: steps.iter().all(|st| st.served.len() as u64 >= st.required),
        complete: extra_rounds == 0 && evaluation.all_served(),
        per_client,
        total_latency: evaluation.total,
        total_bound,
        total: evaluation.total <= total_bound + tol(total_bound) * 1e2,
        decay: decay.iter().all(|d| d.holds),
    };
    if !evaluation.all_served() {
        return Err(invariant("all-served", "clients remain unserved after the extra rounds"));
    }
    if cfg.strict {
        certificates.check()?;
    }
    Ok(MraOutcome {
        schedule,
        evaluation,
        trace: RoundingTrace {
            steps,
            h,
            decay,
            served_stamp,
            extra_rounds,
        },
        certificates,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerfectTrace {
    pub alpha: f64,
    /// Length of round zero.
    pub unit: f64,
    pub indirect: Vec<f64>,
    pub perfect: Vec<f64>,
    /// Clients whose perfect latency exceeds `(3 + eps)` times the indirect one.
    pub over_ratio: Vec<usize>,
}

impl PerfectTrace {
    pub fn worst_ratio(&self) -> f64 {
        self.indirect
            .iter()
            .zip(&self.perfect)
            .map(|(&i, &p)| if i > 0.0 { p / i } else if p > 0.0 { f64::INFINITY } else { 1.0 })
            .fold(0.0, f64::max)
    }
}

/// Removes waits: the same node sequence walked at full speed from time 0.
fn compress(inst: &Instance, w: &TimedWalk) -> (Vec<usize>, Vec<f64>) {
    let rep = &inst.repairmen[w.owner];
    let mut nodes = Vec::new();
    for &u in &w.nodes {
        if nodes.last() != Some(&u) {
            nodes.push(u);
        }
    }
    let tw = TimedWalk::full_speed(w.owner, nodes, 0.0, rep.speed, &inst.metric);
    (tw.nodes, tw.times)
}

/// First time at or after `a` that the walk is at `u`.
fn first_presence(w: &TimedWalk, u: usize, a: f64) -> Option<f64> {
    let k = w.nodes.len();
    for i in 0..k {
        if w.nodes[i] != u {
            continue;
        }
        let until = if i + 1 < k && w.nodes[i + 1] == u { w.times[i + 1] } else { w.times[i] };
        if until + tol(a) >= a {
            return Some(w.times[i].max(a));
        }
    }
    None
}

/// Turns indirect service into perfect service. Round `x` of a repairman
/// lasts `2 alpha^x unit`: it follows its (wait-free) walk as far as
/// `alpha^x unit` time allows, waits at the last node reached, walks back
/// and waits at the depot. Each client keeps the node that served it,
/// goes there, and waits for the repairman.
pub fn to_perfect(inst: &Instance, sched: &Schedule, eps: f64) -> Result<(Schedule, PerfectTrace)> {
    if !(eps > 0.0) {
        return Err(Error::Invalid("eps must be positive".into()));
    }
    let ev = evaluate_indirect(inst, sched)?;
    if !ev.all_served() {
        return Err(Error::Invalid("every client must be served indirectly".into()));
    }
    let alpha = 1.0 + 2.0 / eps;
    let unit = ev.latencies.iter().copied().filter(|&l| l > 0.0).fold(1.0, f64::min);
    let m = inst.clients.len();
    let mut assignments = vec![None; m];
    let mut walks = Vec::with_capacity(sched.walks.len());
    for (w, walk) in sched.walks.iter().enumerate() {
        let (nodes, times) = compress(inst, walk);
        let depot = inst.repairmen[walk.owner].depot;
        let mine: Vec<(usize, usize)> = (0..m)
            .filter_map(|c| ev.served_by[c].filter(|e| e.walk == w).map(|e| (c, e.node)))
            .collect();
        let mut out = TimedWalk {
            owner: walk.owner,
            nodes: vec![depot],
            times: vec![0.0],
        };
        let mut pending: Vec<(usize, usize)> = mine;
        let mut start = 0.0;
        let mut x = 0;
        while !pending.is_empty() {
            if x > 4000 {
                return Err(invariant("perfect-rounds", "too many rounds"));
            }
            let budget = alpha.powi(x) * unit;
            let reach = times.iter().take_while(|&&t| t <= budget + tol(budget)).count();
            let last = reach - 1;
            for i in 1..reach {
                out.push(nodes[i], start + times[i]);
            }
            out.push(nodes[last], start + budget);
            for i in (0..last).rev() {
                out.push(nodes[i], start + budget + times[last] - times[i]);
            }
            start += 2.0 * budget;
            out.push(depot, start);
            pending.retain(|&(c, u)| match first_presence(&out, u, inst.client_reach_time(c, u)) {
                Some(t) => {
                    assignments[c] = Some(Assignment { node: u, time: t });
                    false
                }
                None => true,
            });
            x += 1;
        }
        walks.push(out);
    }
    let perfect_sched = Schedule { walks, assignments };
    let pe = evaluate_perfect(inst, &perfect_sched)?;
    let over_ratio = (0..m)
        .filter(|&c| {
            let bound = (3.0 + eps) * ev.latencies[c];
            pe.latencies[c] > bound + tol(bound)
        })
        .collect();
    Ok((
        perfect_sched,
        PerfectTrace {
            alpha,
            unit,
            indirect: ev.latencies,
            perfect: pe.latencies,
            over_ratio,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LpMode {
    /// Every class enumerated; `mu = omega = 1` unless overridden.
    Exact { node_cap: usize },
    /// Column generation priced by the general-metric NPCST solver.
    Oracle(GeneralConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumMrConfig {
    pub mode: LpMode,
    pub mu: Option<f64>,
    pub omega: Option<f64>,
    /// For the indirect to perfect transform.
    pub eps: f64,
    /// Column generation stops within this relative gap (exact pricing).
    pub lp_eps: f64,
    pub max_rounds: usize,
    pub mra: MraConfig,
}

impl Default for SumMrConfig {
    fn default() -> Self {
        Self {
            mode: LpMode::Exact { node_cap: 14 },
            mu: None,
            omega: None,
            eps: 1.0,
            lp_eps: 0.0,
            max_rounds: 500,
            mra: MraConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    /// Perfect-service schedule in the instance's own units.
    pub schedule: Schedule,
    pub latencies: Vec<f64>,
    pub total: f64,
    pub indirect_total: f64,
    /// LP objective in the instance's units.
    pub lp_objective: f64,
    pub lp_stats: ColumnGenerationStats,
    pub mu: f64,
    pub omega: f64,
    pub eps: f64,
    pub scale: f64,
    pub certificates: Certificates,
    pub trace: RoundingTrace,
    pub perfect: PerfectTrace,
    /// Final total over the LP objective.
    pub ratio_to_lp: f64,
}

fn unscale(s: &Schedule, factor: f64) -> Schedule {
    Schedule {
        walks: s
            .walks
            .iter()
            .map(|w| TimedWalk {
                owner: w.owner,
                nodes: w.nodes.clone(),
                times: w.times.iter().map(|t| t / factor).collect(),
            })
            .collect(),
        assignments: s
            .assignments
            .iter()
            .map(|a| a.map(|a| Assignment { node: a.node, time: a.time / factor }))
            .collect(),
    }
}

pub fn solve_sum_mr(inst: &Instance, cfg: &SumMrConfig) -> Result<SolutionReport> {
    inst.validate()?;
    let (sc, factor) = scale_instance(inst)?;
    let grid = build_time_grid(&sc);
    let n = sc.n();
    let (pricer, extra, mu, omega): (Box<dyn Pricer>, Vec<Vec<PathClass>>, f64, f64) = match &cfg.mode {
        LpMode::Exact { node_cap } => {
            let mu = cfg.mu.unwrap_or(1.0);
            let p = ExactPricer::new(&sc, &grid, mu, *node_cap)?;
            let extra = p.classes.clone();
            (Box::new(p), extra, mu, cfg.omega.unwrap_or(1.0))
        }
        LpMode::Oracle(g) => {
            let solver = GeneralSolver { cfg: g.clone() };
            let f = solver.factors(n);
            let mu = cfg.mu.unwrap_or(f.sigma.max(2.0 * f.phi));
            (Box::new(NpcstPricer { solver }), Vec::new(), mu, cfg.omega.unwrap_or(f.omega))
        }
    };
    let lp_cfg = LpConfig {
        mu,
        omega,
        epsilon: cfg.lp_eps,
        max_rounds: cfg.max_rounds,
    };
    let (frac, lp_stats) = solve_sum_mr_lp(&sc, &grid, pricer.as_ref(), &lp_cfg)?;
    let out = run_sum_mra(&sc, &frac, &extra, &cfg.mra)?;
    let (perfect, ptrace) = to_perfect(&sc, &out.schedule, cfg.eps)?;
    let schedule = unscale(&perfect, factor);
    let ev = evaluate_perfect(inst, &schedule)?;
    let lp_objective = frac.objective / factor;
    Ok(SolutionReport {
        latencies: ev.latencies.clone(),
        total: ev.total,
        indirect_total: out.evaluation.total / factor,
        lp_objective,
        lp_stats,
        mu,
        omega,
        eps: cfg.eps,
        scale: factor,
        certificates: out.certificates,
        trace: out.trace,
        perfect: ptrace,
        ratio_to_lp: if lp_objective > 0.0 { ev.total / lp_objective } else { 1.0 },
        schedule,
    })
}
