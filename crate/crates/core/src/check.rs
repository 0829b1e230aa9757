//! Differential suite: symbolic operations against the finite oracle on
//! seeded random presentations.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite::truncate;
use crate::format::{parse, serialize};
use crate::isoembed::{embed, EmbedOutcome, SearchConfig};
use crate::normal::{canonical_code, iso_tuples, normalize};
use crate::oracle::{finite_iso, instantiate_witness, random_presentation, Limits};
use crate::presentation::{GraphTuple, Multiplicity, Name, Presentation};
use crate::rank::{is_connected_tuple, kernel, rank, rank_after_deleting, separates_below};
use crate::witness::{EmbeddingWitness, Mode};

/// Largest truncation tried before a negative comparison is recorded as a
/// truncation collision.
pub const ESCALATION_CAP: usize = 6;

#[derive(Debug, Clone, Default, Serialize)]
pub struct Tally {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CheckReport {
    pub seeds: usize,
    pub checks: BTreeMap<String, Tally>,
    pub violations: Vec<String>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn merge(&mut self, other: CheckReport) {
        self.seeds += other.seeds;
        for (k, t) in other.checks {
            let e = self.checks.entry(k).or_default();
            e.passed += t.passed;
            e.failed += t.failed;
            e.skipped += t.skipped;
        }
        self.violations.extend(other.violations);
        self.notes.extend(other.notes);
    }
}

enum Verdict {
    Pass,
    Fail(String),
    Skip(String),
}

struct Run<'a> {
    seed: u64,
    report: &'a mut CheckReport,
}

impl Run<'_> {
    fn record(&mut self, name: &str, verdict: Result<Verdict>) {
        let tally = self.report.checks.entry(name.to_string()).or_default();
        match verdict {
            Ok(Verdict::Pass) => tally.passed += 1,
            Ok(Verdict::Skip(why)) | Err(Error::OracleCap(why)) => {
                tally.skipped += 1;
                self.report.notes.push(format!("seed {}: {name} skipped: {why}", self.seed));
            }
            Ok(Verdict::Fail(why)) => {
                tally.failed += 1;
                self.report.violations.push(format!("seed {}: {name}: {why}", self.seed));
            }
            Err(e) => {
                tally.failed += 1;
                self.report.violations.push(format!("seed {}: {name}: error {e}", self.seed));
            }
        }
    }
}

/// Renames every vertex and reverses the order of classes at every level.
pub fn scramble(t: &GraphTuple, seed: u64) -> GraphTuple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut names = HashSet::new();
    t.pres.all_names(&mut names);
    let mut names: Vec<Name> = names.into_iter().collect();
    names.sort();
    let mut fresh: Vec<usize> = (0..names.len()).collect();
    fresh.shuffle(&mut rng);
    let map: BTreeMap<Name, Name> = names
        .iter()
        .zip(fresh)
        .map(|(n, i)| (n.clone(), format!("r{i}")))
        .collect();
    fn reverse(p: &mut Presentation) {
        p.classes.reverse();
        for c in &mut p.classes {
            reverse(&mut c.child);
        }
    }
    let mut pres = t.pres.renamed(&map);
    reverse(&mut pres);
    GraphTuple {
        x: t.x.iter().map(|v| map[v].clone()).collect(),
        pres,
    }
}

fn transfer(w: &EmbeddingWitness, g: &Presentation, h: &Presentation) -> Result<Verdict> {
    for n in [3, 5, 10] {
        let n = n.max(w.exceptions_needed(g));
        let inst = instantiate_witness(w, g, h, n)?;
        if let Err(e) = inst.check(w.mode == Mode::Strong) {
            return Ok(Verdict::Fail(format!("n={n}: {e}")));
        }
    }
    Ok(Verdict::Pass)
}

fn round_trip(t: &GraphTuple) -> Result<Verdict> {
    let back = parse(&serialize(t))?;
    Ok(if &back == t { Verdict::Pass } else { Verdict::Fail("parse(serialize(t)) differs".into()) })
}

fn normal_form(t: &GraphTuple) -> Result<Verdict> {
    let nf = normalize(t)?;
    if canonical_code(&nf)? != canonical_code(t)? {
        return Ok(Verdict::Fail("normal form changes the canonical code".into()));
    }
    if iso_tuples(t, &nf)?.is_none() {
        return Ok(Verdict::Fail("normal form is not isomorphic".into()));
    }
    if normalize(&nf)? != nf {
        return Ok(Verdict::Fail("normal form is not idempotent".into()));
    }
    Ok(Verdict::Pass)
}

fn iso_agrees(t: &GraphTuple, u: &GraphTuple, truncs: &[usize]) -> Result<Verdict> {
    let symbolic = iso_tuples(t, u)?;
    let same_code = canonical_code(t)? == canonical_code(u)?;
    if symbolic.is_some() != same_code {
        return Ok(Verdict::Fail("canonical codes disagree with the isomorphism test".into()));
    }
    match symbolic {
        Some((ng, nh, _)) => {
            let mut tested = 0;
            for n in std::iter::once(1).chain(truncs.iter().copied()) {
                let (a, b) = (truncate(&ng.pres, n)?, truncate(&nh.pres, n)?);
                if a.len().max(b.len()) > crate::oracle::ORACLE_CAP {
                    continue;
                }
                tested += 1;
                if finite_iso(&a, &b)?.is_none() {
                    return Ok(Verdict::Fail(format!("isomorphic but truncations at {n} differ")));
                }
            }
            Ok(if tested > 0 { Verdict::Pass } else { Verdict::Skip("every truncation exceeds the oracle cap".into()) })
        }
        None => {
            let (ng, nh) = (normalize(t)?, normalize(u)?);
            if ng.x.len() != nh.x.len() {
                return Ok(Verdict::Pass);
            }
            let mut sizes: Vec<usize> = truncs.to_vec();
            sizes.extend((truncs.iter().copied().max().unwrap_or(1) + 1)..=ESCALATION_CAP);
            for n in sizes {
                let (a, b) = (truncate(&ng.pres, n)?, truncate(&nh.pres, n)?);
                if a.len().max(b.len()) > crate::oracle::ORACLE_CAP {
                    break;
                }
                if finite_iso(&a, &b)?.is_none() {
                    return Ok(Verdict::Pass);
                }
            }
            Ok(Verdict::Skip("truncation collision: small truncations are isomorphic".into()))
        }
    }
}

fn kernel_minimal(t: &GraphTuple) -> Result<Verdict> {
    let r = rank(&t.pres);
    let k = kernel(&t.pres)?;
    if r == 0 {
        return Ok(if k.locations.is_empty() { Verdict::Pass } else { Verdict::Fail("finite graph with a kernel".into()) });
    }
    if !separates_below(&t.pres, &k.locations, r)? {
        return Ok(Verdict::Fail("kernel leaves a piece of full rank".into()));
    }
    for v in &k.locations {
        let mut smaller = k.locations.clone();
        smaller.remove(v);
        if separates_below(&t.pres, &smaller, r)? {
            return Ok(Verdict::Fail(format!("kernel without {v} still separates")));
        }
    }
    let whole = GraphTuple::graph(t.pres.clone());
    if is_connected_tuple(&whole)? && t.pres.cardinality().is_omega() && k.locations.is_empty() {
        return Ok(Verdict::Fail("connected infinite graph with empty kernel".into()));
    }
    Ok(Verdict::Pass)
}

fn deletion_invariance(t: &GraphTuple, rng: &mut ChaCha8Rng) -> Result<Verdict> {
    let g = truncate(&t.pres, 2)?;
    let mut locs: Vec<_> = g.vertices().to_vec();
    locs.shuffle(rng);
    let take = rng.gen_range(0..=locs.len().min(3));
    let set: BTreeSet<_> = locs.into_iter().take(take).collect();
    let before = rank(&t.pres);
    let after = rank_after_deleting(&t.pres, &set)?;
    Ok(if before == after {
        Verdict::Pass
    } else {
        Verdict::Fail(format!("rank {before} becomes {after} after deleting {} vertices", set.len()))
    })
}

fn witnesses(t: &GraphTuple, u: &GraphTuple, seed: u64) -> Result<Verdict> {
    let id = EmbeddingWitness::identity(&t.pres, Mode::Strong);
    if let Verdict::Fail(e) = transfer(&id, &t.pres, &t.pres)? {
        return Ok(Verdict::Fail(format!("identity: {e}")));
    }
    let Some((ng, nh, iso)) = iso_tuples(t, u)? else {
        return Ok(Verdict::Fail("scrambled copy not isomorphic".into()));
    };
    let w = EmbeddingWitness::from_iso(&ng.pres, &iso, Mode::Strong);
    if let Verdict::Fail(e) = transfer(&w, &ng.pres, &nh.pres)? {
        return Ok(Verdict::Fail(format!("isomorphism: {e}")));
    }
    if t.pres.classes.is_empty() {
        return Ok(Verdict::Pass);
    }
    let class = (seed as usize) % t.pres.classes.len();
    let bigger = GraphTuple {
        x: t.x.clone(),
        pres: t.pres.add_class_copies(&[class], Multiplicity::Finite(1))?,
    };
    let mode = if seed % 2 == 0 { Mode::Strong } else { Mode::Weak };
    match embed(t, &bigger, mode, SearchConfig { budget: 20_000 })? {
        EmbedOutcome::Found(e) => {
            if let Verdict::Fail(msg) = transfer(&e.witness, &e.source.pres, &e.target.pres)? {
                return Ok(Verdict::Fail(format!("embedding: {msg}")));
            }
            Ok(Verdict::Pass)
        }
        EmbedOutcome::None(why) => Ok(Verdict::Fail(format!("no embedding into a supergraph: {why}"))),
        EmbedOutcome::Unknown(_) => Ok(Verdict::Pass),
    }
}

/// Runs every check on one seed.
pub fn check_seed(seed: u64, truncs: &[usize]) -> CheckReport {
    let mut report = CheckReport {
        seeds: 1,
        ..CheckReport::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = random_presentation(seed, Limits::default());
    let other = random_presentation(seed.wrapping_add(1 << 32), Limits::default());
    let u = scramble(&t, seed);
    let mut run = Run {
        seed,
        report: &mut report,
    };
    run.record("validate", t.validate().map(|_| Verdict::Pass));
    run.record("round-trip", round_trip(&t));
    run.record("normal-form", normal_form(&t));
    run.record("iso-scrambled", iso_agrees(&t, &u, truncs));
    run.record("iso-random-pair", iso_agrees(&t, &other, truncs));
    run.record("kernel-minimal", kernel_minimal(&t));
    run.record("deletion-invariance", deletion_invariance(&t, &mut rng));
    run.record("witness-transfer", witnesses(&t, &u, seed));
    report
}

/// Runs the suite over `seeds` in parallel.
pub fn run_suite(seeds: std::ops::Range<u64>, truncs: &[usize]) -> CheckReport {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(16);
    let all: Vec<u64> = seeds.collect();
    let chunk = all.len().div_ceil(threads).max(1);
    let parts: Vec<CheckReport> = std::thread::scope(|s| {
        let handles: Vec<_> = all
            .chunks(chunk)
            .map(|c| {
                s.spawn(move || {
                    let mut r = CheckReport::default();
                    for &seed in c {
                        r.merge(check_seed(seed, truncs));
                    }
                    r
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut report = CheckReport::default();
    for p in parts {
        report.merge(p);
    }
    report
}
