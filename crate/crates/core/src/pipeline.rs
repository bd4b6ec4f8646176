//! The classification run: strongly square free genera under the determinant bounds, their
//! partial-dual orbits, and closure under Watson pre-images. Results are checkpointed to an
//! append-only JSON-lines log so long runs can resume.

use crate::arith::{factor, valuation, Rational, Surd};
use crate::bounds::{admissible_determinants, m_lower_sq, nref_upper, watson_primes, BoundError, DetShape};
use crate::classes::{
    explore_from, representative_cached, seed_for, sublattice_representative, ClassRecord, ExploreOptions,
};
use crate::lattice::GramLattice;
use crate::local::{dyadic_options, partial_dual_lattice, Constituent, GenusSymbol, LocalSymbol};
use crate::mass::{local_weight, mass, surd_le, weight_constant, MassError};
use crate::roots::is_reflective;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Mass(#[from] MassError),
    #[error("checkpoint log {path}: {source}")]
    Log { path: PathBuf, source: std::io::Error },
    #[error("checkpoint log {path} line {line}: {msg}")]
    BadLog { path: PathBuf, line: usize, msg: String },
    #[error("Watson closure exceeded the determinant cap {cap} at {symbol}")]
    DeterminantCap { cap: i128, symbol: String },
    #[error("dimension {0} not supported (3 or 4)")]
    BadDim(u32),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// One classified genus.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct GenusRecord {
    pub symbol: String,
    pub rank: u32,
    pub det: i128,
    pub classes: Vec<ClassRecord>,
    pub mass: String,
    pub m_ref: String,
}

impl GenusRecord {
    pub fn genus(&self) -> GenusSymbol {
        GenusSymbol::parse(&self.symbol, Some(self.rank)).expect("records hold valid symbols")
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Structured one-line form: symbol, det, h, mass, m_ref.
    pub fn line(&self) -> String {
        format!("{}\tdet={}\th={}\tmass={}\tm_ref={}", self.symbol, self.det, self.classes.len(), self.mass, self.m_ref)
    }
}

fn rat_text(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Why a genus could not be decided.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Incomplete {
    pub symbol: String,
    pub reason: String,
}

/// Outcome of the totally-reflective test for one genus.
#[derive(Clone, Debug)]
pub enum Verdict {
    TotallyReflective(GenusRecord),
    NotTotallyReflective,
    Undecided(Incomplete),
}

/// Bound checks recorded while visiting strongly square free genera.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct Audit {
    /// Genera whose exact mass was compared against `M(d)`.
    pub mass_checked: usize,
    /// Genera whose full class set was compared against `Nref(d)`.
    pub mref_checked: usize,
    pub violations: Vec<String>,
}

impl Audit {
    fn merge(&mut self, o: Audit) {
        self.mass_checked += o.mass_checked;
        self.mref_checked += o.mref_checked;
        self.violations.extend(o.violations);
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub dim: u32,
    pub jobs: usize,
    pub log: Option<PathBuf>,
    /// Only process determinants up to this value (for partial runs and tests).
    pub max_det: Option<u128>,
    pub explore: ExploreOptions,
    pub progress: bool,
}

impl PipelineOptions {
    pub fn new(dim: u32) -> Self {
        PipelineOptions { dim, jobs: 1, log: None, max_det: None, explore: ExploreOptions::default(), progress: false }
    }
}

/// Strongly square free symbols of the given determinant whose mass (rank 3) or mass lower
/// bound (rank 4) does not exceed `limit`. Symbols are assembled prime by prime; a branch is cut
/// as soon as its weight with the cheapest completion exceeds the limit.
pub fn ssf_candidates(dim: u32, det: u128, limit: &Rational) -> Vec<GenusSymbol> {
    let fac = factor(det);
    if fac.iter().any(|&(_, e)| e > dim / 2) {
        return Vec::new();
    }
    let ln = |s: &Surd| s.to_f64().ln();
    let mut odd: Vec<Vec<(LocalSymbol, Surd, f64)>> = Vec::new();
    for &(p, e) in fac.iter().filter(|&&(p, _)| p != 2) {
        let unit = (det / (p as u128).pow(e)) as i128;
        let need = crate::arith::kronecker(unit, p) as i8;
        let opts = [1i8, -1]
            .into_iter()
            .map(|s1| {
                let cons = vec![Constituent::odd_p(0, dim - e, s1 * need), Constituent::odd_p(1, e, s1)];
                let w = local_weight(dim, p, &cons);
                let l = ln(&w);
                (LocalSymbol { p, constituents: cons }, w, l)
            })
            .collect();
        odd.push(opts);
    }
    let e2 = fac.iter().find(|&&(p, _)| p == 2).map_or(0, |&(_, e)| e);
    let mut twos: Vec<(Vec<Constituent>, Surd, f64)> = Vec::new();
    for a in dyadic_options(0, dim - e2) {
        let cands: Vec<Vec<Constituent>> =
            if e2 == 0 { vec![vec![a]] } else { dyadic_options(1, e2).into_iter().map(|b| vec![a, b]).collect() };
        for c in cands {
            let w = local_weight(dim, 2, &c);
            let l = ln(&w);
            twos.push((c, w, l));
        }
    }
    let base = weight_constant(dim);
    let bound = crate::bounds::to_f64(limit).ln() + 1e-9;
    let min_two = twos.iter().map(|t| t.2).fold(f64::INFINITY, f64::min);
    // suffix sums of per-prime minima
    let mins: Vec<f64> = odd.iter().map(|o| o.iter().map(|x| x.2).fold(f64::INFINITY, f64::min)).collect();
    let mut rest = vec![0.0; odd.len() + 1];
    for i in (0..odd.len()).rev() {
        rest[i] = rest[i + 1] + mins[i];
    }
    let mut out = BTreeSet::new();
    let mut chosen: Vec<usize> = Vec::new();
    fn rec(
        i: usize,
        acc: f64,
        dim: u32,
        odd: &[Vec<(LocalSymbol, Surd, f64)>],
        twos: &[(Vec<Constituent>, Surd, f64)],
        rest: &[f64],
        min_two: f64,
        bound: f64,
        base: &Rational,
        limit: &Rational,
        chosen: &mut Vec<usize>,
        out: &mut BTreeSet<GenusSymbol>,
    ) {
        if acc + rest[i] + min_two > bound {
            return;
        }
        if i == odd.len() {
            for (two, w2, l2) in twos {
                if acc + l2 > bound {
                    continue;
                }
                let mut locals: Vec<LocalSymbol> = chosen.iter().zip(odd).map(|(&k, o)| o[k].0.clone()).collect();
                locals.push(LocalSymbol { p: 2, constituents: two.clone() });
                let Ok(g) = GenusSymbol::new(dim, locals) else { continue };
                let mut w = Surd::rational(base.clone()).mul(w2);
                for (&k, o) in chosen.iter().zip(odd) {
                    w = w.mul(&o[k].1);
                }
                if surd_le(&w, limit) {
                    out.insert(g);
                }
            }
            return;
        }
        for k in 0..odd[i].len() {
            chosen.push(k);
            rec(i + 1, acc + odd[i][k].2, dim, odd, twos, rest, min_two, bound, base, limit, chosen, out);
            chosen.pop();
        }
    }
    let start = crate::bounds::to_f64(&base).ln();
    rec(0, start, dim, &odd, &twos, &rest, min_two, bound, &base, limit, &mut chosen, &mut out);
    out.into_iter().collect()
}

/// Decides total reflectivity of a genus starting from a known lattice in it.
pub fn decide_from(start: &GramLattice, g: &GenusSymbol, explore: ExploreOptions) -> Result<Verdict, MassError> {
    let m = mass(g)?.0;
    if !is_reflective(start) {
        return Ok(Verdict::NotTotallyReflective);
    }
    let opts = ExploreOptions { stop_on_nonreflective: true, ..explore };
    match explore_from(start, &m, opts) {
        Ok(set) if set.stopped_early => Ok(Verdict::NotTotallyReflective),
        Ok(set) if set.certified => Ok(Verdict::TotallyReflective(GenusRecord {
            symbol: g.to_string(),
            rank: g.rank(),
            det: g.det(),
            m_ref: rat_text(&set.class_sum()),
            mass: rat_text(&m),
            classes: set.classes,
        })),
        Ok(set) => Ok(Verdict::Undecided(Incomplete {
            symbol: g.to_string(),
            reason: format!("neighbor exploration stalled at {} classes", set.classes.len()),
        })),
        Err(e) => Ok(Verdict::Undecided(Incomplete { symbol: g.to_string(), reason: e.to_string() })),
    }
}

/// Decides total reflectivity of a genus, building a representative by random search.
pub fn decide(g: &GenusSymbol, explore: ExploreOptions) -> Result<Verdict, MassError> {
    decide_cached(g, explore, &mut HashMap::new())
}

fn decide_cached(
    g: &GenusSymbol,
    explore: ExploreOptions,
    cache: &mut HashMap<String, GramLattice>,
) -> Result<Verdict, MassError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(g));
    match representative_cached(g, &mut rng, 20_000, cache) {
        Ok(l) => decide_from(&l, g, explore),
        Err(e) => Ok(Verdict::Undecided(Incomplete { symbol: g.to_string(), reason: e.to_string() })),
    }
}

/// Result of processing one determinant in the strongly square free stage.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct DetOutcome {
    pub det: u128,
    pub candidates: usize,
    pub genera: Vec<GenusRecord>,
    pub incomplete: Vec<Incomplete>,
    pub audit: Audit,
}

pub fn process_determinant(dim: u32, det: u128, explore: ExploreOptions) -> Result<DetOutcome, PipelineError> {
    let shape = DetShape::from_det(det);
    let nref = nref_upper(&shape, dim, false)?;
    let m_sq = m_lower_sq(&shape, dim)?;
    let mut out = DetOutcome { det, ..Default::default() };
    let cands = ssf_candidates(dim, det, &nref);
    out.candidates = cands.len();
    let mut cache = HashMap::new();
    for g in cands {
        let m = mass(&g)?.0;
        out.audit.mass_checked += 1;
        if &m * &m < m_sq {
            out.audit.violations.push(format!("{g}: mass {} below M(d)", rat_text(&m)));
        }
        if m > nref {
            continue;
        }
        match decide_cached(&g, explore, &mut cache)? {
            Verdict::TotallyReflective(rec) => {
                out.audit.mref_checked += 1;
                let m_ref: Rational = rec.m_ref.parse().expect("written by us");
                if m_ref > nref {
                    out.audit.violations.push(format!("{g}: m_ref {} above Nref {}", rec.m_ref, rat_text(&nref)));
                }
                out.genera.push(rec);
            }
            Verdict::NotTotallyReflective => {}
            Verdict::Undecided(inc) => out.incomplete.push(inc),
        }
    }
    Ok(out)
}

/// A checkpoint log line.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogEntry {
    Det { dim: u32, outcome: DetOutcome },
    Watson { dim: u32, symbol: String, added: Vec<GenusRecord>, incomplete: Vec<Incomplete> },
}

struct Checkpoint {
    path: Option<PathBuf>,
    file: Option<File>,
}

impl Checkpoint {
    fn open(path: Option<&Path>) -> Result<(Self, Vec<LogEntry>), PipelineError> {
        let Some(path) = path else {
            return Ok((Checkpoint { path: None, file: None }, Vec::new()));
        };
        let err = |source| PipelineError::Log { path: path.to_path_buf(), source };
        let mut entries = Vec::new();
        if path.exists() {
            let f = File::open(path).map_err(err)?;
            for (i, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(err)?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str(&line) {
                    Ok(e) => entries.push(e),
                    // a torn final line from an interrupted run is dropped
                    Err(e) if e.is_eof() => break,
                    Err(e) => {
                        return Err(PipelineError::BadLog { path: path.to_path_buf(), line: i + 1, msg: e.to_string() })
                    }
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(err)?;
        Ok((Checkpoint { path: Some(path.to_path_buf()), file: Some(file) }, entries))
    }

    fn write(&mut self, e: &LogEntry) -> Result<(), PipelineError> {
        if let (Some(f), Some(p)) = (self.file.as_mut(), self.path.as_ref()) {
            let line = serde_json::to_string(e).expect("serializable");
            writeln!(f, "{line}").and_then(|_| f.flush()).map_err(|source| PipelineError::Log { path: p.clone(), source })?;
        }
        Ok(())
    }
}

/// Output of the strongly square free stage.
#[derive(Clone, Debug, Default)]
pub struct SsfStage {
    pub genera: Vec<GenusRecord>,
    pub incomplete: Vec<Incomplete>,
    pub audit: Audit,
    pub determinants: usize,
    pub candidates: usize,
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| PipelineError::Pool(e.to_string()))
}

fn check_dim(dim: u32) -> Result<(), PipelineError> {
    if dim == 3 || dim == 4 {
        Ok(())
    } else {
        Err(PipelineError::BadDim(dim))
    }
}

/// All strongly square free totally reflective genera of the dimension.
pub fn enumerate_ssf(opts: &PipelineOptions) -> Result<SsfStage, PipelineError> {
    check_dim(opts.dim)?;
    let (mut log, entries) = Checkpoint::open(opts.log.as_deref())?;
    let mut done: BTreeMap<u128, DetOutcome> = BTreeMap::new();
    for e in entries {
        if let LogEntry::Det { dim, outcome } = e {
            if dim == opts.dim {
                done.insert(outcome.det, outcome);
            }
        }
    }
    let dets: Vec<u128> = admissible_determinants(opts.dim)?
        .into_iter()
        .filter(|d| opts.max_det.is_none_or(|m| *d <= m))
        .collect();
    let todo: Vec<u128> = dets.iter().copied().filter(|d| !done.contains_key(d)).collect();
    let pool = pool(opts.jobs)?;
    let total = todo.len();
    for (ci, chunk) in todo.chunks(64).enumerate() {
        let results: Vec<Result<DetOutcome, PipelineError>> =
            pool.install(|| chunk.par_iter().map(|&d| process_determinant(opts.dim, d, opts.explore)).collect());
        for r in results {
            let outcome = r?;
            log.write(&LogEntry::Det { dim: opts.dim, outcome: outcome.clone() })?;
            done.insert(outcome.det, outcome);
        }
        if opts.progress {
            eprintln!("ssf: {}/{} determinants", (ci * 64 + chunk.len()).min(total), total);
        }
    }
    let mut stage = SsfStage { determinants: dets.len(), ..Default::default() };
    for d in &dets {
        let o = &done[d];
        stage.candidates += o.candidates;
        stage.genera.extend(o.genera.iter().cloned());
        stage.incomplete.extend(o.incomplete.iter().cloned());
        stage.audit.merge(o.audit.clone());
    }
    sort_records(&mut stage.genera);
    Ok(stage)
}

fn sort_records(v: &mut [GenusRecord]) {
    v.sort_by_cached_key(|r| r.genus());
}

/// Applies `D_p` to a classified genus, carrying the class set along.
pub fn dual_record(rec: &GenusRecord, p: u64) -> GenusRecord {
    let g = rec.genus().partial_dual(p).expect("partial duals of genera exist");
    let classes: Vec<ClassRecord> = rec
        .classes
        .iter()
        .map(|c| {
            let gram = crate::classes::reduce(&partial_dual_lattice(&c.gram, p).expect("integral partial dual"));
            ClassRecord { gram, aut_order: c.aut_order, reflective: c.reflective }
        })
        .collect();
    GenusRecord {
        symbol: g.to_string(),
        rank: g.rank(),
        det: g.det(),
        classes,
        mass: rec.mass.clone(),
        m_ref: rec.m_ref.clone(),
    }
}

/// Orbit closure under partial duals at the primes of the determinant; primitive genera only.
pub fn expand_partial_duals(ssf: &[GenusRecord]) -> Vec<GenusRecord> {
    let mut seen: BTreeMap<GenusSymbol, GenusRecord> = BTreeMap::new();
    let mut stack: Vec<GenusRecord> = ssf.to_vec();
    while let Some(rec) = stack.pop() {
        let g = rec.genus();
        if seen.contains_key(&g) {
            continue;
        }
        for p in g.primes() {
            if g.local(p).max_scale() == 0 {
                continue;
            }
            let d = dual_record(&rec, p);
            if !seen.contains_key(&d.genus()) {
                stack.push(d);
            }
        }
        seen.insert(g, rec);
    }
    seen.into_values().filter(|r| r.genus().is_primitive()).collect()
}

/// Output of the Watson closure.
#[derive(Clone, Debug, Default)]
pub struct ClosureStage {
    pub genera: Vec<GenusRecord>,
    pub incomplete: Vec<Incomplete>,
}

/// Upper limit on determinants reached by the closure; exceeding it means non-termination.
pub const DETERMINANT_CAP: i128 = 1 << 60;

/// Candidate primes for pre-images of `g`: the primes of `2 det` and the odd primes up to the cutoff.
pub fn preimage_primes(rec: &GenusRecord, dim: u32) -> Result<Vec<u64>, PipelineError> {
    let g = rec.genus();
    let m: Rational = rec.mass.parse().expect("written by us");
    let nref = nref_upper(&DetShape::from_det(g.det() as u128), dim, true)?;
    let mut ps: BTreeSet<u64> = g.primes().into_iter().collect();
    ps.insert(2);
    ps.extend(watson_primes(&nref, &m, dim, g.det()));
    Ok(ps.into_iter().collect())
}

/// Decides a Watson pre-image `k` of the classified genus `base` at `p`.
fn decide_preimage(k: &GenusSymbol, base: &GenusRecord, p: u64, explore: ExploreOptions) -> Result<Verdict, PipelineError> {
    let m = mass(k)?.0;
    let nref = nref_upper(&DetShape::from_det(k.det() as u128), k.rank(), true)?;
    if m > nref {
        return Ok(Verdict::NotTotallyReflective);
    }
    let (v_k, _) = valuation(k.det(), p);
    let (v_l, _) = valuation(base.det, p);
    let idx = ((v_k - v_l) / 2) as usize;
    let supers: Vec<GramLattice> = base.classes.iter().map(|c| c.gram.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(k));
    if let Some(l) = sublattice_representative(k, &supers, p, idx, &mut rng, 20_000) {
        return Ok(decide_from(&l, k, explore)?);
    }
    Ok(decide(k, explore)?)
}

/// Closes a set of totally reflective genera under totally reflective Watson pre-images.
pub fn close_under_watson_preimages(sf: &[GenusRecord], opts: &PipelineOptions) -> Result<ClosureStage, PipelineError> {
    let dim = opts.dim;
    let (mut log, entries) = Checkpoint::open(opts.log.as_deref())?;
    let mut known: BTreeMap<GenusSymbol, GenusRecord> = sf.iter().map(|r| (r.genus(), r.clone())).collect();
    let mut processed: HashSet<String> = HashSet::new();
    let mut incomplete = Vec::new();
    for e in entries {
        if let LogEntry::Watson { dim: d, symbol, added, incomplete: inc } = e {
            if d == dim {
                processed.insert(symbol);
                for r in added {
                    known.entry(r.genus()).or_insert(r);
                }
                incomplete.extend(inc);
            }
        }
    }
    let mut rejected: HashSet<GenusSymbol> = HashSet::new();
    loop {
        let pending: Vec<GenusRecord> =
            known.values().filter(|r| !processed.contains(&r.genus().key().to_string())).cloned().collect();
        if pending.is_empty() {
            break;
        }
        for rec in pending {
            let g = rec.genus();
            let mut added = Vec::new();
            let mut inc = Vec::new();
            for p in preimage_primes(&rec, dim)? {
                for k in g.watson_preimages(p) {
                    if known.contains_key(&k) || rejected.contains(&k) || !k.is_primitive() {
                        continue;
                    }
                    match decide_preimage(&k, &rec, p, opts.explore)? {
                        Verdict::TotallyReflective(_) if k.det().abs() > DETERMINANT_CAP => {
                            return Err(PipelineError::DeterminantCap { cap: DETERMINANT_CAP, symbol: k.to_string() });
                        }
                        Verdict::TotallyReflective(r) => {
                            known.insert(k, r.clone());
                            added.push(r);
                        }
                        Verdict::NotTotallyReflective => {
                            rejected.insert(k);
                        }
                        Verdict::Undecided(i) => {
                            rejected.insert(k);
                            inc.push(i);
                        }
                    }
                }
            }
            processed.insert(g.key().to_string());
            if opts.progress && !added.is_empty() {
                eprintln!("watson: {} gave {} new genera ({} known)", rec.symbol, added.len(), known.len());
            }
            log.write(&LogEntry::Watson { dim, symbol: g.key().to_string(), added, incomplete: inc.clone() })?;
            incomplete.extend(inc);
        }
    }
    Ok(ClosureStage { genera: known.into_values().collect(), incomplete })
}

/// Extremes of the strongly square free list: largest `(r, s)` and largest primes.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct Extremes {
    pub shapes: Vec<(usize, usize)>,
    pub max_squared_prime: Option<u64>,
    pub max_simple_prime: Option<u64>,
}

pub fn extremes(list: &[GenusRecord]) -> Extremes {
    let mut shapes: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut ex = Extremes::default();
    for r in list {
        let s = DetShape::from_det(r.det as u128);
        shapes.insert((s.r(), s.s()));
        ex.max_squared_prime = ex.max_squared_prime.max(s.squared().into_iter().max());
        ex.max_simple_prime = ex.max_simple_prime.max(s.simple().into_iter().max());
    }
    // keep only the maximal shapes under the componentwise order
    let all: Vec<_> = shapes.iter().copied().collect();
    ex.shapes = all
        .iter()
        .copied()
        .filter(|&(r, s)| !all.iter().any(|&(r2, s2)| (r2, s2) != (r, s) && r2 >= r && s2 >= s))
        .collect();
    ex
}

#[derive(Clone, Debug, Default)]
pub struct ClassificationReport {
    pub dim: u32,
    pub ssf: Vec<GenusRecord>,
    pub sf: Vec<GenusRecord>,
    pub all: Vec<GenusRecord>,
    pub incomplete: Vec<Incomplete>,
    pub audit: Audit,
    pub extremes: Extremes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Ssf,
    Sf,
    All,
}

pub fn run(opts: &PipelineOptions, stage: Stage) -> Result<ClassificationReport, PipelineError> {
    let ssf = enumerate_ssf(opts)?;
    let mut rep = ClassificationReport {
        dim: opts.dim,
        extremes: extremes(&ssf.genera),
        incomplete: ssf.incomplete.clone(),
        audit: ssf.audit.clone(),
        ssf: ssf.genera,
        ..Default::default()
    };
    if stage == Stage::Ssf {
        return Ok(rep);
    }
    rep.sf = expand_partial_duals(&rep.ssf);
    sort_records(&mut rep.sf);
    if stage == Stage::Sf {
        return Ok(rep);
    }
    let closure = close_under_watson_preimages(&rep.sf, opts)?;
    rep.all = closure.genera;
    sort_records(&mut rep.all);
    rep.incomplete.extend(closure.incomplete);
    Ok(rep)
}

impl ClassificationReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "dimension {}: {} genera, {} square free, {} strongly square free",
            self.dim,
            self.all.len(),
            self.sf.len(),
            self.ssf.len()
        );
        if !self.incomplete.is_empty() {
            s.push_str(&format!(" (INCOMPLETE: {} undecided genera)", self.incomplete.len()));
        }
        s
    }

    /// Sum of `1/|O|` over all classes of all listed genera; useful as a fingerprint.
    pub fn total_mass(&self) -> Rational {
        self.all.iter().map(|r| r.mass.parse::<Rational>().expect("written by us")).fold(Rational::zero(), |a, b| a + b)
    }

    pub fn is_complete(&self) -> bool {
        self.incomplete.is_empty()
    }
}

/// Exact check that every record's class masses add up to its mass and all classes are reflective.
pub fn verify_record(rec: &GenusRecord) -> bool {
    let sum: Rational =
        rec.classes.iter().map(|c| Rational::new(1.into(), c.aut_order.into())).fold(Rational::zero(), |a, b| a + b);
    let m: Rational = rec.mass.parse().expect("written by us");
    sum == m && rec.classes.iter().all(|c| c.reflective)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidates_respect_limit() {
        let limit = nref_upper(&DetShape::from_det(30), 3, false).unwrap();
        let c = ssf_candidates(3, 30, &limit);
        assert!(!c.is_empty());
        let all = crate::local::ssf_symbols(3, 30);
        for g in &all {
            let keep = mass(g).unwrap().0 <= limit;
            assert_eq!(c.contains(g), keep, "{g}");
        }
    }

    #[test]
    fn unit_determinant_dim3() {
        let out = process_determinant(3, 1, ExploreOptions::default()).unwrap();
        assert_eq!(out.genera.len(), 1);
        assert_eq!(out.genera[0].symbol, "I(1_3^{+3})");
        assert_eq!(out.genera[0].mass, "1/48");
        assert!(out.audit.violations.is_empty());
    }

    #[test]
    fn duals_preserve_masses() {
        let out = process_determinant(3, 6, ExploreOptions::default()).unwrap();
        assert!(!out.genera.is_empty());
        let sf = expand_partial_duals(&out.genera);
        assert!(sf.len() >= out.genera.len());
        for r in &sf {
            assert!(verify_record(r), "{}", r.symbol);
            assert_eq!(mass(&r.genus()).unwrap().0, r.mass.parse::<Rational>().unwrap());
            for c in &r.classes {
                assert_eq!(GenusSymbol::from_lattice(&c.gram), r.genus());
            }
        }
    }

    #[test]
    fn extremes_keep_maximal_shapes() {
        let rec = |det: i128| GenusRecord {
            symbol: String::new(),
            rank: 4,
            det,
            classes: vec![],
            mass: "1/1".into(),
            m_ref: "1/1".into(),
        };
        let e = extremes(&[rec(9 * 5), rec(3 * 5 * 7), rec(9 * 25 * 7)]);
        assert_eq!(e.shapes, vec![(0, 3), (2, 1)]);
        assert_eq!(e.max_squared_prime, Some(5));
        assert_eq!(e.max_simple_prime, Some(7));
    }
}
