//! Finitely generated Fuchsian groups, approximated by balls in the word metric.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hyperplane::{hyp_distance, mobius_apply, HPoint};
use crate::psl2core::{
    classify, diagonalize_hyperbolic, ref_distance, Classification, Psl2Error, PslElement,
    ToleranceConfig,
};

/// Hard cap on the size of an enumerated ball.
pub const WORD_BUDGET: usize = 2_000_000;

/// Relative tolerance for declared relations and for merging equal words.
pub const RELATION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FuchsianError {
    #[error("generator {index} is {class:?}, not hyperbolic")]
    GeneratorNotHyperbolic { index: usize, class: Classification },
    #[error("relation {index} has residual {residual:e}")]
    RelationFails { index: usize, residual: f64 },
    #[error("letter {0} does not name a generator")]
    BadLetter(i32),
    #[error("a ball of radius {max_len} holds {count} words, above the budget {budget}")]
    BudgetExceeded { max_len: usize, count: u128, budget: usize },
    #[error("the trivial word has no periodic orbit")]
    TrivialWord,
    #[error("group has no generators")]
    Empty,
    #[error(transparent)]
    Psl2(#[from] Psl2Error),
    #[error("malformed group file: {0}")]
    Json(#[from] serde_json::Error),
}

/// On-disk form of a group.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupFile {
    pub name: String,
    pub generators: Vec<[f64; 4]>,
    #[serde(default)]
    pub relations: Vec<Vec<i32>>,
    #[serde(default = "default_max_len")]
    pub max_word_len: usize,
}

fn default_max_len() -> usize {
    8
}

/// A Fuchsian group given by generators, immutable after construction.
///
/// Balls of words are cached per radius behind a lock, so a shared
/// `Arc<GroupPresentation>` can serve concurrent readers.
pub struct GroupPresentation {
    pub name: String,
    pub generators: Vec<PslElement>,
    inverses: Vec<PslElement>,
    pub relations: Vec<Vec<i32>>,
    pub max_word_len: usize,
    pub tolerances: ToleranceConfig,
    balls: RwLock<BTreeMap<usize, Arc<Vec<Word>>>>,
}

impl fmt::Debug for GroupPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupPresentation")
            .field("name", &self.name)
            .field("generators", &self.generators.len())
            .field("max_word_len", &self.max_word_len)
            .finish()
    }
}

impl GroupPresentation {
    pub fn new(
        name: impl Into<String>,
        generators: Vec<PslElement>,
        relations: Vec<Vec<i32>>,
        max_word_len: usize,
        tolerances: ToleranceConfig,
    ) -> Result<Self, FuchsianError> {
        if generators.is_empty() {
            return Err(FuchsianError::Empty);
        }
        for (index, g) in generators.iter().enumerate() {
            let class = classify(g, &tolerances);
            if class != Classification::Hyperbolic {
                return Err(FuchsianError::GeneratorNotHyperbolic { index, class });
            }
        }
        let inverses = generators.iter().map(PslElement::inverse).collect();
        let group = GroupPresentation {
            name: name.into(),
            generators,
            inverses,
            relations,
            max_word_len,
            tolerances,
            balls: RwLock::new(BTreeMap::new()),
        };
        for (index, rel) in group.relations.iter().enumerate() {
            let residual = group.relation_residual(rel)?;
            if residual >= RELATION_TOL {
                return Err(FuchsianError::RelationFails { index, residual });
            }
        }
        Ok(group)
    }

    /// `⟨γ⟩`, useful as a small test group. Not cocompact.
    pub fn cyclic(name: impl Into<String>, gamma: PslElement) -> Result<Self, FuchsianError> {
        Self::new(name, vec![gamma], vec![], 8, ToleranceConfig::default())
    }

    pub fn from_file(file: GroupFile, tolerances: ToleranceConfig) -> Result<Self, FuchsianError> {
        let mut gens = Vec::with_capacity(file.generators.len());
        for g in &file.generators {
            gens.push(PslElement::from_mat((*g).into(), &tolerances)?);
        }
        Self::new(file.name, gens, file.relations, file.max_word_len, tolerances)
    }

    pub fn from_json_str(s: &str, tolerances: ToleranceConfig) -> Result<Self, FuchsianError> {
        Self::from_file(serde_json::from_str(s)?, tolerances)
    }

    pub fn to_file(&self) -> GroupFile {
        GroupFile {
            name: self.name.clone(),
            generators: self.generators.iter().map(|g| (*g).into()).collect(),
            relations: self.relations.clone(),
            max_word_len: self.max_word_len,
        }
    }

    /// Same generators with different tolerances. The ball cache is not shared.
    pub fn with_tolerances(&self, tolerances: ToleranceConfig) -> Result<Self, FuchsianError> {
        Self::new(
            self.name.clone(),
            self.generators.clone(),
            self.relations.clone(),
            self.max_word_len,
            tolerances,
        )
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    /// Matrix of a single signed letter.
    pub fn letter(&self, l: i32) -> Result<PslElement, FuchsianError> {
        let k = l.unsigned_abs() as usize;
        if l == 0 || k > self.generators.len() {
            return Err(FuchsianError::BadLetter(l));
        }
        Ok(if l > 0 { self.generators[k - 1] } else { self.inverses[k - 1] })
    }

    pub fn evaluate(&self, letters: &[i32]) -> Result<PslElement, FuchsianError> {
        let mut acc = PslElement::IDENTITY;
        for &l in letters {
            acc = acc * self.letter(l)?;
        }
        Ok(acc)
    }

    /// Relative distance of a relator from the identity.
    pub fn relation_residual(&self, letters: &[i32]) -> Result<f64, FuchsianError> {
        Ok(self.evaluate(letters)?.rel_residual(&PslElement::IDENTITY))
    }

    /// Number of freely reduced words of length ≤ `max_len`.
    pub fn ball_count(&self, max_len: usize) -> u128 {
        let n = 2 * self.rank() as u128;
        let mut total = 1u128;
        let mut layer = 1u128;
        for k in 0..max_len {
            layer *= if k == 0 { n } else { n - 1 };
            total += layer;
            if total > u64::MAX as u128 {
                break;
            }
        }
        total
    }

    /// The ball of radius `max_len`, cached.
    pub fn ball(&self, max_len: usize) -> Result<Arc<Vec<Word>>, FuchsianError> {
        if let Some(b) = self.balls.read().unwrap().get(&max_len) {
            return Ok(b.clone());
        }
        let words = Arc::new(enumerate_words(self, max_len)?);
        self.balls.write().unwrap().insert(max_len, words.clone());
        Ok(words)
    }

    /// The ball of the group's own radius.
    pub fn default_ball(&self) -> Result<Arc<Vec<Word>>, FuchsianError> {
        self.ball(self.max_word_len)
    }
}

/// A freely reduced word in the generators together with its value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Word {
    pub letters: Vec<i32>,
    pub element: PslElement,
}

fn free_reduce(letters: &[i32]) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::with_capacity(letters.len());
    for &l in letters {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

impl Word {
    pub fn identity() -> Self {
        Word { letters: vec![], element: PslElement::IDENTITY }
    }

    /// Freely reduces `letters` and evaluates the product.
    pub fn from_letters(group: &GroupPresentation, letters: &[i32]) -> Result<Self, FuchsianError> {
        let letters = free_reduce(letters);
        let element = group.evaluate(&letters)?;
        Ok(Word { letters, element })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|l| -l).collect(),
            element: self.element.inverse(),
        }
    }

    /// Reduced product; the value is recomputed from the letters.
    pub fn concat(&self, group: &GroupPresentation, other: &Word) -> Word {
        let mut all = self.letters.clone();
        all.extend_from_slice(&other.letters);
        Word::from_letters(group, &all).expect("letters already validated")
    }

    /// Product of several words, reduced once.
    pub fn product(group: &GroupPresentation, parts: &[&Word]) -> Word {
        let all: Vec<i32> = parts.iter().flat_map(|w| w.letters.iter().copied()).collect();
        Word::from_letters(group, &all).expect("letters already validated")
    }

    pub fn pow(&self, group: &GroupPresentation, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let parts: Vec<&Word> = (0..k.unsigned_abs()).map(|_| &base).collect();
        Word::product(group, &parts)
    }

    /// Strips letters that cancel around the cycle. The result is conjugate to `self`.
    pub fn cyclic_reduce(&self, group: &GroupPresentation) -> Word {
        let mut l = self.letters.as_slice();
        while l.len() > 1 && l[0] == -l[l.len() - 1] {
            l = &l[1..l.len() - 1];
        }
        Word::from_letters(group, l).expect("letters already validated")
    }

    /// Rotation by `k` letters; conjugate to `self`.
    pub fn rotate(&self, group: &GroupPresentation, k: usize) -> Word {
        let mut v = self.letters.clone();
        if !v.is_empty() {
            let k = k % v.len();
            v.rotate_left(k);
        }
        Word::from_letters(group, &v).expect("letters already validated")
    }

    /// Trace computed from the cyclically reduced word, which keeps the
    /// intermediate products as small as the conjugacy class allows.
    pub fn class_trace(&self, group: &GroupPresentation) -> f64 {
        self.cyclic_reduce(group).element.trace()
    }

    pub fn parse(group: &GroupPresentation, s: &str) -> Result<Word, FuchsianError> {
        let mut letters = Vec::new();
        for tok in s.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let l: i32 = tok.parse().map_err(|_| FuchsianError::BadLetter(0))?;
            group.letter(l)?;
            letters.push(l);
        }
        Word::from_letters(group, &letters)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// All freely reduced words of length ≤ `max_len`, shortest first, with
/// words of equal value merged into the first one met.
pub fn enumerate_words(group: &GroupPresentation, max_len: usize) -> Result<Vec<Word>, FuchsianError> {
    let count = group.ball_count(max_len);
    if count > WORD_BUDGET as u128 {
        return Err(FuchsianError::BudgetExceeded { max_len, count, budget: WORD_BUDGET });
    }
    let n = group.rank() as i32;
    let alphabet: Vec<i32> = (1..=n).flat_map(|k| [k, -k]).collect();
    let mut out = vec![Word::identity()];
    let mut start = 0;
    for _ in 0..max_len {
        let end = out.len();
        let mut next = Vec::new();
        for w in &out[start..end] {
            for &l in &alphabet {
                if w.letters.last() == Some(&-l) {
                    continue;
                }
                let mut letters = w.letters.clone();
                letters.push(l);
                let element = w.element * group.letter(l)?;
                next.push(Word { letters, element });
            }
        }
        start = end;
        out.extend(next);
    }
    Ok(dedupe(out))
}

fn same_element(x: &PslElement, y: &PslElement) -> bool {
    x.rel_residual(y) < RELATION_TOL
}

fn dedupe(words: Vec<Word>) -> Vec<Word> {
    // Sort by |a| so equal elements land in a narrow window.
    let key = |w: &Word| w.element.mat().a;
    let mut order: Vec<usize> = (0..words.len()).collect();
    order.sort_by(|&i, &j| key(&words[i]).total_cmp(&key(&words[j])).then(i.cmp(&j)));
    let mut dead = vec![false; words.len()];
    for (pos, &i) in order.iter().enumerate() {
        if dead[i] {
            continue;
        }
        let ki = key(&words[i]);
        let scale = words[i].element.frobenius().max(1.0);
        for &j in &order[pos + 1..] {
            if key(&words[j]) - ki > RELATION_TOL * scale * 2.0 {
                break;
            }
            if !dead[j] && same_element(&words[i].element, &words[j].element) {
                // keep the earlier, hence shorter, word
                if j < i {
                    dead[i] = true;
                    break;
                }
                dead[j] = true;
            }
        }
    }
    words.into_iter().zip(dead).filter(|(_, d)| !d).map(|(w, _)| w).collect()
}

/// The coset `Γg`.
#[derive(Clone, Debug)]
pub struct QuotientPoint {
    pub rep: PslElement,
    pub group: Arc<GroupPresentation>,
}

impl QuotientPoint {
    pub fn new(group: &Arc<GroupPresentation>, rep: PslElement) -> Self {
        QuotientPoint { rep, group: group.clone() }
    }

    /// Another representative of the same point.
    pub fn translate(&self, gamma: &PslElement) -> Self {
        QuotientPoint { rep: *gamma * self.rep, group: self.group.clone() }
    }

    pub fn right(&self, k: &PslElement) -> Self {
        QuotientPoint { rep: self.rep * *k, group: self.group.clone() }
    }

    /// Equality in the quotient, decided over the group's default ball.
    pub fn approx_eq(&self, other: &QuotientPoint) -> bool {
        let tol = &self.group.tolerances;
        let scale = self.rep.frobenius().max(other.rep.frobenius());
        quotient_distance(self, other) < tol.eq_tol * scale.max(1.0) * 10.0
    }
}

/// Moves `rep` by generators while that brings `rep·i` closer to `i`.
///
/// For the octagon the generators pair the sides of the Dirichlet domain
/// centred at `i`, so the result has its base point in that domain.
pub fn reduce_to_domain(group: &GroupPresentation, rep: &PslElement) -> (PslElement, Vec<i32>) {
    let origin = HPoint::i();
    let mut cur = *rep;
    let mut letters = Vec::new();
    let n = group.rank() as i32;
    for _ in 0..10_000 {
        let here = hyp_distance(&origin, &mobius_apply(&cur, &origin));
        let mut best = (here, 0);
        for l in (1..=n).flat_map(|k| [k, -k]) {
            let cand = group.letter(l).expect("valid letter") * cur;
            let d = hyp_distance(&origin, &mobius_apply(&cand, &origin));
            if d < best.0 - 1e-12 {
                best = (d, l);
            }
        }
        if best.1 == 0 {
            break;
        }
        cur = group.letter(best.1).expect("valid letter") * cur;
        letters.push(best.1);
    }
    letters.reverse();
    (cur, letters)
}

/// `min_γ d̂(rep_p, γ rep_q)` over the group's default ball, after both
/// representatives are moved next to `i`.
pub fn quotient_distance(p: &QuotientPoint, q: &QuotientPoint) -> f64 {
    let ball = p.group.default_ball().expect("default ball within budget");
    let (rp, _) = reduce_to_domain(&p.group, &p.rep);
    let (rq, _) = reduce_to_domain(&q.group, &q.rep);
    let p = QuotientPoint::new(&p.group, rp);
    let q = QuotientPoint::new(&q.group, rq);
    quotient_distance_in(&p, &q, &ball).0
}

/// Like [`quotient_distance`] over an explicit set of words; also returns the
/// index of the minimizing word.
pub fn quotient_distance_in(p: &QuotientPoint, q: &QuotientPoint, words: &[Word]) -> (f64, usize) {
    let zp = mobius_apply(&p.rep, &HPoint::i());
    let zq = mobius_apply(&q.rep, &HPoint::i());
    let mut best = f64::INFINITY;
    let mut arg = 0;
    for (k, w) in words.iter().enumerate() {
        // d̂ ≥ d_ℍ/√2, so translates whose base point is far cannot win
        let z = mobius_apply(&w.element, &zq);
        if hyp_distance(&zp, &z) > best * SQRT_2 {
            continue;
        }
        let d = ref_distance(&p.rep, &(w.element * q.rep));
        if d < best {
            best = d;
            arg = k;
        }
    }
    (best, arg)
}

/// Sampled injectivity data of the quotient.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sigma0Estimate {
    /// Minimum of `d̂(g, γg)` over sampled frames and nontrivial ball words.
    /// An upper estimate of the true constant.
    pub sigma0: f64,
    /// `2·arccosh(min tr / 2)` over the ball.
    pub systole: f64,
    pub min_trace: f64,
    /// `min tr - 2`.
    pub epsilon0: f64,
    pub frames: usize,
    pub word_len: usize,
    pub words: usize,
    pub seed: u64,
}

/// Samples `n_frames` frames whose base points lie within hyperbolic
/// distance `radius` of `i` and minimizes the displacement over the ball.
pub fn estimate_sigma0_with(
    group: &GroupPresentation,
    word_len: usize,
    n_frames: usize,
    radius: f64,
    seed: u64,
) -> Result<Sigma0Estimate, FuchsianError> {
    let ball = group.ball(word_len)?;
    let nontrivial: Vec<&Word> = ball.iter().filter(|w| !w.is_empty()).collect();
    let min_trace = nontrivial.iter().map(|w| w.element.trace()).fold(f64::INFINITY, f64::min);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames: Vec<PslElement> = (0..n_frames)
        .map(|k| {
            // every fourth frame sits at i so the generator axes are hit
            let r = if k % 4 == 0 { 0.0 } else { radius * rng.gen::<f64>().sqrt() };
            let alpha = rng.gen_range(-PI..PI);
            let beta = rng.gen_range(-PI..PI);
            PslElement::d(alpha) * PslElement::a(r) * PslElement::d(beta)
        })
        .collect();
    let sigma0 = frames
        .par_iter()
        .map(|g| {
            let zg = mobius_apply(g, &HPoint::i());
            let mut best = f64::INFINITY;
            for w in &nontrivial {
                let z = mobius_apply(&w.element, &zg);
                if hyp_distance(&zg, &z) > best * SQRT_2 {
                    continue;
                }
                best = best.min(ref_distance(g, &(w.element * *g)));
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(Sigma0Estimate {
        sigma0,
        systole: 2.0 * (min_trace / 2.0).max(1.0).acosh(),
        min_trace,
        epsilon0: min_trace - 2.0,
        frames: n_frames,
        word_len,
        words: nontrivial.len(),
        seed,
    })
}

/// 1024 frames within the circumradius of the regular octagon, seeded.
pub fn estimate_sigma0(group: &GroupPresentation, seed: u64) -> Result<Sigma0Estimate, FuchsianError> {
    let len = group.max_word_len.min(4);
    estimate_sigma0_with(group, len, 1024, octagon_circumradius(), seed)
}

/// A closed geodesic: `γ = g a_T g⁻¹`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub word: Word,
    pub frame: PslElement,
    pub period: f64,
}

impl PeriodicOrbit {
    /// Relative residual of `γ` against `g a_T g⁻¹`.
    pub fn residual(&self) -> f64 {
        let rebuilt = self.frame * PslElement::a(self.period) * self.frame.inverse();
        self.word.element.rel_residual(&rebuilt)
    }

    pub fn point(&self, group: &Arc<GroupPresentation>) -> QuotientPoint {
        QuotientPoint::new(group, self.frame)
    }
}

pub fn orbit_from_word(group: &GroupPresentation, w: &Word) -> Result<PeriodicOrbit, FuchsianError> {
    if w.is_empty() {
        return Err(FuchsianError::TrivialWord);
    }
    let (frame, period) = diagonalize_hyperbolic(&w.element, &group.tolerances)?;
    Ok(PeriodicOrbit { word: w.clone(), frame, period })
}

/// Length `ℓ` of the octagon side pairings, `cosh(ℓ/2) = 1 + √2`.
pub fn octagon_translation_length() -> f64 {
    2.0 * (1.0 + SQRT_2).acosh()
}

/// Distance from the centre of the regular octagon with interior angles π/4 to a vertex.
pub fn octagon_circumradius() -> f64 {
    let cot = 1.0 / (PI / 8.0).tan();
    (cot * cot).acosh()
}

/// The relator of [`builtin_octagon`], 1-based signed letters.
pub const OCTAGON_RELATOR: [i32; 8] = [1, -2, 3, -4, -1, 2, -3, 4];

/// Genus-2 surface group of the regular octagon.
///
/// Four generators `g_k = d_{kπ/4} a_ℓ d_{kπ/4}⁻¹`; each translates along an
/// axis through `i` and pairs opposite sides. Their inverses give the other
/// four pairings.
pub fn builtin_octagon() -> Arc<GroupPresentation> {
    let ell = octagon_translation_length();
    let gens = (0..4)
        .map(|k| {
            let r = PslElement::d(k as f64 * PI / 4.0);
            r * PslElement::a(ell) * r.inverse()
        })
        .collect();
    Arc::new(
        GroupPresentation::new("octagon", gens, vec![OCTAGON_RELATOR.to_vec()], 4, ToleranceConfig::default())
            .expect("octagon constants are valid"),
    )
}

/// Resolves `octagon` or a path to a group file.
pub fn load_group(spec: &str, tolerances: ToleranceConfig) -> Result<Arc<GroupPresentation>, LoadError> {
    if spec == "octagon" {
        let g = builtin_octagon();
        if tolerances == ToleranceConfig::default() {
            return Ok(g);
        }
        return Ok(Arc::new(g.with_tolerances(tolerances)?));
    }
    let text = std::fs::read_to_string(spec).map_err(|e| LoadError::Io(spec.to_string(), e))?;
    Ok(Arc::new(GroupPresentation::from_json_str(&text, tolerances)?))
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
    #[error(transparent)]
    Group(#[from] FuchsianError),
}
