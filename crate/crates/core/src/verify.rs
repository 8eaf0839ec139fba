//! Brute-force oracles and certificates used in verification mode and by
//! `selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aogd::{AogdConfig, AogdState};
use crate::baselines::{ons_eta, ExplicitOns, KonsConfig, KonsState};
use crate::dictionary::{Dictionary, FeatureMap};
use crate::error::{Error, Result};
use crate::kernels::{self, Kernel};
use crate::nons::{self, NonsBranch, NonsConfig, NonsState};
use crate::numerics::{self, Matrix, SymMatrix, Vector};

/// Largest stream the dense oracles accept.
pub const DENSE_ORACLE_MAX_ROUNDS: usize = 500;
const BISECTION_MAX_ITERS: usize = 200;
const BISECTION_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReplayEntry {
    /// `x_t` became dictionary atom `atom`.
    Expansion { round: usize, atom: usize },
    /// A prediction round in the epoch whose map has `epoch` atoms;
    /// `beta` is indexed against those atoms.
    Prediction {
        round: usize,
        epoch: usize,
        beta: Vec<f64>,
        g: f64,
        eta: f64,
    },
}

/// Per-round history sufficient to rebuild the covariance at any epoch start
/// and the stacked approximate features of the whole stream.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplayLog {
    entries: Vec<ReplayEntry>,
}

impl ReplayLog {
    pub fn push(&mut self, e: ReplayEntry) {
        self.entries.push(e);
    }

    pub fn entries(&self) -> &[ReplayEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn expansions(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e, ReplayEntry::Expansion { .. }))
            .count()
    }

    /// `φ̃` of one entry under `map`.
    fn tilde(&self, e: &ReplayEntry, map: &FeatureMap) -> Result<Vector> {
        match e {
            ReplayEntry::Expansion { atom, .. } => {
                if *atom >= map.size() {
                    return Err(Error::input(format!(
                        "atom {atom} is outside a map of size {}",
                        map.size()
                    )));
                }
                let mut ind = Vector::zeros(atom + 1);
                ind[*atom] = 1.0;
                map.tilde_feature(&ind)
            }
            ReplayEntry::Prediction { epoch, beta, .. } => {
                if beta.len() != *epoch {
                    return Err(Error::input(
                        "replay entry has a coefficient vector of the wrong length",
                    ));
                }
                map.tilde_feature(&Vector::from_column_slice(beta))
            }
        }
    }
}

/// `μI + Σ η g² φ̃ φ̃ᵀ` over prediction rounds of epochs smaller than `map`.
pub fn replay_a(log: &ReplayLog, map: &FeatureMap, mu: f64) -> Result<SymMatrix> {
    let j = map.size();
    if log.expansions() < j {
        return Err(Error::input(format!(
            "replay log records {} expansions, fewer than the {j} atoms of the map",
            log.expansions()
        )));
    }
    let mut a = Matrix::identity(j, j) * mu;
    for e in log.entries() {
        if let ReplayEntry::Prediction { epoch, g, eta, .. } = e {
            if *epoch < j {
                let phi = log.tilde(e, map)?;
                a += &phi * phi.transpose() * (eta * g * g);
            }
        }
    }
    SymMatrix::symmetrize(a)
}

/// Columns `φ̃_J(x_t)` for every logged round, under the final map.
pub fn tilde_matrix(log: &ReplayLog, map: &FeatureMap) -> Result<Matrix> {
    let mut out = Matrix::zeros(map.size(), log.len());
    for (c, e) in log.entries().iter().enumerate() {
        out.set_column(c, &log.tilde(e, map)?);
    }
    Ok(out)
}

/// `(‖K_T − Φ̃ᵀΦ̃‖₂, T√α)`.
pub fn global_spectral_check(
    log: &ReplayLog,
    map: &FeatureMap,
    gram_full: &SymMatrix,
    alpha: f64,
) -> Result<(f64, f64)> {
    let t = log.len();
    if t > DENSE_ORACLE_MAX_ROUNDS {
        return Err(Error::ResourceCap(format!(
            "dense spectral check is limited to {DENSE_ORACLE_MAX_ROUNDS} rounds"
        )));
    }
    numerics::check_len(t, gram_full.dim())?;
    let phi = tilde_matrix(log, map)?;
    let diff = SymMatrix::symmetrize(gram_full.as_matrix() - phi.transpose() * phi)?;
    Ok((numerics::spectral_norm(&diff)?, t as f64 * alpha.sqrt()))
}

/// One epoch's local certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochCertificate {
    pub size: usize,
    pub rounds: usize,
    pub certificate: f64,
    pub bound: f64,
}

/// `‖K_{T_j} − Φ_jᵀΦ_j‖₂` over each epoch's prediction rounds, against `|T_j| α`.
/// `inputs[t]` must be the instance of round `t + 1`.
pub fn epoch_certificates(state: &NonsState, inputs: &[Vec<f64>]) -> Result<Vec<EpochCertificate>> {
    let log = state
        .replay_log()
        .ok_or_else(|| Error::input("epoch certificates need a run in verification mode"))?;
    let alpha = state.config().alpha;
    let mut out = Vec::new();
    for tr in state.transitions() {
        let points: Vec<Vec<f64>> = log
            .entries()
            .iter()
            .filter_map(|e| match e {
                ReplayEntry::Prediction { round, epoch, .. } if *epoch == tr.new_size => {
                    Some(inputs[round - 1].clone())
                }
                _ => None,
            })
            .collect();
        out.push(EpochCertificate {
            size: tr.new_size,
            rounds: points.len(),
            certificate: tr.map.spectral_error_certificate(&points)?,
            bound: points.len() as f64 * alpha,
        });
    }
    Ok(out)
}

/// `argmin_{|wᵀφ| ≤ U} ‖w − w̃‖²_A` by bisection on the KKT multiplier.
pub fn projection_oracle(w_tilde: &Vector, a: &SymMatrix, phi: &Vector, radius: f64) -> Result<Vector> {
    let y = w_tilde.dot(phi);
    if y.abs() <= radius {
        return Ok(w_tilde.clone());
    }
    let dir = numerics::solve_spd(a, phi)? * y.signum();
    let at = |lambda: f64| w_tilde - &dir * lambda;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut grown = 0;
    while at(hi).dot(phi).abs() > radius && at(hi).dot(phi).signum() == y.signum() {
        hi *= 2.0;
        grown += 1;
        if grown > BISECTION_MAX_ITERS {
            return Err(Error::numeric("projection multiplier is unbounded"));
        }
    }
    for _ in 0..BISECTION_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        let v = at(mid).dot(phi) * y.signum();
        if (v - radius).abs() <= BISECTION_TOL {
            return Ok(at(mid));
        }
        if v > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::numeric("projection bisection did not converge"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckResult {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(name, passed, detail),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

fn smooth_targets(xs: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Vec<f64> {
    xs.iter()
        .map(|x| 0.5 + 0.3 * (2.5 * x[0]).sin() * (1.5 * x[x.len() - 1]).cos() + 0.05 * rng.random_range(-1.0..1.0))
        .collect()
}

fn verified_run(seed: u64, n: usize, alpha: f64, mu: f64) -> Result<(NonsState, Vec<Vec<f64>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = uniform(&mut rng, n, 2);
    let ys = smooth_targets(&xs, &mut rng);
    let mut s = NonsState::new(NonsConfig::new(Kernel::gaussian(0.5)?, mu, alpha, 1.0, 1.0).verified())?;
    for (x, y) in xs.iter().zip(&ys) {
        s.step(x, *y)?;
    }
    Ok((s, xs))
}

type Check = fn() -> Result<(bool, String)>;

fn check_pointwise() -> Result<(bool, String)> {
    let alpha = 0.01;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut dict = Dictionary::new(Kernel::gaussian(0.5)?, alpha)?;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for x in uniform(&mut rng, 300, 2) {
        let res = dict.ald_test(&x)?;
        if res.holds {
            let gap = 1.0 - dict.feature_map()?.apply(&x)?.norm_squared();
            ok &= (-1e-9..=alpha + 1e-9).contains(&gap);
            worst = worst.max(gap);
        } else {
            dict.add_atom(&x, 0.0, &res)?;
        }
    }
    Ok((ok, format!("max gap {worst:.3e} vs alpha {alpha}")))
}

fn check_certificates() -> Result<(bool, String)> {
    let alpha = 0.01;
    let (s, xs) = verified_run(2, 200, alpha, 1.0)?;
    let certs = epoch_certificates(&s, &xs)?;
    let local_ok = certs.iter().all(|c| c.certificate <= c.bound + 1e-9);
    let log = s.replay_log().expect("verified run");
    let map = s.feature_map().ok_or_else(|| Error::numeric("no epoch was started"))?;
    let gram = kernels::gram(s.dictionary().kernel(), &xs)?;
    let (lhs, bound) = global_spectral_check(log, map, &gram, alpha)?;
    Ok((
        local_ok && lhs <= bound,
        format!("{} epochs; global {lhs:.3e} <= {bound:.3}", certs.len()),
    ))
}

fn check_replay_and_determinants() -> Result<(bool, String)> {
    let mut ok = true;
    let mut worst_replay: f64 = 0.0;
    let mut worst_det: f64 = 0.0;
    let mut worst_q: f64 = 0.0;
    let mut worst_pres: f64 = 0.0;
    for (i, mu) in [1.0, 5.0, 15.0].into_iter().enumerate() {
        let (s, _) = verified_run(3 + i as u64, 300, 0.02, mu)?;
        let log = s.replay_log().expect("verified run");
        for tr in s.transitions() {
            let replay = replay_a(log, &tr.map, mu)?;
            let rel = numerics::relative_frobenius(tr.a_new.as_matrix(), replay.as_matrix());
            let det = (tr.log_det_new - tr.log_det_prev - (tr.new_size - tr.old_size) as f64 * mu.ln()).abs();
            let pres = (tr.prediction_new - tr.prediction_old).abs();
            worst_replay = worst_replay.max(rel);
            worst_det = worst_det.max(det);
            worst_q = worst_q.max(tr.q_defect);
            worst_pres = worst_pres.max(pres);
        }
    }
    ok &= worst_replay <= 1e-8 && worst_det <= 1e-6 && worst_q <= 1e-8 && worst_pres <= 1e-8;
    Ok((
        ok,
        format!("replay {worst_replay:.2e}, log-det {worst_det:.2e}, Q {worst_q:.2e}, preservation {worst_pres:.2e}"),
    ))
}

fn check_projection() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for _ in 0..200 {
        let n = rng.random_range(1..10);
        let b = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = SymMatrix::symmetrize(&b * b.transpose() + Matrix::identity(n, n) * 0.1)?;
        let phi = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let w = Vector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let u = rng.random_range(0.1..2.0);
        let fast = nons::project_w(&w, &numerics::inverse_spd(&a)?, &phi, u)?;
        let slow = projection_oracle(&w, &a, &phi, u)?;
        worst = worst.max((fast - &slow).amax());
        ok &= slow.dot(&phi).abs() <= u + 1e-8;
    }
    Ok((ok && worst <= 1e-6, format!("max disagreement {worst:.2e}")))
}

fn check_exact_modes() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let k = Kernel::gaussian(0.4)?;
    let xs = uniform(&mut rng, 200, 3);
    let ys = smooth_targets(&xs, &mut rng);
    let mut a = AogdState::new(AogdConfig::ald(k, 2.0, 0.0, xs.len()))?;
    let mut b = AogdState::new(AogdConfig::kogd(k, 2.0))?;
    let mut aogd_gap: f64 = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        aogd_gap = aogd_gap.max((a.step(x, *y)?.prediction - b.step(x, *y)?.prediction).abs());
    }

    let eta = ons_eta(1.0, 1.0);
    let mut kons = KonsState::new(KonsConfig::new(Kernel::Linear, 1.0, eta))?;
    let mut ons = ExplicitOns::new(2, 1.0, eta, None)?;
    let mut kons_gap: f64 = 0.0;
    for _ in 0..200 {
        let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let x = [t.cos(), t.sin()];
        let y = 0.4 * x[0] - 0.2 * x[1];
        kons_gap = kons_gap.max((kons.step(&x, y)? - ons.step(&Vector::from_column_slice(&x), y)?).abs());
    }
    Ok((
        aogd_gap <= 1e-10 && kons_gap <= 1e-8,
        format!("AOGD/KOGD {aogd_gap:.2e}, KONS/ONS {kons_gap:.2e}"),
    ))
}

fn check_sherman_morrison() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 50;
    let mut a = SymMatrix::identity(n);
    let mut inv = SymMatrix::identity(n);
    for _ in 0..1000 {
        let u = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)) / (n as f64).sqrt();
        let c = rng.random_range(0.0..1.0);
        a = a.add_rank_one(c, &u)?;
        inv = numerics::rank_one_inverse_update(&inv, &u, c)?;
    }
    let fresh = numerics::inverse_spd(&a)?;
    let drift = numerics::relative_frobenius(inv.as_matrix(), fresh.as_matrix());
    Ok((drift <= 1e-6, format!("relative drift {drift:.2e}")))
}

fn check_full_dictionary() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let k = Kernel::gaussian(0.3)?;
    let distinct = uniform(&mut rng, 20, 2);
    // new point, then a repeat of an older atom, then a few repeats of anything seen
    let mut stream = Vec::new();
    for i in 0..distinct.len() {
        stream.push(distinct[i].clone());
        if i > 0 {
            stream.push(distinct[rng.random_range(0..i)].clone());
        }
        for _ in 0..3 {
            stream.push(distinct[rng.random_range(0..=i)].clone());
        }
    }
    let ys = smooth_targets(&stream, &mut rng);
    let mut s = NonsState::new(NonsConfig::new(k, 1.0, 1e-9, 1.0, 1.0))?;
    let mut preds = Vec::new();
    for (x, y) in stream.iter().zip(&ys) {
        let t = s.step(x, *y)?;
        preds.push((t.branch, t.prediction));
    }
    let map = s
        .feature_map()
        .ok_or_else(|| Error::numeric("no epoch was started"))?
        .clone();
    let mut ons = ExplicitOns::new(map.size(), 1.0, ons_eta(1.0, 1.0), Some(1.0))?;
    let mut worst: f64 = 0.0;
    for ((x, y), (branch, p)) in stream.iter().zip(&ys).zip(preds) {
        if branch == NonsBranch::Predicted {
            worst = worst.max((ons.step(&map.apply(x)?, *y)? - p).abs());
        }
    }
    Ok((worst <= 1e-6, format!("max gap {worst:.2e} over {} atoms", map.size())))
}

/// Runs the certificate battery.
pub fn selftest() -> Vec<CheckResult> {
    let checks: [(&str, Check); 7] = [
        ("ald pointwise bound", check_pointwise),
        ("local and global spectral certificates", check_certificates),
        (
            "covariance replay, determinant ratio, transition operator",
            check_replay_and_determinants,
        ),
        ("projection vs KKT bisection", check_projection),
        ("exact-mode equivalences", check_exact_modes),
        ("NONS-ALD with full dictionary vs explicit ONS", check_full_dictionary),
        ("Sherman-Morrison drift", check_sherman_morrison),
    ];
    checks
        .iter()
        .map(|(name, f)| CheckResult::from_result(name, f()))
        .collect()
}
