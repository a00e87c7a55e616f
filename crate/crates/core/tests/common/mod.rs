//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use monoculture::ingest::{MetadataTable, RatingDataset, RatingScale};
use monoculture::synthetic::{generate_ratings, SyntheticRater, SyntheticRatingSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 20 raters in 5 companies sharing a market-wide and a company-level
/// component; 60 resumes × 10 jobs with human labels on 30 × 10.
pub fn correlated_rating_spec(seed: u64, tie_free: bool) -> SyntheticRatingSpec {
    let models = (0..20)
        .map(|i| {
            let mut r = SyntheticRater::new(format!("m{i:02}"), 1.0, 1.0).with_company(format!("c{}", i % 5), 0.8);
            r.latest_model = Some(i % 4 == 0);
            r
        })
        .collect();
    SyntheticRatingSpec {
        models,
        resumes: 60,
        jobs: 10,
        labeled_resumes: 30,
        labeled_jobs: 10,
        true_mean: 5.5,
        true_sd: 2.0,
        scale: RatingScale::default(),
        round: !tie_free,
        clamp: !tie_free,
        seed,
    }
}

pub fn correlated_ratings(seed: u64, tie_free: bool) -> (RatingDataset, MetadataTable) {
    let spec = correlated_rating_spec(seed, tie_free);
    (generate_ratings(&spec).unwrap(), spec.metadata().unwrap())
}

// ---- stable matching -------------------------------------------------------

pub struct SmallMarket {
    pub firm_rank: Vec<Vec<usize>>,
    pub applicant_prefs: Vec<Vec<usize>>,
    pub applied: Vec<Vec<bool>>,
    pub capacity: usize,
}

pub fn random_small_market(rng: &mut Rng8, max_a: usize, max_f: usize, max_cap: usize) -> SmallMarket {
    let na = rng.random_range(1..=max_a);
    let nf = rng.random_range(1..=max_f);
    let firm_rank = (0..nf)
        .map(|_| {
            let mut order: Vec<usize> = (0..na).collect();
            order.shuffle(rng);
            let mut r = vec![0; na];
            for (p, &a) in order.iter().enumerate() {
                r[a] = p;
            }
            r
        })
        .collect();
    let applicant_prefs = (0..na)
        .map(|_| {
            let mut p: Vec<usize> = (0..nf).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    let applied = (0..na)
        .map(|_| {
            let mut row: Vec<bool> = (0..nf).map(|_| rng.random_bool(0.6)).collect();
            if !row.iter().any(|x| *x) {
                row[rng.random_range(0..nf)] = true;
            }
            row
        })
        .collect();
    SmallMarket {
        firm_rank,
        applicant_prefs,
        applied,
        capacity: rng.random_range(1..=max_cap),
    }
}

fn pref_pos(m: &SmallMarket, a: usize, f: Option<usize>) -> usize {
    match f {
        Some(f) => m.applicant_prefs[a].iter().position(|&g| g == f).unwrap(),
        None => usize::MAX,
    }
}

/// Stability written directly from the definition.
pub fn is_stable(m: &SmallMarket, assign: &[Option<usize>]) -> bool {
    let nf = m.firm_rank.len();
    for (a, &f) in assign.iter().enumerate() {
        if let Some(f) = f {
            if !m.applied[a][f] {
                return false;
            }
        }
    }
    for f in 0..nf {
        let held: Vec<usize> = (0..assign.len()).filter(|&a| assign[a] == Some(f)).collect();
        if held.len() > m.capacity {
            return false;
        }
        for a in 0..assign.len() {
            if !m.applied[a][f] || assign[a] == Some(f) {
                continue;
            }
            if pref_pos(m, a, Some(f)) >= pref_pos(m, a, assign[a]) {
                continue;
            }
            let firm_wants = held.len() < m.capacity || held.iter().any(|&b| m.firm_rank[f][a] < m.firm_rank[f][b]);
            if firm_wants {
                return false;
            }
        }
    }
    true
}

/// Every feasible assignment (respecting applications and capacity).
pub fn all_assignments(m: &SmallMarket) -> Vec<Vec<Option<usize>>> {
    fn rec(m: &SmallMarket, a: usize, load: &mut Vec<usize>, cur: &mut Vec<Option<usize>>, out: &mut Vec<Vec<Option<usize>>>) {
        if a == cur.len() {
            out.push(cur.clone());
            return;
        }
        cur[a] = None;
        rec(m, a + 1, load, cur, out);
        for f in 0..m.firm_rank.len() {
            if m.applied[a][f] && load[f] < m.capacity {
                load[f] += 1;
                cur[a] = Some(f);
                rec(m, a + 1, load, cur, out);
                load[f] -= 1;
            }
        }
        cur[a] = None;
    }
    let mut out = Vec::new();
    let mut load = vec![0; m.firm_rank.len()];
    let mut cur = vec![None; m.applicant_prefs.len()];
    rec(m, 0, &mut load, &mut cur, &mut out);
    out
}

/// The stable assignment every applicant weakly prefers to every other
/// stable assignment, by exhaustive search.
pub fn applicant_optimal_by_enumeration(m: &SmallMarket) -> Vec<Option<usize>> {
    let stable: Vec<_> = all_assignments(m).into_iter().filter(|s| is_stable(m, s)).collect();
    assert!(!stable.is_empty(), "stable matchings always exist");
    let best: Vec<_> = stable
        .iter()
        .filter(|s| {
            stable
                .iter()
                .all(|o| (0..s.len()).all(|a| pref_pos(m, a, s[a]) <= pref_pos(m, a, o[a])))
        })
        .collect();
    assert_eq!(best.len(), 1, "applicant-optimal stable matching is unique");
    best[0].clone()
}

/// A self-contained differential-access market with uniformly random firms
/// and capacity 1, used to cross-check the library's simulator.
/// Returns `(applicants, matched)` per budget t (index 0 unused).
pub fn reference_budget_counts(applicants: usize, firms: usize, replicates: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = rng(seed);
    let mut counts = vec![(0usize, 0usize); firms + 1];
    for _ in 0..replicates {
        let rank: Vec<Vec<usize>> = (0..firms)
            .map(|_| {
                let mut o: Vec<usize> = (0..applicants).collect();
                o.shuffle(&mut rng);
                let mut r = vec![0; applicants];
                for (p, &a) in o.iter().enumerate() {
                    r[a] = p;
                }
                r
            })
            .collect();
        let lists: Vec<Vec<usize>> = (0..applicants)
            .map(|_| {
                let t = rng.random_range(1..=firms);
                let mut all: Vec<usize> = (0..firms).collect();
                all.shuffle(&mut rng);
                all.truncate(t);
                all
            })
            .collect();
        let mut next = vec![0; applicants];
        let mut held: Vec<Option<usize>> = vec![None; firms];
        let mut free: Vec<usize> = (0..applicants).collect();
        while let Some(a) = free.pop() {
            if next[a] == lists[a].len() {
                continue;
            }
            let f = lists[a][next[a]];
            next[a] += 1;
            match held[f] {
                None => held[f] = Some(a),
                Some(b) if rank[f][a] < rank[f][b] => {
                    held[f] = Some(a);
                    free.push(b);
                }
                Some(_) => free.push(a),
            }
        }
        let mut matched = vec![false; applicants];
        for a in held.into_iter().flatten() {
            matched[a] = true;
        }
        for a in 0..applicants {
            counts[lists[a].len()].0 += 1;
            counts[lists[a].len()].1 += matched[a] as usize;
        }
    }
    counts
}

// ---- least squares ---------------------------------------------------------

pub struct OracleFit {
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub r2: f64,
}

/// Normal equations solved by Gauss-Jordan elimination with partial pivoting.
pub fn ols_oracle(x: &[f64], y: &[f64], p: usize) -> OracleFit {
    let n = y.len();
    let mut a = vec![vec![0.0; 2 * p]; p];
    for i in 0..p {
        for j in 0..p {
            a[i][j] = (0..n).map(|r| x[r * p + i] * x[r * p + j]).sum();
        }
        a[i][p + i] = 1.0;
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        let d = a[c][c];
        for v in a[c].iter_mut() {
            *v /= d;
        }
        for r in 0..p {
            if r != c {
                let f = a[r][c];
                if f != 0.0 {
                    for k in 0..2 * p {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
    }
    let inv: Vec<Vec<f64>> = a.iter().map(|row| row[p..].to_vec()).collect();
    let xty: Vec<f64> = (0..p).map(|i| (0..n).map(|r| x[r * p + i] * y[r]).sum()).collect();
    let coef: Vec<f64> = (0..p).map(|i| (0..p).map(|j| inv[i][j] * xty[j]).sum()).collect();
    let resid: Vec<f64> = (0..n)
        .map(|r| y[r] - (0..p).map(|j| x[r * p + j] * coef[j]).sum::<f64>())
        .collect();
    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let df = (n - p) as f64;
    let s2 = ssr / df;
    let se: Vec<f64> = (0..p).map(|i| (s2 * inv[i][i]).sqrt()).collect();
    let t: Vec<f64> = coef.iter().zip(&se).map(|(c, s)| c / s).collect();
    let pv = t.iter().map(|&t| t_two_sided_numeric(t, df)).collect();
    OracleFit {
        coef,
        se,
        t,
        p: pv,
        r2: 1.0 - ssr / sst,
    }
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut s = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        s += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + s.ln()
}

/// P(|T| > |t|) by composite Simpson integration of the t density over
/// [0, |t|], split into many panels.
pub fn t_two_sided_numeric(t: f64, df: f64) -> f64 {
    let t = t.abs();
    let lc = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    let dens = |x: f64| (lc - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();
    let panels = 20_000usize;
    let h = t / panels as f64;
    let mut s = dens(0.0) + dens(t);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * dens(i as f64 * h);
    }
    let half = s * h / 3.0;
    (1.0 - 2.0 * half).max(0.0)
}
