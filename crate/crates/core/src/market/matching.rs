use serde::Serialize;

/// Result of one market: who matched where, plus the applicant-side
/// context needed by the welfare metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchingOutcome {
    /// Applicant → firm, `None` if unmatched.
    pub assignment: Vec<Option<usize>>,
    /// 1-based rank of the matched firm in the applicant's full preference
    /// list, `None` if unmatched.
    pub applicant_rank: Vec<Option<usize>>,
    /// Number of applications each applicant submitted.
    pub budgets: Vec<usize>,
    /// Applicants interviewed by each firm.
    pub interview_sets: Vec<Vec<usize>>,
}

impl MatchingOutcome {
    pub fn matched_count(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_some()).count()
    }
}

/// Applicant-proposing deferred acceptance.
///
/// * `firm_rank[f][a]` — position of applicant `a` in firm `f`'s order
///   (lower is better); firms accept any applicant who applied.
/// * `applicant_prefs[a]` — firms in the applicant's order of preference.
/// * `applied[a][f]` — whether `a` applied to `f`.
///
/// Returns the applicant-optimal stable assignment.
pub fn deferred_acceptance(
    firm_rank: &[Vec<usize>],
    applicant_prefs: &[Vec<usize>],
    applied: &[Vec<bool>],
    capacity: usize,
) -> Vec<Option<usize>> {
    let n_app = applicant_prefs.len();
    let n_firm = firm_rank.len();
    let mut next = vec![0usize; n_app];
    let mut held: Vec<Vec<usize>> = vec![Vec::with_capacity(capacity + 1); n_firm];
    let mut assignment = vec![None; n_app];
    let mut free: Vec<usize> = (0..n_app).rev().collect();
    while let Some(a) = free.pop() {
        // next firm on a's list that a applied to
        let prefs = &applicant_prefs[a];
        while next[a] < prefs.len() && !applied[a][prefs[next[a]]] {
            next[a] += 1;
        }
        if next[a] == prefs.len() {
            continue;
        }
        let f = prefs[next[a]];
        next[a] += 1;
        let pool = &mut held[f];
        pool.push(a);
        assignment[a] = Some(f);
        if pool.len() > capacity {
            let (worst_pos, &worst) = pool
                .iter()
                .enumerate()
                .max_by_key(|(_, &x)| firm_rank[f][x])
                .expect("nonempty");
            pool.swap_remove(worst_pos);
            assignment[worst] = None;
            free.push(worst);
        }
    }
    assignment
}

/// Applicant–firm pairs that block `assignment`: the applicant applied to
/// the firm, strictly prefers it to its outcome, and the firm has a free
/// slot or strictly prefers the applicant to someone it holds.
pub fn blocking_pairs(
    assignment: &[Option<usize>],
    firm_rank: &[Vec<usize>],
    applicant_prefs: &[Vec<usize>],
    applied: &[Vec<bool>],
    capacity: usize,
) -> Vec<(usize, usize)> {
    let n_firm = firm_rank.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_firm];
    for (a, f) in assignment.iter().enumerate() {
        if let Some(f) = f {
            members[*f].push(a);
        }
    }
    let mut out = Vec::new();
    for (a, prefs) in applicant_prefs.iter().enumerate() {
        for &f in prefs {
            if Some(f) == assignment[a] {
                break;
            }
            if !applied[a][f] {
                continue;
            }
            let firm_wants = members[f].len() < capacity
                || members[f].iter().any(|&b| firm_rank[f][a] < firm_rank[f][b]);
            if firm_wants {
                out.push((a, f));
            }
        }
    }
    out
}
