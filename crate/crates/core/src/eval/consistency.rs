//! Profile-consistency checks: does a profile pick out its own user's
//! behaviors, and does it rank the user's products above others?

use std::collections::BTreeSet;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{ndcg_at_k, recall_at_k};
use super::EvalError;
use crate::corpus::{BehaviorRecord, Product, UserProfile, UserRecord};

pub const MATCH_NEGATIVES: usize = 4;
pub const RANK_POSITIVES: usize = 3;
pub const RANK_NEGATIVES: usize = 7;
pub const RANK_CUTOFF: usize = 5;

/// One profile against shuffled candidate histories, exactly one of which
/// belongs to the profile's user.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchTrial {
    pub user_id: String,
    pub profile: UserProfile,
    pub candidates: Vec<Vec<BehaviorRecord>>,
    pub truth: usize,
}

pub trait Chooser {
    fn choose(&mut self, trial: &MatchTrial) -> usize;
}

/// Picks the true candidate.
pub struct OracleChooser;

impl Chooser for OracleChooser {
    fn choose(&mut self, trial: &MatchTrial) -> usize {
        trial.truth
    }
}

/// Uniform pick under a fixed seed.
pub struct RandomChooser(ChaCha8Rng);

impl RandomChooser {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl Chooser for RandomChooser {
    fn choose(&mut self, trial: &MatchTrial) -> usize {
        self.0.gen_range(0..trial.candidates.len())
    }
}

/// Always the first candidate.
pub struct FirstChooser;

impl Chooser for FirstChooser {
    fn choose(&mut self, _trial: &MatchTrial) -> usize {
        0
    }
}

/// `count` trials cycling over `users`, each with `negatives` other users'
/// histories shuffled in under `seed`.
pub fn build_match_trials(users: &[UserRecord], count: usize, negatives: usize, seed: u64) -> Result<Vec<MatchTrial>, EvalError> {
    if users.len() < negatives + 1 {
        return Err(EvalError::TooFew {
            what: "users",
            needed: negatives + 1,
            got: users.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|t| {
            let ui = t % users.len();
            let user = &users[ui];
            let mut picks: Vec<usize> = (0..users.len()).filter(|&j| j != ui).choose_multiple(&mut rng, negatives);
            picks.push(ui);
            picks.shuffle(&mut rng);
            MatchTrial {
                user_id: user.user_id.clone(),
                profile: user.profile.clone(),
                candidates: picks.iter().map(|&j| users[j].history.clone()).collect(),
                truth: picks.iter().position(|&j| j == ui).expect("own index included"),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub trials: usize,
    pub correct: usize,
    pub accuracy: f64,
}

/// Top-1 accuracy of `chooser` over the trials.
pub fn profile_behavior_match_task(trials: &[MatchTrial], chooser: &mut dyn Chooser) -> Result<MatchReport, EvalError> {
    if trials.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let correct = trials.iter().filter(|t| chooser.choose(t) == t.truth).count();
    Ok(MatchReport {
        trials: trials.len(),
        correct,
        accuracy: correct as f64 / trials.len() as f64,
    })
}

/// A profile with shuffled candidate products, some of which the user bought.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTrial {
    pub user_id: String,
    pub profile: UserProfile,
    pub items: Vec<Product>,
    pub positives: BTreeSet<String>,
}

pub trait Ranker {
    /// A permutation of the trial's product ids, best first.
    fn rank(&mut self, trial: &RankTrial) -> Vec<String>;
}

/// Positives first, each group in presented order.
pub struct OracleRanker;

impl Ranker for OracleRanker {
    fn rank(&mut self, trial: &RankTrial) -> Vec<String> {
        let (pos, neg): (Vec<_>, Vec<_>) = trial
            .items
            .iter()
            .map(|p| p.product_id.clone())
            .partition(|id| trial.positives.contains(id));
        pos.into_iter().chain(neg).collect()
    }
}

/// Negatives first.
pub struct ReversedOracleRanker;

impl Ranker for ReversedOracleRanker {
    fn rank(&mut self, trial: &RankTrial) -> Vec<String> {
        let mut order = OracleRanker.rank(trial);
        order.reverse();
        order
    }
}

/// Presented order.
pub struct IdentityRanker;

impl Ranker for IdentityRanker {
    fn rank(&mut self, trial: &RankTrial) -> Vec<String> {
        trial.items.iter().map(|p| p.product_id.clone()).collect()
    }
}

/// One trial per user with at least `positives` distinct products outside
/// the history; positives are the newest such products.
pub fn build_rank_trials(
    users: &[UserRecord],
    catalog: &[Product],
    positives: usize,
    negatives: usize,
    seed: u64,
) -> Result<Vec<RankTrial>, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::new();
    for user in users {
        let owned: BTreeSet<&str> = user.behaviors().map(|b| b.product_id.as_str()).collect();
        let mut pos_ids: Vec<&str> = Vec::new();
        for b in user.train.iter().chain(&user.test).rev() {
            if !pos_ids.contains(&b.product_id.as_str()) {
                pos_ids.push(&b.product_id);
            }
        }
        if pos_ids.len() < positives {
            for b in user.history.iter().rev() {
                if pos_ids.len() >= positives {
                    break;
                }
                if !pos_ids.contains(&b.product_id.as_str()) {
                    pos_ids.push(&b.product_id);
                }
            }
        }
        pos_ids.truncate(positives);
        if pos_ids.len() < positives {
            continue;
        }
        let pool: Vec<&Product> = catalog.iter().filter(|p| !owned.contains(p.product_id.as_str())).collect();
        if pool.len() < negatives {
            return Err(EvalError::TooFew {
                what: "negative products",
                needed: negatives,
                got: pool.len(),
            });
        }
        let mut items: Vec<Product> = pos_ids
            .iter()
            .map(|id| catalog.iter().find(|p| p.product_id == *id).cloned())
            .collect::<Option<_>>()
            .ok_or(EvalError::TooFew {
                what: "catalog products for positives",
                needed: positives,
                got: 0,
            })?;
        items.extend(pool.choose_multiple(&mut rng, negatives).map(|p| (*p).clone()));
        items.shuffle(&mut rng);
        trials.push(RankTrial {
            user_id: user.user_id.clone(),
            profile: user.profile.clone(),
            items,
            positives: pos_ids.iter().map(|s| s.to_string()).collect(),
        });
    }
    if trials.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(trials)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub trials: usize,
    pub ndcg_at_5: f64,
    pub recall_at_5: f64,
}

/// NDCG@5 and Recall@5 of one ranked trial; the ranking must be a
/// permutation of the trial's items.
pub fn score_rank_trial(trial: &RankTrial, ranking: &[String]) -> Result<(f64, f64), EvalError> {
    let expected: BTreeSet<&str> = trial.items.iter().map(|p| p.product_id.as_str()).collect();
    let got: BTreeSet<&str> = ranking.iter().map(String::as_str).collect();
    if ranking.len() != trial.items.len() || got != expected {
        return Err(EvalError::NotAPermutation {
            user_id: trial.user_id.clone(),
        });
    }
    Ok((
        ndcg_at_k(ranking, &trial.positives, RANK_CUTOFF),
        recall_at_k(ranking, &trial.positives, RANK_CUTOFF),
    ))
}

/// Mean NDCG@5 and Recall@5 of `ranker` over the trials.
pub fn profile_product_rank_task(trials: &[RankTrial], ranker: &mut dyn Ranker) -> Result<RankReport, EvalError> {
    if trials.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let (mut ndcg, mut recall) = (0.0, 0.0);
    for t in trials {
        let (n, r) = score_rank_trial(t, &ranker.rank(t))?;
        ndcg += n;
        recall += r;
    }
    let n = trials.len() as f64;
    Ok(RankReport {
        trials: trials.len(),
        ndcg_at_5: ndcg / n,
        recall_at_5: recall / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::generate_fixture;

    #[test]
    fn oracle_is_perfect() {
        let b = generate_fixture(5, 10, 50).unwrap();
        let trials = build_match_trials(&b.users, 50, MATCH_NEGATIVES, 1).unwrap();
        assert!(trials.iter().all(|t| t.candidates.len() == 5));
        assert_eq!(profile_behavior_match_task(&trials, &mut OracleChooser).unwrap().accuracy, 1.0);
        let ranks = build_rank_trials(&b.users, &b.catalog, RANK_POSITIVES, RANK_NEGATIVES, 1).unwrap();
        assert!(ranks.iter().all(|t| t.items.len() == 10 && t.positives.len() == 3));
        let r = profile_product_rank_task(&ranks, &mut OracleRanker).unwrap();
        assert_eq!((r.ndcg_at_5, r.recall_at_5), (1.0, 1.0));
        let rev = profile_product_rank_task(&ranks, &mut ReversedOracleRanker).unwrap();
        assert_eq!(rev.recall_at_5, 0.0);
    }

    #[test]
    fn non_permutation_rejected() {
        let b = generate_fixture(5, 10, 50).unwrap();
        let ranks = build_rank_trials(&b.users, &b.catalog, 3, 7, 1).unwrap();
        let mut ids = IdentityRanker.rank(&ranks[0]);
        ids[0] = ids[1].clone();
        assert!(matches!(score_rank_trial(&ranks[0], &ids), Err(EvalError::NotAPermutation { .. })));
    }

    #[test]
    fn too_few_users() {
        let b = generate_fixture(5, 3, 50).unwrap();
        assert!(matches!(build_match_trials(&b.users, 5, 4, 0), Err(EvalError::TooFew { .. })));
    }
}
