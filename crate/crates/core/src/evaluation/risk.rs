use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::combiners::dp_percent;
use crate::error::{Error, Result};

/// Largest dp bucket; deficits of 20% or more share it.
pub const DP_BUCKETS: usize = 20;

/// Vote vector of one example with its true class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub votes: Vec<u32>,
    pub truth: usize,
}

/// Competition rank of `class`: one plus the number of strictly higher scores.
pub fn competition_rank(votes: &[u32], class: usize) -> usize {
    1 + votes.iter().filter(|&&s| s > votes[class]).count()
}

/// Examples whose true class does not hold a strict vote maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub examples: usize,
    pub high_risk: usize,
    /// Of the high-risk examples, how many tie for the top score.
    pub tied_top: usize,
    /// `rank_counts[r - 1]`: high-risk examples whose true class has rank `r`.
    pub rank_counts: Vec<usize>,
    /// `dp_counts[b]`: high-risk examples with `b ≤ dp_t < b + 1`
    /// (the last bucket collects everything from 20 up).
    pub dp_counts: Vec<usize>,
}

/// Ranks and vote deficits of the true class over the high-risk examples.
pub fn risk_analysis(records: &[VoteRecord]) -> Result<RiskReport> {
    let mut report = RiskReport {
        examples: records.len(),
        high_risk: 0,
        tied_top: 0,
        rank_counts: Vec::new(),
        dp_counts: vec![0; DP_BUCKETS + 1],
    };
    for r in records {
        if r.truth >= r.votes.len() {
            return Err(Error::InvalidPair(r.truth, r.votes.len()));
        }
        let top = *r.votes.iter().max().expect("non-empty votes");
        let s_t = r.votes[r.truth];
        let strict_max = s_t == top && r.votes.iter().filter(|&&s| s == top).count() == 1;
        if strict_max {
            continue;
        }
        report.high_risk += 1;
        let rank = competition_rank(&r.votes, r.truth);
        if rank == 1 {
            report.tied_top += 1;
        }
        if report.rank_counts.len() < rank {
            report.rank_counts.resize(rank, 0);
        }
        report.rank_counts[rank - 1] += 1;
        let bucket = (dp_percent(top, s_t).floor() as usize).min(DP_BUCKETS);
        report.dp_counts[bucket] += 1;
    }
    Ok(report)
}

impl RiskReport {
    /// Writes `kind,bucket,count` rows: ranks first, then dp buckets.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "bucket", "count"])?;
        for (i, c) in self.rank_counts.iter().enumerate() {
            w.write_record(["rank", &(i + 1).to_string(), &c.to_string()])?;
        }
        for (b, c) in self.dp_counts.iter().enumerate() {
            let label = if b == DP_BUCKETS {
                format!("{b}+")
            } else {
                b.to_string()
            };
            w.write_record(["dp", &label, &c.to_string()])?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<risk report>".into(),
            source: e,
        })?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(votes: &[u32], truth: usize) -> VoteRecord {
        VoteRecord {
            votes: votes.to_vec(),
            truth,
        }
    }

    #[test]
    fn strict_winner_is_not_high_risk() {
        let r = risk_analysis(&[rec(&[5, 3, 1], 0)]).unwrap();
        assert_eq!(r.high_risk, 0);
        assert_eq!(r.dp_counts.iter().sum::<usize>(), 0);
    }

    #[test]
    fn second_place_by_one_vote() {
        let r = risk_analysis(&[rec(&[24, 23, 3], 1)]).unwrap();
        assert_eq!(r.high_risk, 1);
        assert_eq!(r.rank_counts, vec![0, 1]);
        assert_eq!(r.dp_counts[4], 1);
        assert_eq!(competition_rank(&[24, 23, 3], 1), 2);
    }

    #[test]
    fn tie_for_the_top() {
        let r = risk_analysis(&[rec(&[4, 4, 1], 1)]).unwrap();
        assert_eq!((r.high_risk, r.tied_top), (1, 1));
        assert_eq!(r.rank_counts, vec![1]);
        assert_eq!(r.dp_counts[0], 1);
    }

    #[test]
    fn far_behind_goes_to_last_bucket() {
        let r = risk_analysis(&[rec(&[10, 2, 5], 1)]).unwrap();
        assert_eq!(r.rank_counts, vec![0, 0, 1]);
        assert_eq!(r.dp_counts[DP_BUCKETS], 1);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("rank,3,1"));
        assert!(text.contains("dp,20+,1"));
        assert_eq!(text.lines().count(), 1 + 3 + DP_BUCKETS + 1);
    }

    #[test]
    fn bad_truth_rejected() {
        assert!(risk_analysis(&[rec(&[1, 0], 2)]).is_err());
    }
}
