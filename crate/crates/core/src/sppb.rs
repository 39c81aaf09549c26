//! Short Physical Performance Battery scoring.
//!
//! Three timed sub-tests (balance stands, a timed walk and five chair rises)
//! are converted to partial scores of 0–4 each and summed to a 0–12 total.
//! All cutoffs live in [`CutoffTable`] so that alternative tables can be
//! loaded from a run configuration; [`CutoffTable::default`] holds the
//! standard published values.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest hold the balance protocol times; longer raw values are clock artifacts.
pub const BALANCE_CAP_S: f64 = 10.0;

/// Course length the standard gait cutoffs are defined for.
pub const STANDARD_COURSE_M: f64 = 4.0;

/// Eight-foot course used by the cohort study's walking test.
pub const EIGHT_FOOT_COURSE_M: f64 = 2.44;

/// Result of a single balance stance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Hold {
    Held(f64),
    NotAttempted,
}

impl Hold {
    /// Build a hold from a raw timer value, capping it at [`BALANCE_CAP_S`].
    pub fn capped(seconds: f64) -> Result<Self> {
        if !seconds.is_finite() || seconds < 0.0 {
            return Err(Error::InvalidMeasurement(format!(
                "balance hold time {seconds} s must be finite and non-negative"
            )));
        }
        Ok(Hold::Held(seconds.min(BALANCE_CAP_S)))
    }

    fn seconds(self) -> Result<Option<f64>> {
        match self {
            Hold::NotAttempted => Ok(None),
            Hold::Held(s) if s.is_finite() && s >= 0.0 => Ok(Some(s)),
            Hold::Held(s) => Err(Error::InvalidMeasurement(format!(
                "balance hold time {s} s must be finite and non-negative"
            ))),
        }
    }
}

/// Outcome of a timed task that can be abandoned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Timed {
    Completed(f64),
    Unable,
}

impl Timed {
    fn seconds(self, what: &str) -> Result<Option<f64>> {
        match self {
            Timed::Unable => Ok(None),
            Timed::Completed(s) if s.is_finite() && s > 0.0 => Ok(Some(s)),
            Timed::Completed(s) => Err(Error::InvalidMeasurement(format!(
                "{what} time {s} s must be finite and positive"
            ))),
        }
    }

    pub fn completed_seconds(self) -> Option<f64> {
        match self {
            Timed::Completed(s) => Some(s),
            Timed::Unable => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceMeasurement {
    pub side_by_side: Hold,
    pub semi_tandem: Hold,
    pub full_tandem: Hold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitMeasurement {
    pub time: Timed,
    pub course_length_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChairStandMeasurement {
    pub time: Timed,
}

/// Partial and total scores; construct through [`total_sppb`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SppbScore {
    balance: u8,
    gait: u8,
    chair: u8,
    total: u8,
}

impl SppbScore {
    pub fn balance(&self) -> u8 {
        self.balance
    }
    pub fn gait(&self) -> u8 {
        self.gait
    }
    pub fn chair(&self) -> u8 {
        self.chair
    }
    pub fn total(&self) -> u8 {
        self.total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SppbCategory {
    Good,
    Reduced,
    VeryPoor,
}

impl fmt::Display for SppbCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SppbCategory::Good => "good",
            SppbCategory::Reduced => "reduced",
            SppbCategory::VeryPoor => "very_poor",
        })
    }
}

/// Scoring cutoffs. Gait cutoffs are expressed for the
/// `reference_course_m` course and rescaled proportionally for other
/// course lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffTable {
    /// Hold needed for the side-by-side, semi-tandem and full-credit full-tandem points.
    pub balance_hold_s: f64,
    /// Shortest full-tandem hold that still earns one point.
    pub full_tandem_partial_s: f64,
    pub reference_course_m: f64,
    /// Upper edges of the 4, 3 and 2 point gait bands at the reference course.
    pub gait_s: [f64; 3],
    /// Upper edges of the 4, 3, 2 and 1 point chair-stand bands.
    pub chair_s: [f64; 4],
}

impl Default for CutoffTable {
    fn default() -> Self {
        Self {
            balance_hold_s: 10.0,
            full_tandem_partial_s: 3.0,
            reference_course_m: STANDARD_COURSE_M,
            gait_s: [4.82, 6.20, 8.70],
            chair_s: [11.19, 13.69, 16.69, 60.0],
        }
    }
}

impl CutoffTable {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        let increasing = |xs: &[f64]| xs.windows(2).all(|w| w[0] < w[1]);
        if !positive(self.balance_hold_s)
            || !positive(self.full_tandem_partial_s)
            || self.full_tandem_partial_s > self.balance_hold_s
        {
            return Err(Error::InvalidScore(
                "balance cutoffs must be positive with partial <= full hold".into(),
            ));
        }
        if !positive(self.reference_course_m) {
            return Err(Error::InvalidScore("reference course must be positive".into()));
        }
        if !self.gait_s.iter().all(|&x| positive(x)) || !increasing(&self.gait_s) {
            return Err(Error::InvalidScore("gait cutoffs must be positive and increasing".into()));
        }
        if !self.chair_s.iter().all(|&x| positive(x)) || !increasing(&self.chair_s) {
            return Err(Error::InvalidScore(
                "chair cutoffs must be positive and increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn score_balance(&self, m: &BalanceMeasurement) -> Result<u8> {
        let full_hold = |h: Hold| -> Result<u8> {
            Ok(match h.seconds()? {
                Some(s) if s >= self.balance_hold_s => 1,
                _ => 0,
            })
        };
        let full_tandem = match m.full_tandem.seconds()? {
            Some(s) if s >= self.balance_hold_s => 2,
            Some(s) if s >= self.full_tandem_partial_s => 1,
            _ => 0,
        };
        Ok(full_hold(m.side_by_side)? + full_hold(m.semi_tandem)? + full_tandem)
    }

    /// Gait cutoffs rescaled to `course_length_m`.
    pub fn gait_cutoffs(&self, course_length_m: f64) -> Result<[f64; 3]> {
        if !course_length_m.is_finite() || course_length_m <= 0.0 {
            return Err(Error::InvalidMeasurement(format!(
                "course length {course_length_m} m must be positive"
            )));
        }
        let ratio = course_length_m / self.reference_course_m;
        Ok(self.gait_s.map(|c| c * ratio))
    }

    pub fn score_gait(&self, m: &GaitMeasurement) -> Result<u8> {
        let [fast, mid, slow] = self.gait_cutoffs(m.course_length_m)?;
        Ok(match m.time.seconds("gait")? {
            None => 0,
            Some(t) if t < fast => 4,
            Some(t) if t <= mid => 3,
            Some(t) if t <= slow => 2,
            Some(_) => 1,
        })
    }

    pub fn score_chair(&self, m: &ChairStandMeasurement) -> Result<u8> {
        let [c4, c3, c2, c1] = self.chair_s;
        Ok(match m.time.seconds("chair stand")? {
            None => 0,
            Some(t) if t <= c4 => 4,
            Some(t) if t <= c3 => 3,
            Some(t) if t <= c2 => 2,
            Some(t) if t <= c1 => 1,
            Some(_) => 0,
        })
    }

    pub fn score(
        &self,
        balance: &BalanceMeasurement,
        gait: &GaitMeasurement,
        chair: &ChairStandMeasurement,
    ) -> Result<SppbScore> {
        total_sppb(
            self.score_balance(balance)?,
            self.score_gait(gait)?,
            self.score_chair(chair)?,
        )
    }
}

pub fn score_balance(m: &BalanceMeasurement) -> Result<u8> {
    CutoffTable::default().score_balance(m)
}

pub fn score_gait(m: &GaitMeasurement) -> Result<u8> {
    CutoffTable::default().score_gait(m)
}

pub fn score_chair(m: &ChairStandMeasurement) -> Result<u8> {
    CutoffTable::default().score_chair(m)
}

pub fn total_sppb(balance: u8, gait: u8, chair: u8) -> Result<SppbScore> {
    for (name, v) in [("balance", balance), ("gait", gait), ("chair", chair)] {
        if v > 4 {
            return Err(Error::InvalidScore(format!("{name} partial score {v} exceeds 4")));
        }
    }
    Ok(SppbScore {
        balance,
        gait,
        chair,
        total: balance + gait + chair,
    })
}

pub fn classify_sppb(total: u8) -> Result<SppbCategory> {
    match total {
        10..=12 => Ok(SppbCategory::Good),
        4..=9 => Ok(SppbCategory::Reduced),
        0..=3 => Ok(SppbCategory::VeryPoor),
        _ => Err(Error::InvalidScore(format!("total {total} exceeds 12"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bal(a: Option<f64>, b: Option<f64>, c: Option<f64>) -> BalanceMeasurement {
        let h = |x: Option<f64>| x.map_or(Hold::NotAttempted, Hold::Held);
        BalanceMeasurement {
            side_by_side: h(a),
            semi_tandem: h(b),
            full_tandem: h(c),
        }
    }

    fn gait(t: Option<f64>, d: f64) -> GaitMeasurement {
        GaitMeasurement {
            time: t.map_or(Timed::Unable, Timed::Completed),
            course_length_m: d,
        }
    }

    fn chair(t: Option<f64>) -> ChairStandMeasurement {
        ChairStandMeasurement {
            time: t.map_or(Timed::Unable, Timed::Completed),
        }
    }

    #[test]
    fn balance_examples() {
        assert_eq!(score_balance(&bal(Some(10.0), Some(10.0), Some(10.0))).unwrap(), 4);
        assert_eq!(score_balance(&bal(None, None, None)).unwrap(), 0);
        assert_eq!(score_balance(&bal(Some(10.0), Some(10.0), Some(5.0))).unwrap(), 3);
        assert_eq!(score_balance(&bal(Some(9.99), Some(10.0), Some(2.99))).unwrap(), 1);
    }

    #[test]
    fn not_attempted_differs_from_zero_hold_only_in_validity() {
        assert_eq!(score_balance(&bal(Some(0.0), Some(0.0), Some(0.0))).unwrap(), 0);
        assert_ne!(Hold::Held(0.0), Hold::NotAttempted);
    }

    #[test]
    fn negative_hold_is_rejected() {
        assert!(matches!(
            score_balance(&bal(Some(-1.0), None, None)),
            Err(Error::InvalidMeasurement(_))
        ));
        assert!(Hold::capped(-0.5).is_err());
        assert_eq!(Hold::capped(12.3).unwrap(), Hold::Held(10.0));
    }

    #[test]
    fn gait_examples() {
        assert_eq!(score_gait(&gait(None, 4.0)).unwrap(), 0);
        assert_eq!(score_gait(&gait(Some(3.0), 2.44)).unwrap(), 3);
        assert_eq!(score_gait(&gait(Some(10.0), 4.0)).unwrap(), 1);
        let cuts = CutoffTable::default().gait_cutoffs(2.44).unwrap();
        for (got, want) in cuts.iter().zip([2.9402, 3.782, 5.307]) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn gait_rejects_bad_course_and_time() {
        assert!(score_gait(&gait(Some(5.0), 0.0)).is_err());
        assert!(score_gait(&gait(Some(5.0), -4.0)).is_err());
        assert!(score_gait(&gait(Some(0.0), 4.0)).is_err());
        assert!(score_gait(&gait(Some(f64::NAN), 4.0)).is_err());
    }

    #[test]
    fn chair_examples() {
        assert_eq!(score_chair(&chair(None)).unwrap(), 0);
        assert_eq!(score_chair(&chair(Some(11.19))).unwrap(), 4);
        assert_eq!(score_chair(&chair(Some(15.0))).unwrap(), 2);
        assert_eq!(score_chair(&chair(Some(60.0))).unwrap(), 1);
        assert_eq!(score_chair(&chair(Some(60.01))).unwrap(), 0);
        assert!(score_chair(&chair(Some(-2.0))).is_err());
    }

    #[test]
    fn totals_and_classes() {
        assert_eq!(total_sppb(4, 4, 4).unwrap().total(), 12);
        assert_eq!(total_sppb(0, 0, 0).unwrap().total(), 0);
        assert_eq!(total_sppb(3, 2, 1).unwrap().total(), 6);
        assert!(total_sppb(5, 0, 0).is_err());
        assert_eq!(classify_sppb(12).unwrap(), SppbCategory::Good);
        assert_eq!(classify_sppb(10).unwrap(), SppbCategory::Good);
        assert_eq!(classify_sppb(9).unwrap(), SppbCategory::Reduced);
        assert_eq!(classify_sppb(4).unwrap(), SppbCategory::Reduced);
        assert_eq!(classify_sppb(3).unwrap(), SppbCategory::VeryPoor);
        assert!(classify_sppb(13).is_err());
    }

    #[test]
    fn classification_bands_are_contiguous() {
        let cats: Vec<_> = (0..=12).map(|t| classify_sppb(t).unwrap()).collect();
        let changes = cats.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(changes, 2);
        assert_eq!(cats[0], SppbCategory::VeryPoor);
        assert_eq!(cats[12], SppbCategory::Good);
    }

    #[test]
    fn default_table_validates() {
        CutoffTable::default().validate().unwrap();
        let mut bad = CutoffTable::default();
        bad.chair_s = [13.0, 12.0, 16.0, 60.0];
        assert!(bad.validate().is_err());
    }

    fn hold() -> impl Strategy<Value = Option<f64>> {
        prop_oneof![Just(None), (0.0f64..=10.0).prop_map(Some)]
    }

    fn timed() -> impl Strategy<Value = Option<f64>> {
        prop_oneof![Just(None), (0.1f64..90.0).prop_map(Some)]
    }

    proptest! {
        #[test]
        fn total_in_range(a in hold(), b in hold(), c in hold(), g in timed(), ch in timed(),
                          d in prop_oneof![Just(2.44), Just(4.0)]) {
            let t = CutoffTable::default();
            let s = t.score(&bal(a, b, c), &gait(g, d), &chair(ch)).unwrap();
            prop_assert!(s.total() <= 12);
            prop_assert_eq!(s.total(), s.balance() + s.gait() + s.chair());
        }

        #[test]
        fn gait_is_scale_invariant(t in 0.5f64..20.0, d in 1.0f64..6.0, c in 0.25f64..4.0) {
            let a = score_gait(&gait(Some(t), d)).unwrap();
            let b = score_gait(&gait(Some(t * c), d * c)).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn scores_monotone_in_time(t in 0.1f64..80.0, dt in 0.0f64..10.0) {
            prop_assert!(score_gait(&gait(Some(t + dt), 4.0)).unwrap()
                <= score_gait(&gait(Some(t), 4.0)).unwrap());
            prop_assert!(score_chair(&chair(Some(t + dt))).unwrap()
                <= score_chair(&chair(Some(t))).unwrap());
        }

        #[test]
        fn balance_monotone_in_hold(h in 0.0f64..10.0, dh in 0.0f64..10.0) {
            let hi = (h + dh).min(10.0);
            for slot in 0..3 {
                let mut lo_m = [None, None, None];
                let mut hi_m = [None, None, None];
                lo_m[slot] = Some(h);
                hi_m[slot] = Some(hi);
                prop_assert!(score_balance(&bal(lo_m[0], lo_m[1], lo_m[2])).unwrap()
                    <= score_balance(&bal(hi_m[0], hi_m[1], hi_m[2])).unwrap());
            }
        }
    }
}
