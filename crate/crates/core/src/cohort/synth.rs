//! Seeded synthetic cohort with a planted latent health factor.
//!
//! Each participant has a persistent resilience `u ~ N(0, 1)` and a
//! per-wave random walk `e` (`e2 ~ N(0, 0.3)`, then `N(-0.1, 0.3)` steps).
//! Latent health at a wave is
//!
//! ```text
//! h = u + 0.15 (education - 2.5) - 0.06 (age - 70) - 0.004 max(0, age - 78)^2 + e
//! ```
//!
//! The timed tests are driven by `h`:
//!
//! * gait speed `0.95 + 0.25 h + N(0, 0.1)` m/s over the 2.44 m course,
//!   "unable" below 0.2 m/s;
//! * chair-stand time `12 - 2.5 h + N(0, 1.5)` s, floored near 5 s,
//!   "unable" when `h + N(0, 0.4) < -3`;
//! * balance holds succeed when `h + N(0, 0.6)` clears -2.6 (side by side),
//!   -1.8 (semi tandem), and 0 / -1.2 (full / partial full tandem).
//!
//! Grip strength is `34 + 5.5 h - 11 female + N(0, 4)` kg, self-rated health
//! `round(2.8 - 0.9 h + N(0, 0.7))` clamped to 1..=5, and binary difficulty
//! items are thresholded `-s h + N(0, 1)` with item-specific slope `s` and
//! cutoff. Remaining answers are weak functions of `h` and age, or noise.
//! About 11% of answer cells (all but age and gender) are blanked at random
//! and 3% of wave visits lack the timed tests altogether.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::ingest::{ParticipantWaveRecord, MEASURED_WAVES};
use super::schema::{FeatureKind, FeatureSchema};
use crate::error::{Error, Result};
use crate::sppb::{
    BalanceMeasurement, ChairStandMeasurement, GaitMeasurement, Hold, Timed, EIGHT_FOOT_COURSE_M,
};

pub const ANSWER_MISSING_RATE: f64 = 0.11;
pub const VISIT_UNMEASURED_RATE: f64 = 0.03;

struct Person {
    age2: f64,
    female: bool,
    education: f64,
    marital: f64,
    n_children: f64,
    height: f64,
    ever_smoked: bool,
    drinks: bool,
    resilience: f64,
    walk: [f64; 3],
}

fn normal(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z * sd
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn ordinal(v: f64, lo: f64, hi: f64) -> f64 {
    v.round().clamp(lo, hi)
}

impl Person {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        let age2 = rng.random_range(55.0..=85.0);
        let female = rng.random_bool(0.55);
        let education = f64::from(rng.random_range(1..=4u8));
        let widowed = 0.05 + 0.012 * (age2 - 55.0);
        let u: f64 = rng.random();
        let marital = if u < widowed {
            4.0
        } else if u < widowed + 0.55 {
            1.0
        } else if u < widowed + 0.63 {
            2.0
        } else if u < widowed + 0.83 {
            3.0
        } else {
            5.0
        };
        let n_children = f64::from(rng.random_range(0..=4u8));
        let height = 1.75 - 0.13 * flag(female) + normal(rng, 0.06);
        let ever_smoked = rng.random_bool(0.5);
        let drinks = rng.random_bool(0.7);
        let resilience = normal(rng, 1.0);
        let step = Normal::new(-0.1, 0.3).expect("valid normal");
        let e2 = normal(rng, 0.3);
        let e4 = e2 + step.sample(rng);
        let e6 = e4 + step.sample(rng);
        Self {
            age2,
            female,
            education,
            marital,
            n_children,
            height,
            ever_smoked,
            drinks,
            resilience,
            walk: [e2, e4, e6],
        }
    }

    fn age_at(&self, wave: u8) -> f64 {
        self.age2 + 2.0 * f64::from(wave - 2)
    }

    fn health_at(&self, slot: usize, age: f64) -> f64 {
        let late = (age - 78.0).max(0.0);
        self.resilience + 0.15 * (self.education - 2.5) - 0.06 * (age - 70.0) - 0.004 * late * late
            + self.walk[slot]
    }
}

fn measure(
    rng: &mut ChaCha8Rng,
    h: f64,
) -> (BalanceMeasurement, GaitMeasurement, ChairStandMeasurement) {
    let hold_if = |rng: &mut ChaCha8Rng, cut: f64| -> f64 {
        if h + normal(rng, 0.6) > cut {
            10.0
        } else {
            rng.random_range(0.0..10.0)
        }
    };
    let sbs = hold_if(rng, -2.6);
    let semi = if sbs < 10.0 {
        Hold::NotAttempted
    } else {
        Hold::Held(hold_if(rng, -1.8))
    };
    let full = match semi {
        Hold::Held(s) if s >= 10.0 => {
            let z = h + normal(rng, 0.6);
            Hold::Held(if z > 0.0 {
                10.0
            } else if z > -1.2 {
                rng.random_range(3.0..10.0)
            } else {
                rng.random_range(0.0..3.0)
            })
        }
        _ => Hold::NotAttempted,
    };
    let balance = BalanceMeasurement {
        side_by_side: Hold::Held(sbs),
        semi_tandem: semi,
        full_tandem: full,
    };

    let speed = 0.95 + 0.25 * h + normal(rng, 0.1);
    let gait = GaitMeasurement {
        time: if speed < 0.2 {
            Timed::Unable
        } else {
            Timed::Completed(round_to(EIGHT_FOOT_COURSE_M / speed, 2))
        },
        course_length_m: EIGHT_FOOT_COURSE_M,
    };

    let unable = h + normal(rng, 0.4) < -3.0;
    let mut t = 12.0 - 2.5 * h + normal(rng, 1.5);
    if t < 5.0 {
        t = 5.0 + normal(rng, 0.5).abs();
    }
    let chair = ChairStandMeasurement {
        time: if unable {
            Timed::Unable
        } else {
            Timed::Completed(round_to(t, 2))
        },
    };
    (balance, gait, chair)
}

fn round_to(x: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (x * s).round() / s
}

/// Draw an answer for the named feature.
fn answer(
    rng: &mut ChaCha8Rng,
    name: &str,
    kind: FeatureKind,
    p: &Person,
    h: f64,
    age: f64,
) -> f64 {
    let thresh = |rng: &mut ChaCha8Rng, signal: f64, cut: f64| flag(signal + normal(rng, 1.0) > cut);
    let older = age - 70.0;
    match name {
        "age" => round_to(age, 1),
        "gender" => flag(p.female),
        "education" => p.education,
        "marital_status" => p.marital,
        "mother_alive" => flag(age + normal(rng, 6.0) < 68.0),
        "father_alive" => flag(age + normal(rng, 6.0) < 64.0),
        "mother_age" | "father_age" => round_to(78.0 + 0.3 * older + normal(rng, 9.0), 0),
        "n_children" => p.n_children,
        "household_members" => 1.0 + flag(p.marital <= 2.0) + flag(rng.random_bool(0.1)),
        "self_rated_health" => ordinal(2.8 - 0.9 * h + normal(rng, 0.7), 1.0, 5.0),
        "dental_health" => ordinal(2.8 - 0.3 * h + normal(rng, 1.0), 1.0, 5.0),
        "shortness_of_breath" | "persistent_wheezing" | "pain_problems" | "leg_pain" => {
            thresh(rng, -0.5 * h, 1.3)
        }
        "joint_replacement" | "hip_replacement" => thresh(rng, 0.03 * older - 0.2 * h, 1.6),
        "cesd_score" => ordinal(1.4 - 0.7 * h + normal(rng, 1.3), 0.0, 8.0),
        "memory_problems" => thresh(rng, 0.04 * older - 0.2 * h, 1.8),
        "memory_rating" => ordinal(2.7 + 0.03 * older - 0.2 * h + normal(rng, 0.8), 1.0, 5.0),
        "fallen_last_2y" => thresh(rng, -0.6 * h, 1.0),
        "n_falls" => {
            if rng.random_bool(0.2) {
                f64::from(rng.random_range(1..=4u8))
            } else {
                0.0
            }
        }
        "fall_injury" => flag(rng.random_bool(0.08)),
        "fall_alarm" => thresh(rng, -0.8 * h, 2.2),
        "grip_strength_kg" => round_to((34.0 + 5.5 * h - 11.0 * flag(p.female) + normal(rng, 4.0)).max(2.0), 1),
        "health_limits_work" => thresh(rng, -0.8 * h, 0.9),
        "ever_smoked" => flag(p.ever_smoked),
        "smokes_now" => flag(p.ever_smoked && rng.random_bool(0.3)),
        "cigarettes_per_day" => {
            if p.ever_smoked && rng.random_bool(0.3) {
                f64::from(rng.random_range(5..=25u8))
            } else {
                0.0
            }
        }
        "drinks_alcohol" => flag(p.drinks),
        "drinks_per_week" => {
            if p.drinks {
                f64::from(rng.random_range(0..=14u8))
            } else {
                0.0
            }
        }
        "social_participation" => thresh(rng, 0.4 * h, 0.0),
        "working_status" => {
            if age < 65.0 && rng.random_bool(0.5) {
                1.0
            } else if rng.random_bool(0.1) {
                2.0
            } else {
                3.0
            }
        }
        "vigorous_activity" | "moderate_activity" | "light_activity" => {
            ordinal(2.5 - 0.6 * h + normal(rng, 0.8), 1.0, 4.0)
        }
        "height_m" => round_to(p.height, 3),
        "bmi" => round_to(27.5 - 0.6 * h + normal(rng, 4.0), 1),
        "systolic_bp" => round_to(130.0 + 0.4 * older + normal(rng, 15.0), 0),
        "diastolic_bp" => round_to(75.0 + normal(rng, 10.0), 0),
        n if n.starts_with("ever_") => thresh(rng, -0.35 * h + 0.03 * older, 1.2),
        n if n.starts_with("recent_") => thresh(rng, -0.3 * h, 2.0),
        n if n.starts_with("difficulty_") => thresh(rng, -0.9 * h, 1.3),
        n if n.starts_with("adl_") => thresh(rng, -h, 2.0),
        n if n.starts_with("iadl_") => thresh(rng, -h, 1.7),
        n if n.starts_with("eyesight") || n == "hearing" => {
            ordinal(2.5 - 0.3 * h + 0.02 * older + normal(rng, 0.9), 1.0, 5.0)
        }
        _ => match kind {
            FeatureKind::Binary => flag(rng.random_bool(0.2)),
            FeatureKind::Ordinal => f64::from(rng.random_range(1..=5u8)),
            FeatureKind::Continuous => normal(rng, 1.0),
            FeatureKind::Nominal => unreachable!("nominal features resolved by caller"),
        },
    }
}

/// Deterministic cohort of `n_participants`, each observed at waves 2, 4 and 6.
pub fn generate_synthetic_cohort(
    seed: u64,
    n_participants: usize,
    schema: &FeatureSchema,
) -> Result<Vec<ParticipantWaveRecord>> {
    if n_participants == 0 {
        return Err(Error::InvalidSpec("synthetic cohort needs at least one participant".into()));
    }
    let age_idx = schema
        .index_of("age")
        .ok_or_else(|| Error::InvalidSchema("schema must define an `age` feature".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = (n_participants.max(10) - 1).to_string().len().max(6);
    let mut records = Vec::with_capacity(n_participants * MEASURED_WAVES.len());
    for i in 0..n_participants {
        let person = Person::draw(&mut rng);
        for (slot, &wave) in MEASURED_WAVES.iter().enumerate() {
            let age = person.age_at(wave);
            let h = person.health_at(slot, age);
            let (balance, gait, chair) = measure(&mut rng, h);
            let measured = !rng.random_bool(VISIT_UNMEASURED_RATE);
            let mut values = vec![f64::NAN; schema.len()];
            for (j, f) in schema.features.iter().enumerate() {
                if f.source.is_some() {
                    continue;
                }
                let v = if f.kind == FeatureKind::Nominal && f.name != "marital_status" {
                    let k = rng.random_range(0..f.categories.len());
                    f.categories[k].code
                } else {
                    answer(&mut rng, &f.name, f.kind, &person, h, age)
                };
                let keep = j == age_idx || f.name == "gender" || !rng.random_bool(ANSWER_MISSING_RATE);
                values[j] = if keep { v } else { f64::NAN };
            }
            let gait = GaitMeasurement {
                course_length_m: schema.gait_course_m,
                ..gait
            };
            records.push(ParticipantWaveRecord {
                participant_id: format!("S{i:0width$}"),
                wave,
                age: values[age_idx],
                values,
                balance: measured.then_some(balance),
                gait: measured.then_some(gait),
                chair: measured.then_some(chair),
            });
        }
    }
    Ok(records)
}
