use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::ingest::ParticipantWaveRecord;
use super::schema::{DerivedScore, FeatureSchema, FeatureSource, MeasuredTime};
use crate::error::{Error, Result};
use crate::preprocess::{expand_schema, one_hot_encode};
use crate::scalar::Real;
use crate::sppb::{CutoffTable, Hold, SppbScore};

/// Years between consecutive measured waves.
pub const WAVE_GAP: u8 = 2;

pub const TARGET_COLUMN: &str = "target_sppb_total";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub participant_id: String,
    pub feature_wave: u8,
    pub target_wave: u8,
}

/// Inclusive age window applied at the feature wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeBounds {
    pub min_age: f64,
    pub max_age: f64,
}

impl Default for AgeBounds {
    fn default() -> Self {
        Self {
            min_age: 55.0,
            max_age: 85.0,
        }
    }
}

/// Feature matrix over the expanded schema with the next-wave SPPB total as target.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedDataset<T: Real> {
    pub schema: FeatureSchema,
    pub x: Array2<T>,
    pub y: Array1<T>,
    pub provenance: Vec<Provenance>,
}

impl<T: Real> SupervisedDataset<T> {
    pub fn new(
        schema: FeatureSchema,
        x: Array2<T>,
        y: Array1<T>,
        provenance: Vec<Provenance>,
    ) -> Result<Self> {
        if x.nrows() != y.len() || y.len() != provenance.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows, {} targets, {} provenance entries",
                x.nrows(),
                y.len(),
                provenance.len()
            )));
        }
        if x.ncols() != schema.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} columns but {} schema features",
                x.ncols(),
                schema.len()
            )));
        }
        if let Some(bad) = y
            .iter()
            .find(|v| !(v.is_finite() && **v >= T::zero() && **v <= T::lit(12.0)))
        {
            return Err(Error::InvalidScore(format!("target {bad} outside [0, 12]")));
        }
        Ok(Self {
            schema,
            x,
            y,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.schema.names().map(str::to_owned).collect()
    }

    /// Keep only the given columns, in ascending column order.
    pub fn select_columns(&self, columns: &[usize]) -> Self {
        let mut cols = columns.to_vec();
        cols.sort_unstable();
        cols.dedup();
        Self {
            schema: self.schema.select(&cols),
            x: self.x.select(Axis(1), &cols),
            y: self.y.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Columns named in `names`; unknown names are an error.
    pub fn column_indices(&self, names: &[String]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.schema
                    .index_of(n)
                    .ok_or_else(|| Error::InvalidSchema(format!("unknown feature `{n}`")))
            })
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        let mut header = vec!["participant_id".to_owned(), "feature_wave".into(), "target_wave".into()];
        header.extend(self.feature_names());
        header.push(TARGET_COLUMN.into());
        w.write_record(&header)?;
        for (i, p) in self.provenance.iter().enumerate() {
            let mut row = vec![
                p.participant_id.clone(),
                p.feature_wave.to_string(),
                p.target_wave.to_string(),
            ];
            row.extend(self.x.row(i).iter().map(|v| {
                if v.is_missing() {
                    String::new()
                } else {
                    v.to_string()
                }
            }));
            row.push(self.y[i].to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Read a file written by [`write_csv`](Self::write_csv) against its expanded schema.
    pub fn read_csv(path: &Path, schema: &FeatureSchema) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(std::io::BufReader::new(file));
        let header = rdr.headers()?.clone();
        let expected = 3 + schema.len() + 1;
        let names_match = header.len() == expected
            && header
                .iter()
                .skip(3)
                .take(schema.len())
                .zip(schema.names())
                .all(|(a, b)| a == b);
        if !names_match {
            return Err(Error::Format {
                path: path.to_owned(),
                message: "dataset header does not match the expanded schema".into(),
            });
        }
        let mut data = Vec::new();
        let mut y = Vec::new();
        let mut provenance = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |c: usize| -> Result<T> {
                let t = rec.get(c).unwrap_or("").trim();
                if t.is_empty() {
                    return Ok(T::missing());
                }
                let v: f64 = t.parse().map_err(|_| Error::NonNumeric {
                    row: i + 1,
                    column: header[c].to_owned(),
                    value: t.to_owned(),
                })?;
                Ok(T::lit(v))
            };
            let wave = |c: usize| -> Result<u8> {
                rec.get(c).unwrap_or("").trim().parse().map_err(|_| Error::NonNumeric {
                    row: i + 1,
                    column: header[c].to_owned(),
                    value: rec.get(c).unwrap_or("").to_owned(),
                })
            };
            provenance.push(Provenance {
                participant_id: rec.get(0).unwrap_or("").to_owned(),
                feature_wave: wave(1)?,
                target_wave: wave(2)?,
            });
            for c in 3..3 + schema.len() {
                data.push(num(c)?);
            }
            y.push(num(expected - 1)?);
        }
        let x = Array2::from_shape_vec((y.len(), schema.len()), data)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Self::new(schema.clone(), x, Array1::from(y), provenance)
    }
}

fn hold_seconds(h: Hold) -> f64 {
    match h {
        Hold::Held(s) => s,
        Hold::NotAttempted => 0.0,
    }
}

/// Raw (pre one-hot) feature vector of a record, with measured times and
/// derived scores filled in.
fn feature_row(
    record: &ParticipantWaveRecord,
    schema: &FeatureSchema,
    cutoffs: &CutoffTable,
) -> Result<Vec<f64>> {
    let balance = record.balance.map(|b| cutoffs.score_balance(&b)).transpose()?;
    let gait = record.gait.map(|g| cutoffs.score_gait(&g)).transpose()?;
    let chair = record.chair.map(|c| cutoffs.score_chair(&c)).transpose()?;
    let total = match (balance, gait, chair) {
        (Some(b), Some(g), Some(c)) => Some(crate::sppb::total_sppb(b, g, c)?.total()),
        _ => None,
    };
    let score = |s: Option<u8>| s.map_or(f64::NAN, f64::from);
    let mut row = record.values.clone();
    for (j, f) in schema.features.iter().enumerate() {
        row[j] = match f.source {
            None => record.values[j],
            Some(FeatureSource::Measured(m)) => match m {
                MeasuredTime::SideBySide => record.balance.map(|b| hold_seconds(b.side_by_side)),
                MeasuredTime::SemiTandem => record.balance.map(|b| hold_seconds(b.semi_tandem)),
                MeasuredTime::FullTandem => record.balance.map(|b| hold_seconds(b.full_tandem)),
                MeasuredTime::Gait => record.gait.and_then(|g| g.time.completed_seconds()),
                MeasuredTime::ChairStand => record.chair.and_then(|c| c.time.completed_seconds()),
            }
            .unwrap_or(f64::NAN),
            Some(FeatureSource::Derived(d)) => match d {
                DerivedScore::BalanceScore => score(balance),
                DerivedScore::GaitScore => score(gait),
                DerivedScore::ChairScore => score(chair),
                DerivedScore::TotalScore => score(total),
            },
        };
    }
    Ok(row)
}

/// SPPB score of a record with complete measurements.
pub fn record_score(record: &ParticipantWaveRecord, cutoffs: &CutoffTable) -> Result<Option<SppbScore>> {
    match (&record.balance, &record.gait, &record.chair) {
        (Some(b), Some(g), Some(c)) => cutoffs.score(b, g, c).map(Some),
        _ => Ok(None),
    }
}

/// Pair each participant's answers at a measured wave with the SPPB total
/// at the next measured wave (2 → 4 and 4 → 6).
///
/// Samples are ordered by first appearance of the participant, then by
/// feature wave. Pairs without a complete target-wave measurement, and
/// pairs whose feature-wave age falls outside `ages`, are dropped.
pub fn build_wave_pairs<T: Real>(
    records: &[ParticipantWaveRecord],
    schema: &FeatureSchema,
    cutoffs: &CutoffTable,
    ages: AgeBounds,
) -> Result<SupervisedDataset<T>> {
    let mut order: Vec<&str> = Vec::new();
    let mut by_participant: BTreeMap<&str, BTreeMap<u8, &ParticipantWaveRecord>> = BTreeMap::new();
    for r in records {
        if r.values.len() != schema.len() {
            return Err(Error::ShapeMismatch(format!(
                "record for `{}` has {} values, schema has {} features",
                r.participant_id,
                r.values.len(),
                schema.len()
            )));
        }
        let waves = by_participant.entry(r.participant_id.as_str()).or_insert_with(|| {
            order.push(r.participant_id.as_str());
            BTreeMap::new()
        });
        if waves.insert(r.wave, r).is_some() {
            return Err(Error::InvalidRecord {
                row: 0,
                message: format!("participant `{}` has two rows for wave {}", r.participant_id, r.wave),
            });
        }
    }

    let mut raw = Vec::new();
    let mut y = Vec::new();
    let mut provenance = Vec::new();
    for id in order {
        let waves = &by_participant[id];
        for (&w, feat) in waves {
            let Some(target) = waves.get(&(w + WAVE_GAP)) else {
                continue;
            };
            if !(feat.age >= ages.min_age && feat.age <= ages.max_age) {
                continue;
            }
            let Some(score) = record_score(target, cutoffs)? else {
                continue;
            };
            raw.extend(feature_row(feat, schema, cutoffs)?);
            y.push(T::from_u8(score.total()).expect("score fits"));
            provenance.push(Provenance {
                participant_id: id.to_owned(),
                feature_wave: w,
                target_wave: target.wave,
            });
        }
    }
    if y.is_empty() {
        return Err(Error::EmptyDataset("wave pairing and age filtering".into()));
    }
    let raw = Array2::from_shape_vec((y.len(), schema.len()), raw)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?
        .mapv(T::lit);
    let (x, expanded) = one_hot_encode(&raw, schema)?;
    debug_assert_eq!(expanded, expand_schema(schema));
    SupervisedDataset::new(expanded, x, Array1::from(y), provenance)
}
