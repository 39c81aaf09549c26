use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schema::{FeatureSchema, FeatureSource, MeasuredTime};
use crate::error::{Error, Result};
use crate::sppb::{BalanceMeasurement, ChairStandMeasurement, GaitMeasurement, Hold, Timed};

/// Waves in which the timed tests were administered.
pub const MEASURED_WAVES: [u8; 3] = [2, 4, 6];

pub const ID_COLUMN: &str = "participant_id";
pub const WAVE_COLUMN: &str = "wave";

/// One participant's answers and timed-test results at one wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantWaveRecord {
    pub participant_id: String,
    pub wave: u8,
    pub age: f64,
    /// Answer values aligned with the schema's features; NaN when missing and
    /// for features that are not questionnaire answers.
    pub values: Vec<f64>,
    pub balance: Option<BalanceMeasurement>,
    pub gait: Option<GaitMeasurement>,
    pub chair: Option<ChairStandMeasurement>,
}

impl ParticipantWaveRecord {
    pub fn value(&self, schema: &FeatureSchema, name: &str) -> Option<f64> {
        schema.index_of(name).map(|j| self.values[j])
    }

    pub fn has_complete_sppb(&self) -> bool {
        self.balance.is_some() && self.gait.is_some() && self.chair.is_some()
    }
}

/// Where to find a schema feature in the cohort file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Column(String),
    /// `false` in a config file: the extract has no such column.
    Absent(bool),
}

/// Schema feature name to cohort-file column. Unlisted features are looked
/// up under their own name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColumnMap(pub BTreeMap<String, ColumnRef>);

impl ColumnMap {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn column_for<'a>(&'a self, name: &'a str) -> Option<&'a str> {
        match self.0.get(name) {
            None => Some(name),
            Some(ColumnRef::Column(c)) => Some(c.as_str()),
            Some(ColumnRef::Absent(_)) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    pub delimiter: u8,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

enum Cell {
    Missing,
    Unable,
    Value(f64),
}

fn parse_cell(raw: &str, row: usize, column: &str, schema: &FeatureSchema) -> Result<Cell> {
    let t = raw.trim();
    if t.is_empty() || t == "." || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan") {
        return Ok(Cell::Missing);
    }
    if t.eq_ignore_ascii_case("unable") {
        return Ok(Cell::Unable);
    }
    let v: f64 = t.parse().map_err(|_| Error::NonNumeric {
        row,
        column: column.to_owned(),
        value: t.to_owned(),
    })?;
    if !v.is_finite() {
        return Err(Error::NonNumeric {
            row,
            column: column.to_owned(),
            value: t.to_owned(),
        });
    }
    if schema.is_unable_code(v) {
        return Ok(Cell::Unable);
    }
    Ok(Cell::Value(v))
}

fn to_hold(cell: Cell, row: usize) -> Result<Option<Hold>> {
    Ok(match cell {
        Cell::Missing => None,
        Cell::Unable => Some(Hold::NotAttempted),
        Cell::Value(v) => Some(Hold::capped(v).map_err(|e| Error::InvalidRecord {
            row,
            message: e.to_string(),
        })?),
    })
}

fn to_timed(cell: Cell, row: usize, what: &str) -> Result<Option<Timed>> {
    Ok(match cell {
        Cell::Missing => None,
        Cell::Unable => Some(Timed::Unable),
        Cell::Value(v) if v > 0.0 => Some(Timed::Completed(v)),
        Cell::Value(v) => {
            return Err(Error::InvalidRecord {
                row,
                message: format!("{what} time {v} must be positive"),
            })
        }
    })
}

/// Read a delimited cohort file, one row per (participant, wave).
///
/// Rows from waves without timed tests are skipped. Balance holds are capped
/// at 10 s and answer values equal to a declared missing code become NaN.
pub fn ingest_cohort(
    path: &Path,
    schema: &FeatureSchema,
    column_map: &ColumnMap,
    options: IngestOptions,
) -> Result<Vec<ParticipantWaveRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_cohort(file, schema, column_map, options)
}

pub fn read_cohort<R: Read>(
    reader: R,
    schema: &FeatureSchema,
    column_map: &ColumnMap,
    options: IngestOptions,
) -> Result<Vec<ParticipantWaveRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let locate = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };
    let id_col = locate(column_map.column_for(ID_COLUMN).unwrap_or(ID_COLUMN))?;
    let wave_col = locate(column_map.column_for(WAVE_COLUMN).unwrap_or(WAVE_COLUMN))?;
    let age_idx = schema
        .index_of("age")
        .ok_or_else(|| Error::InvalidSchema("schema must define an `age` feature".into()))?;

    // (schema index, file column) for every answer or measured feature present
    let mut columns: Vec<(usize, Option<usize>)> = Vec::with_capacity(schema.len());
    for (j, f) in schema.features.iter().enumerate() {
        let file_col = match f.source {
            Some(FeatureSource::Derived(_)) => None,
            _ => match column_map.column_for(&f.name) {
                Some(c) => Some(locate(c)?),
                None => None,
            },
        };
        columns.push((j, file_col));
    }
    if columns[age_idx].1.is_none() {
        return Err(Error::MissingColumn("age".into()));
    }

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let field = |c: usize| row.get(c).unwrap_or("");
        let wave_raw = field(wave_col).trim();
        let wave: u8 = wave_raw.parse().map_err(|_| Error::NonNumeric {
            row: row_no,
            column: WAVE_COLUMN.into(),
            value: wave_raw.to_owned(),
        })?;
        if !MEASURED_WAVES.contains(&wave) {
            continue;
        }
        let participant_id = field(id_col).trim().to_owned();
        if participant_id.is_empty() {
            return Err(Error::InvalidRecord {
                row: row_no,
                message: "empty participant id".into(),
            });
        }

        let mut values = vec![f64::NAN; schema.len()];
        let mut holds: [Option<Hold>; 3] = [None; 3];
        let mut gait = None;
        let mut chair = None;
        for &(j, file_col) in &columns {
            let Some(c) = file_col else { continue };
            let f = &schema.features[j];
            let cell = parse_cell(field(c), row_no, &header[c], schema)?;
            match f.source {
                None => {
                    values[j] = match cell {
                        Cell::Value(v) if !f.is_missing_code(v) => v,
                        _ => f64::NAN,
                    }
                }
                Some(FeatureSource::Measured(m)) => match m {
                    MeasuredTime::SideBySide => holds[0] = to_hold(cell, row_no)?,
                    MeasuredTime::SemiTandem => holds[1] = to_hold(cell, row_no)?,
                    MeasuredTime::FullTandem => holds[2] = to_hold(cell, row_no)?,
                    MeasuredTime::Gait => gait = to_timed(cell, row_no, "gait")?,
                    MeasuredTime::ChairStand => chair = to_timed(cell, row_no, "chair stand")?,
                },
                Some(FeatureSource::Derived(_)) => {}
            }
        }
        let age = values[age_idx];
        if !(age.is_finite() && age > 0.0) {
            return Err(Error::InvalidRecord {
                row: row_no,
                message: "age must be present and positive".into(),
            });
        }
        let balance = match holds {
            [Some(side_by_side), Some(semi_tandem), Some(full_tandem)] => Some(BalanceMeasurement {
                side_by_side,
                semi_tandem,
                full_tandem,
            }),
            _ => None,
        };
        records.push(ParticipantWaveRecord {
            participant_id,
            wave,
            age,
            values,
            balance,
            gait: gait.map(|time| GaitMeasurement {
                time,
                course_length_m: schema.gait_course_m,
            }),
            chair: chair.map(|time| ChairStandMeasurement { time }),
        });
    }
    Ok(records)
}

fn hold_cell(h: Hold) -> String {
    match h {
        Hold::Held(s) => s.to_string(),
        Hold::NotAttempted => "unable".into(),
    }
}

fn timed_cell(t: Timed) -> String {
    match t {
        Timed::Completed(s) => s.to_string(),
        Timed::Unable => "unable".into(),
    }
}

/// Write records in the layout [`ingest_cohort`] reads with an identity column map.
pub fn write_cohort<W: std::io::Write>(
    writer: W,
    records: &[ParticipantWaveRecord],
    schema: &FeatureSchema,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let cols: Vec<usize> = (0..schema.len())
        .filter(|&j| !matches!(schema.features[j].source, Some(FeatureSource::Derived(_))))
        .collect();
    let mut header = vec![ID_COLUMN.to_owned(), WAVE_COLUMN.to_owned()];
    header.extend(cols.iter().map(|&j| schema.features[j].name.clone()));
    w.write_record(&header)?;
    for r in records {
        let mut out = vec![r.participant_id.clone(), r.wave.to_string()];
        for &j in &cols {
            let cell = match schema.features[j].source {
                None => {
                    let v = r.values[j];
                    if v.is_nan() {
                        String::new()
                    } else {
                        v.to_string()
                    }
                }
                Some(FeatureSource::Measured(m)) => match m {
                    MeasuredTime::SideBySide => r.balance.map(|b| hold_cell(b.side_by_side)),
                    MeasuredTime::SemiTandem => r.balance.map(|b| hold_cell(b.semi_tandem)),
                    MeasuredTime::FullTandem => r.balance.map(|b| hold_cell(b.full_tandem)),
                    MeasuredTime::Gait => r.gait.map(|g| timed_cell(g.time)),
                    MeasuredTime::ChairStand => r.chair.map(|c| timed_cell(c.time)),
                }
                .unwrap_or_default(),
                Some(FeatureSource::Derived(_)) => unreachable!("derived columns are filtered"),
            };
            out.push(cell);
        }
        w.write_record(&out)?;
    }
    w.flush().map_err(|e| Error::io("<cohort output>", e))?;
    Ok(())
}

pub fn write_cohort_file(
    path: &Path,
    records: &[ParticipantWaveRecord],
    schema: &FeatureSchema,
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_cohort(std::io::BufWriter::new(file), records, schema)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::schema::{Category, FeatureDef, FeatureKind};

    fn small_schema() -> FeatureSchema {
        let mut age = FeatureDef::new("age", Category::Demographics, FeatureKind::Continuous);
        age.missing_codes = vec![-9.0];
        let mut srh = FeatureDef::new("srh", Category::HealthState, FeatureKind::Ordinal);
        srh.missing_codes = vec![-9.0, -8.0];
        let measured = |name: &str, m| {
            let mut f = FeatureDef::new(name, Category::PhysicalPerformance, FeatureKind::Continuous);
            f.source = Some(FeatureSource::Measured(m));
            f
        };
        let mut s = FeatureSchema::new(vec![
            age,
            srh,
            measured("sbs", MeasuredTime::SideBySide),
            measured("semi", MeasuredTime::SemiTandem),
            measured("full", MeasuredTime::FullTandem),
            measured("gait", MeasuredTime::Gait),
            measured("chair", MeasuredTime::ChairStand),
        ])
        .unwrap();
        s.unable_codes = vec![-7.0];
        s
    }

    const FILE: &str = "\
participant_id,wave,age,srh,sbs,semi,full,gait,chair
a,2,60,3,10,10,12.5,3.0,11.0
a,4,64,-8,10,-7,unable,unable,
b,2,70,,9,10,4,4.1,20
";

    #[test]
    fn rows_become_records() {
        let recs = read_cohort(FILE.as_bytes(), &small_schema(), &ColumnMap::identity(), Default::default()).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].balance.unwrap().full_tandem, Hold::Held(10.0));
        assert_eq!(recs[0].value(&small_schema(), "srh"), Some(3.0));
    }

    #[test]
    fn missing_codes_and_unable_tokens() {
        let s = small_schema();
        let recs = read_cohort(FILE.as_bytes(), &s, &ColumnMap::identity(), Default::default()).unwrap();
        assert!(recs[1].value(&s, "srh").unwrap().is_nan());
        let b = recs[1].balance.unwrap();
        assert_eq!(b.semi_tandem, Hold::NotAttempted);
        assert_eq!(b.full_tandem, Hold::NotAttempted);
        assert_eq!(recs[1].gait.unwrap().time, Timed::Unable);
        assert!(recs[1].chair.is_none());
        assert!(!recs[1].has_complete_sppb());
        assert!(recs[2].value(&s, "srh").unwrap().is_nan());
    }

    #[test]
    fn missing_mapped_column_is_named() {
        let mut map = ColumnMap::identity();
        map.0.insert("srh".into(), ColumnRef::Column("self_health".into()));
        match read_cohort(FILE.as_bytes(), &small_schema(), &map, Default::default()) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "self_health"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn absent_features_read_as_missing() {
        let s = small_schema();
        let mut map = ColumnMap::identity();
        map.0.insert("srh".into(), ColumnRef::Absent(false));
        let recs = read_cohort(FILE.as_bytes(), &s, &map, Default::default()).unwrap();
        assert!(recs.iter().all(|r| r.value(&s, "srh").unwrap().is_nan()));
    }

    #[test]
    fn non_numeric_cell_reports_row_and_column() {
        let bad = "participant_id,wave,age,srh,sbs,semi,full,gait,chair\na,2,60,good,10,10,10,3,11\n";
        match read_cohort(bad.as_bytes(), &small_schema(), &ColumnMap::identity(), Default::default()) {
            Err(Error::NonNumeric { row, column, value }) => {
                assert_eq!((row, column.as_str(), value.as_str()), (1, "srh", "good"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unmeasured_waves_are_skipped() {
        let text = "participant_id,wave,age,srh,sbs,semi,full,gait,chair\na,3,60,1,10,10,10,3,11\n";
        let recs = read_cohort(text.as_bytes(), &small_schema(), &ColumnMap::identity(), Default::default()).unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn semicolon_delimiter() {
        let text = FILE.replace(',', ";");
        let recs = read_cohort(
            text.as_bytes(),
            &small_schema(),
            &ColumnMap::identity(),
            IngestOptions { delimiter: b';' },
        )
        .unwrap();
        assert_eq!(recs.len(), 3);
    }

    #[test]
    fn write_then_read_round_trips() {
        let s = small_schema();
        let recs = read_cohort(FILE.as_bytes(), &s, &ColumnMap::identity(), Default::default()).unwrap();
        let mut buf = Vec::new();
        write_cohort(&mut buf, &recs, &s).unwrap();
        let back = read_cohort(buf.as_slice(), &s, &ColumnMap::identity(), Default::default()).unwrap();
        assert_eq!(recs.len(), back.len());
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(a.balance, b.balance);
            assert_eq!(a.gait, b.gait);
            assert_eq!(a.chair, b.chair);
            assert_eq!(a.age, b.age);
        }
    }
}
