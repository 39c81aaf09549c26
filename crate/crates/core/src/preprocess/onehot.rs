use ndarray::Array2;

use crate::cohort::schema::{FeatureDef, FeatureKind, FeatureSchema};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Column name given to one category of an expanded nominal feature.
pub fn one_hot_column_name(feature: &str, label: &str) -> String {
    format!("{feature}={label}")
}

/// Schema after replacing every nominal feature by one binary column per category.
pub fn expand_schema(schema: &FeatureSchema) -> FeatureSchema {
    let features = schema
        .features
        .iter()
        .flat_map(|f| -> Vec<FeatureDef> {
            match f.kind {
                FeatureKind::Nominal => f
                    .categories
                    .iter()
                    .map(|c| {
                        FeatureDef::new(
                            one_hot_column_name(&f.name, &c.label),
                            f.category,
                            FeatureKind::Binary,
                        )
                    })
                    .collect(),
                _ => vec![f.clone()],
            }
        })
        .collect();
    FeatureSchema {
        schema_version: schema.schema_version,
        gait_course_m: schema.gait_course_m,
        unable_codes: schema.unable_codes.clone(),
        features,
    }
}

/// Replace nominal columns of `x` by indicator columns.
///
/// A missing nominal value leaves all of its indicator columns missing.
pub fn one_hot_encode<T: Real>(
    x: &Array2<T>,
    schema: &FeatureSchema,
) -> Result<(Array2<T>, FeatureSchema)> {
    if x.ncols() != schema.len() {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} columns, schema has {} features",
            x.ncols(),
            schema.len()
        )));
    }
    let expanded = expand_schema(schema);
    if !schema.has_nominal() {
        return Ok((x.clone(), expanded));
    }
    let mut out = Array2::<T>::zeros((x.nrows(), expanded.len()));
    let mut col = 0;
    for (j, f) in schema.features.iter().enumerate() {
        if f.kind != FeatureKind::Nominal {
            out.column_mut(col).assign(&x.column(j));
            col += 1;
            continue;
        }
        let width = f.categories.len();
        for (i, &v) in x.column(j).iter().enumerate() {
            if v.is_missing() {
                for c in 0..width {
                    out[[i, col + c]] = T::missing();
                }
                continue;
            }
            let code = v.as_f64();
            let hit = f
                .categories
                .iter()
                .position(|c| c.code == code)
                .ok_or_else(|| Error::UnknownCategory {
                    feature: f.name.clone(),
                    value: code,
                })?;
            out[[i, col + hit]] = T::one();
        }
        col += width;
    }
    Ok((out, expanded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::schema::{Category, NominalCategory};
    use ndarray::array;

    fn marital_schema() -> FeatureSchema {
        let mut m = FeatureDef::new("marital", Category::Demographics, FeatureKind::Nominal);
        m.categories = ["married", "single", "divorced", "widowed"]
            .iter()
            .enumerate()
            .map(|(i, l)| NominalCategory {
                code: (i + 1) as f64,
                label: l.to_string(),
            })
            .collect();
        let age = FeatureDef::new("age", Category::Demographics, FeatureKind::Continuous);
        FeatureSchema::new(vec![age, m]).unwrap()
    }

    #[test]
    fn four_categories_become_four_columns() {
        let s = marital_schema();
        let x = array![[60.0, 1.0], [70.0, 4.0], [80.0, 2.0]];
        let (out, expanded) = one_hot_encode(&x, &s).unwrap();
        assert_eq!(out.ncols(), 5);
        assert_eq!(expanded.len(), 5);
        assert_eq!(expanded.features[1].name, "marital=married");
        assert_eq!(out.row(1).to_vec(), vec![70.0, 0.0, 0.0, 0.0, 1.0]);
        for row in out.rows() {
            assert_eq!(row.iter().skip(1).sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn missing_propagates_to_all_indicators() {
        let s = marital_schema();
        let x = array![[60.0, f64::NAN]];
        let (out, _) = one_hot_encode(&x, &s).unwrap();
        assert!(out.row(0).iter().skip(1).all(|v| v.is_nan()));
        assert_eq!(out[[0, 0]], 60.0);
    }

    #[test]
    fn no_nominal_is_identity() {
        let s = FeatureSchema::new(vec![FeatureDef::new(
            "a",
            Category::Habits,
            FeatureKind::Ordinal,
        )])
        .unwrap();
        let x = array![[1.0], [f64::NAN]];
        let (out, e) = one_hot_encode(&x, &s).unwrap();
        assert_eq!(e, s);
        assert_eq!(out[[0, 0]], 1.0);
        assert!(out[[1, 0]].is_nan());
    }

    #[test]
    fn undeclared_category_names_feature_and_value() {
        let s = marital_schema();
        let x = array![[60.0, 9.0]];
        match one_hot_encode(&x, &s) {
            Err(Error::UnknownCategory { feature, value }) => {
                assert_eq!(feature, "marital");
                assert_eq!(value, 9.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
