//! Gower distance over mixed-type records and brute-force nearest-neighbour
//! search from attack records into the synthetic set.
//!
//! The per-pair distance is the mean of per-feature dissimilarities:
//! numeric features contribute `|x - y| / range` (clamped to `[0, 1]`),
//! categorical features contribute 0 on a match and 1 otherwise. With
//! normalization turned off, numeric features contribute the raw absolute
//! difference instead, and distances may exceed 1.
//!
//! The search scans all pairs. Workers split over attack records only, the
//! per-pair feature sum runs in fixed schema order, and the min over
//! synthetic rows is order-independent, so parallel and single-threaded
//! runs produce bit-identical distances.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::tabular::{AttackDataset, FeatureKind, MembershipLabel, Schema, Table, Value};

#[derive(Debug, Error)]
pub enum DistanceError {
    #[error("distance: synthetic table is empty")]
    EmptySynthetic,
    #[error("distance: schemas differ: {0}")]
    SchemaMismatch(String),
    #[error("distance: record has {found} values, schema has {expected}")]
    RecordShape { expected: usize, found: usize },
    #[error("distance: record cell {index} does not match the schema kind")]
    RecordKind { index: usize },
    #[error("distance: train fraction {0} must lie strictly between 0 and 1")]
    BadTrainFraction(f64),
    #[error("distance: need at least 2 {0} records to split, found {1}")]
    TooFewRecords(&'static str, usize),
    #[error("distance table {path}: {message}")]
    Parse { path: String, message: String },
    #[error("distance table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("distance table {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

/// How one feature contributes to the per-pair sum.
#[derive(Clone, Copy, Debug)]
enum FeatureOp {
    /// `|x - y| * inv_range`, clamped to 1.
    Scaled { inv_range: f64 },
    /// Raw `|x - y|`, no normalization.
    Raw,
    /// 0 if equal, 1 otherwise. Categorical features and zero-range
    /// (constant) numeric features.
    Exact,
}

/// Shared normalization state for one distance computation: the schema and
/// the per-numeric-feature ranges taken over the union of all tables that
/// will be compared.
#[derive(Clone, Debug)]
pub struct GowerContext {
    schema: Schema,
    ranges: Vec<Option<f64>>,
    ops: Vec<FeatureOp>,
    normalize: bool,
}

impl GowerContext {
    /// Build a context whose numeric ranges cover every listed table.
    /// Each table contributes its schema range (observed at load time, or
    /// caller-provided); the union of those intervals defines `max - min`
    /// per feature, so all sides share one normalizer.
    pub fn from_tables(tables: &[&Table], normalize: bool) -> Result<Self, DistanceError> {
        assert!(!tables.is_empty(), "at least one table required");
        let schema = tables[0].schema().clone();
        for t in &tables[1..] {
            if !schema.compatible(t.schema()) {
                return Err(DistanceError::SchemaMismatch(
                    schema.describe_mismatch(t.schema()),
                ));
            }
        }

        let mut ranges = Vec::with_capacity(schema.len());
        for (j, spec) in schema.specs().iter().enumerate() {
            if spec.kind != FeatureKind::Numeric {
                ranges.push(None);
                continue;
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for t in tables {
                let (a, b) = match t.schema().specs()[j].range {
                    Some(r) => r,
                    None => t.observed_range(j).unwrap_or((f64::INFINITY, f64::NEG_INFINITY)),
                };
                lo = lo.min(a);
                hi = hi.max(b);
            }
            ranges.push(Some(hi - lo));
        }

        let ops = ranges
            .iter()
            .zip(schema.specs())
            .map(|(range, spec)| match (spec.kind, range) {
                (FeatureKind::Categorical, _) => FeatureOp::Exact,
                (FeatureKind::Numeric, _) if !normalize => FeatureOp::Raw,
                (FeatureKind::Numeric, Some(r)) if *r > 0.0 => FeatureOp::Scaled {
                    inv_range: 1.0 / r,
                },
                // Constant feature: equality is the only signal left.
                (FeatureKind::Numeric, _) => FeatureOp::Exact,
            })
            .collect();

        Ok(GowerContext {
            schema,
            ranges,
            ops,
            normalize,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// `max - min` for a numeric feature, `None` for categorical ones.
    pub fn range(&self, feature: usize) -> Option<f64> {
        self.ranges[feature]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalize
    }

    /// Numeric features whose union range collapsed to zero.
    pub fn constant_features(&self) -> Vec<&str> {
        self.schema
            .specs()
            .iter()
            .zip(&self.ranges)
            .filter(|(s, r)| s.kind == FeatureKind::Numeric && matches!(r, Some(w) if *w <= 0.0))
            .map(|(s, _)| s.name.as_str())
            .collect()
    }

    fn check_record(&self, record: &[Value]) -> Result<(), DistanceError> {
        if record.len() != self.schema.len() {
            return Err(DistanceError::RecordShape {
                expected: self.schema.len(),
                found: record.len(),
            });
        }
        for (i, (spec, cell)) in self.schema.specs().iter().zip(record).enumerate() {
            let ok = matches!(
                (spec.kind, cell),
                (FeatureKind::Numeric, Value::Num(_)) | (FeatureKind::Categorical, Value::Cat(_))
            );
            if !ok {
                return Err(DistanceError::RecordKind { index: i });
            }
        }
        Ok(())
    }
}

/// Gower distance between two records under a shared context.
pub fn gower_distance(
    x: &[Value],
    y: &[Value],
    ctx: &GowerContext,
) -> Result<f64, DistanceError> {
    ctx.check_record(x)?;
    ctx.check_record(y)?;
    let mut sum = 0.0;
    for ((op, a), b) in ctx.ops.iter().zip(x).zip(y) {
        sum += match (op, a, b) {
            (FeatureOp::Scaled { inv_range }, Value::Num(a), Value::Num(b)) => {
                let v = (a - b).abs() * inv_range;
                if v > 1.0 {
                    1.0
                } else {
                    v
                }
            }
            (FeatureOp::Raw, Value::Num(a), Value::Num(b)) => (a - b).abs(),
            (FeatureOp::Exact, Value::Num(a), Value::Num(b)) => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
            (FeatureOp::Exact, Value::Cat(a), Value::Cat(b)) => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
            _ => unreachable!("records validated against schema"),
        };
    }
    Ok(sum / ctx.schema.len() as f64)
}

/// One attack record's nearest-neighbour distance into the synthetic set,
/// with its label carried through.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceRecord {
    pub distance: f64,
    pub label: MembershipLabel,
    /// Row index of the record in the attack dataset.
    pub source_index: usize,
}

/// Nearest-neighbour distances plus (after [`split_distances`]) disjoint
/// train/test index lists. The test set is balanced: records dropped by
/// balancing belong to neither split.
#[derive(Clone, Debug, Default)]
pub struct DistanceTable {
    pub records: Vec<DistanceRecord>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl DistanceTable {
    pub fn train_records(&self) -> impl Iterator<Item = &DistanceRecord> {
        self.train_indices.iter().map(|&i| &self.records[i])
    }

    pub fn test_records(&self) -> impl Iterator<Item = &DistanceRecord> {
        self.test_indices.iter().map(|&i| &self.records[i])
    }

    /// Train-split distances of one label class, in train-index order.
    pub fn train_distances(&self, label: MembershipLabel) -> Vec<f64> {
        self.train_records()
            .filter(|r| r.label == label)
            .map(|r| r.distance)
            .collect()
    }

    /// All distances referenced by the train and test splits.
    pub fn split_distances_pool(&self) -> Vec<f64> {
        self.train_indices
            .iter()
            .chain(&self.test_indices)
            .map(|&i| self.records[i].distance)
            .collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), DistanceError> {
        let path = path.as_ref();
        let wrap_csv = |e: csv::Error| DistanceError::Csv {
            path: path.display().to_string(),
            source: e,
        };
        let mut w = csv::Writer::from_path(path).map_err(wrap_csv)?;
        w.write_record(["source_index", "distance", "label"])
            .map_err(wrap_csv)?;
        for r in &self.records {
            w.write_record([
                r.source_index.to_string(),
                r.distance.to_string(),
                r.label.bit().to_string(),
            ])
            .map_err(wrap_csv)?;
        }
        w.flush().map_err(|e| DistanceError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(())
    }

    /// Load a dumped distance table. Splits are not stored in the file;
    /// call [`split_distances`] afterwards.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, DistanceError> {
        let path = path.as_ref();
        let path_str = path.display().to_string();
        let wrap_csv = |e: csv::Error| DistanceError::Csv {
            path: path_str.clone(),
            source: e,
        };
        let parse_err = |row: usize, message: String| DistanceError::Parse {
            path: path_str.clone(),
            message: format!("row {row}: {message}"),
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(wrap_csv)?;
        let mut records = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(wrap_csv)?;
            if rec.len() != 3 {
                return Err(parse_err(i + 1, format!("expected 3 columns, got {}", rec.len())));
            }
            let source_index: usize = rec[0]
                .trim()
                .parse()
                .map_err(|_| parse_err(i + 1, format!("bad source_index {:?}", &rec[0])))?;
            let distance: f64 = rec[1]
                .trim()
                .parse()
                .map_err(|_| parse_err(i + 1, format!("bad distance {:?}", &rec[1])))?;
            if !distance.is_finite() || distance < 0.0 {
                return Err(parse_err(i + 1, format!("distance {distance} out of range")));
            }
            let label = rec[2]
                .trim()
                .parse::<u8>()
                .ok()
                .and_then(MembershipLabel::from_bit)
                .ok_or_else(|| parse_err(i + 1, format!("bad label {:?}", &rec[2])))?;
            records.push(DistanceRecord {
                distance,
                label,
                source_index,
            });
        }
        if records.is_empty() {
            return Err(DistanceError::Parse {
                path: path_str,
                message: "no distance records".to_string(),
            });
        }
        Ok(DistanceTable {
            records,
            train_indices: Vec::new(),
            test_indices: Vec::new(),
        })
    }
}

/// Flat numeric encoding of a table: row-major `f64` cells in schema
/// order, with categorical tokens interned to ids shared across every
/// table encoded by the same [`Interner`].
struct Encoded {
    data: Vec<f64>,
    width: usize,
}

impl Encoded {
    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    fn n_rows(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.data.len() / self.width
        }
    }
}

#[derive(Default)]
struct Interner {
    maps: Vec<std::collections::HashMap<String, f64>>,
}

impl Interner {
    fn new(n_features: usize) -> Self {
        Interner {
            maps: (0..n_features).map(|_| Default::default()).collect(),
        }
    }

    fn encode(&mut self, table: &Table) -> Encoded {
        let width = table.schema().len();
        let mut data = Vec::with_capacity(width * table.n_rows());
        for row in table.rows() {
            for (j, cell) in row.iter().enumerate() {
                data.push(match cell {
                    Value::Num(v) => *v,
                    Value::Cat(s) => {
                        let map = &mut self.maps[j];
                        let next = map.len() as f64;
                        *map.entry(s.clone()).or_insert(next)
                    }
                });
            }
        }
        Encoded { data, width }
    }
}

/// Per-pair distance on encoded rows. Identical arithmetic to
/// [`gower_distance`]: same constants, same fixed left-to-right feature
/// order, so the two paths agree bit-for-bit.
#[inline]
fn gower_encoded(a: &[f64], b: &[f64], ops: &[FeatureOp]) -> f64 {
    let mut sum = 0.0;
    for (op, (x, y)) in ops.iter().zip(a.iter().zip(b)) {
        sum += match op {
            FeatureOp::Scaled { inv_range } => {
                let v = (x - y).abs() * inv_range;
                if v > 1.0 {
                    1.0
                } else {
                    v
                }
            }
            FeatureOp::Raw => (x - y).abs(),
            FeatureOp::Exact => {
                if x == y {
                    0.0
                } else {
                    1.0
                }
            }
        };
    }
    sum / ops.len() as f64
}

/// For every attack record, the minimum Gower distance to any synthetic
/// row. Parallel over attack records; output is independent of worker
/// count and of synthetic row order. Splits are left empty.
pub fn nearest_neighbor_distances(
    attack: &AttackDataset,
    synth: &Table,
    ctx: &GowerContext,
) -> Result<DistanceTable, DistanceError> {
    if synth.n_rows() == 0 {
        return Err(DistanceError::EmptySynthetic);
    }
    if !ctx.schema().compatible(attack.table.schema()) {
        return Err(DistanceError::SchemaMismatch(
            ctx.schema().describe_mismatch(attack.table.schema()),
        ));
    }
    if !ctx.schema().compatible(synth.schema()) {
        return Err(DistanceError::SchemaMismatch(
            ctx.schema().describe_mismatch(synth.schema()),
        ));
    }

    let mut interner = Interner::new(ctx.schema.len());
    let queries = interner.encode(&attack.table);
    let corpus = interner.encode(synth);
    let ops = ctx.ops.as_slice();

    let records: Vec<DistanceRecord> = (0..queries.n_rows())
        .into_par_iter()
        .map(|i| {
            let q = queries.row(i);
            let mut best = f64::INFINITY;
            for j in 0..corpus.n_rows() {
                let d = gower_encoded(q, corpus.row(j), ops);
                if d < best {
                    best = d;
                }
            }
            DistanceRecord {
                distance: best,
                label: attack.labels[i],
                source_index: i,
            }
        })
        .collect();

    Ok(DistanceTable {
        records,
        train_indices: Vec::new(),
        test_indices: Vec::new(),
    })
}

/// Split a distance table into train and test index lists.
///
/// Each label class is shuffled seed-deterministically and cut at
/// `train_fraction`. The test side is then balanced by subsampling the
/// over-represented label; with `balanced_train`, the training side is
/// balanced the same way. Dropped records belong to neither split.
pub fn split_distances(
    dt: &DistanceTable,
    train_fraction: f64,
    balanced_train: bool,
    seed: u64,
) -> Result<DistanceTable, DistanceError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DistanceError::BadTrainFraction(train_fraction));
    }
    let mut members: Vec<usize> = Vec::new();
    let mut non_members: Vec<usize> = Vec::new();
    for (i, r) in dt.records.iter().enumerate() {
        match r.label {
            MembershipLabel::Member => members.push(i),
            MembershipLabel::NonMember => non_members.push(i),
        }
    }
    if members.len() < 2 {
        return Err(DistanceError::TooFewRecords("member", members.len()));
    }
    if non_members.len() < 2 {
        return Err(DistanceError::TooFewRecords("non-member", non_members.len()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    members.shuffle(&mut rng);
    non_members.shuffle(&mut rng);

    let cut_m = (train_fraction * members.len() as f64).floor() as usize;
    let cut_n = (train_fraction * non_members.len() as f64).floor() as usize;
    let (train_m, test_m) = members.split_at(cut_m);
    let (train_n, test_n) = non_members.split_at(cut_n);

    // train_fraction < 1 guarantees both test sides are non-empty.
    let k_test = test_m.len().min(test_n.len());
    let (train_m, train_n) = if balanced_train {
        let k = train_m.len().min(train_n.len());
        (&train_m[..k], &train_n[..k])
    } else {
        (train_m, train_n)
    };

    let mut train_indices: Vec<usize> = train_m.iter().chain(train_n).copied().collect();
    let mut test_indices: Vec<usize> = test_m[..k_test]
        .iter()
        .chain(&test_n[..k_test])
        .copied()
        .collect();
    train_indices.sort_unstable();
    test_indices.sort_unstable();

    Ok(DistanceTable {
        records: dt.records.clone(),
        train_indices,
        test_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{build_attack_dataset, FeatureSpec, Schema};
    use proptest::prelude::*;

    fn two_feature_ctx(range: f64) -> (Schema, GowerContext) {
        let schema = Schema::new(vec![
            FeatureSpec::numeric("x").with_range(0.0, range),
            FeatureSpec::categorical("c"),
        ])
        .unwrap();
        let table = Table::new(
            schema.clone(),
            vec![vec![Value::Num(0.0), Value::Cat("A".into())]],
        )
        .unwrap();
        let ctx = GowerContext::from_tables(&[&table], true).unwrap();
        (schema, ctx)
    }

    #[test]
    fn hand_computed_pair() {
        let (_, ctx) = two_feature_ctx(10.0);
        let x = vec![Value::Num(2.0), Value::Cat("A".into())];
        let y = vec![Value::Num(7.0), Value::Cat("B".into())];
        let d = gower_distance(&x, &y, &ctx).unwrap();
        // (|2-7|/10 + 1) / 2, evaluated by hand
        assert_eq!(d, 0.75);
    }

    #[test]
    fn identical_records_are_zero() {
        let (_, ctx) = two_feature_ctx(10.0);
        let x = vec![Value::Num(3.5), Value::Cat("Q".into())];
        assert_eq!(gower_distance(&x, &x, &ctx).unwrap(), 0.0);
    }

    #[test]
    fn all_categorical_all_different_is_one() {
        let schema = Schema::new(vec![
            FeatureSpec::categorical("a"),
            FeatureSpec::categorical("b"),
            FeatureSpec::categorical("c"),
        ])
        .unwrap();
        let table = Table::new(
            schema,
            vec![vec![
                Value::Cat("1".into()),
                Value::Cat("2".into()),
                Value::Cat("3".into()),
            ]],
        )
        .unwrap();
        let ctx = GowerContext::from_tables(&[&table], true).unwrap();
        let x = vec![
            Value::Cat("1".into()),
            Value::Cat("2".into()),
            Value::Cat("3".into()),
        ];
        let y = vec![
            Value::Cat("4".into()),
            Value::Cat("5".into()),
            Value::Cat("6".into()),
        ];
        assert_eq!(gower_distance(&x, &y, &ctx).unwrap(), 1.0);
    }

    #[test]
    fn constant_numeric_feature_compares_by_equality() {
        let schema = Schema::new(vec![FeatureSpec::numeric("x").with_range(5.0, 5.0)]).unwrap();
        let table = Table::new(schema, vec![vec![Value::Num(5.0)]]).unwrap();
        let ctx = GowerContext::from_tables(&[&table], true).unwrap();
        assert_eq!(ctx.constant_features(), vec!["x"]);
        let same = gower_distance(&[Value::Num(5.0)], &[Value::Num(5.0)], &ctx).unwrap();
        let diff = gower_distance(&[Value::Num(5.0)], &[Value::Num(6.0)], &ctx).unwrap();
        assert_eq!(same, 0.0);
        assert_eq!(diff, 1.0);
    }

    #[test]
    fn unnormalized_mode_uses_raw_differences() {
        let schema = Schema::new(vec![FeatureSpec::numeric("x").with_range(0.0, 10.0)]).unwrap();
        let table = Table::new(schema, vec![vec![Value::Num(0.0)]]).unwrap();
        let ctx = GowerContext::from_tables(&[&table], false).unwrap();
        let d = gower_distance(&[Value::Num(2.0)], &[Value::Num(7.0)], &ctx).unwrap();
        assert_eq!(d, 5.0);
    }

    fn random_mixed_tables(
        seed: u64,
        n_attack: usize,
        n_synth: usize,
        n_features: usize,
    ) -> (AttackDataset, Table, GowerContext) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let specs: Vec<FeatureSpec> = (0..n_features)
            .map(|j| {
                if rng.random_bool(0.5) {
                    FeatureSpec::numeric(format!("n{j}"))
                } else {
                    FeatureSpec::categorical(format!("c{j}"))
                }
            })
            .collect();
        let schema = Schema::new(specs).unwrap();
        let mut row = |rng: &mut ChaCha8Rng| -> Vec<Value> {
            schema
                .specs()
                .iter()
                .map(|s| match s.kind {
                    FeatureKind::Numeric => Value::Num(rng.random_range(-5.0..5.0)),
                    FeatureKind::Categorical => {
                        Value::Cat(format!("t{}", rng.random_range(0..6)))
                    }
                })
                .collect()
        };
        let half = n_attack / 2;
        let r_rows: Vec<_> = (0..half).map(|_| row(&mut rng)).collect();
        let u_rows: Vec<_> = (0..n_attack - half).map(|_| row(&mut rng)).collect();
        let s_rows: Vec<_> = (0..n_synth).map(|_| row(&mut rng)).collect();
        let r = Table::new(schema.clone(), r_rows).unwrap();
        let u = Table::new(schema.clone(), u_rows).unwrap();
        let s = Table::new(schema.clone(), s_rows).unwrap();
        let attack = build_attack_dataset(&r, &u, false, seed).unwrap();
        let ctx = GowerContext::from_tables(&[&attack.table, &s], true).unwrap();
        (attack, s, ctx)
    }

    #[test]
    fn engine_matches_naive_double_loop() {
        let (attack, synth, ctx) = random_mixed_tables(11, 60, 40, 7);
        let dt = nearest_neighbor_distances(&attack, &synth, &ctx).unwrap();
        for (i, rec) in dt.records.iter().enumerate() {
            let naive = synth
                .rows()
                .iter()
                .map(|s| gower_distance(&attack.table.rows()[i], s, &ctx).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(rec.distance, naive, "record {i}");
        }
    }

    #[test]
    fn exact_synthetic_match_gives_zero() {
        let (attack, mut synth, _) = random_mixed_tables(3, 20, 10, 5);
        let mut rows = synth.rows().to_vec();
        rows.push(attack.table.rows()[4].clone());
        synth = Table::new(synth.schema().clone(), rows).unwrap();
        let ctx = GowerContext::from_tables(&[&attack.table, &synth], true).unwrap();
        let dt = nearest_neighbor_distances(&attack, &synth, &ctx).unwrap();
        assert_eq!(dt.records[4].distance, 0.0);
    }

    #[test]
    fn singleton_synthetic_equals_pair_distance() {
        let (attack, synth, _) = random_mixed_tables(5, 10, 3, 4);
        let single = Table::new(synth.schema().clone(), vec![synth.rows()[1].clone()]).unwrap();
        let ctx = GowerContext::from_tables(&[&attack.table, &single], true).unwrap();
        let dt = nearest_neighbor_distances(&attack, &single, &ctx).unwrap();
        for (i, rec) in dt.records.iter().enumerate() {
            let direct =
                gower_distance(&attack.table.rows()[i], &single.rows()[0], &ctx).unwrap();
            assert_eq!(rec.distance, direct);
        }
    }

    #[test]
    fn superset_never_increases_distances() {
        let (attack, synth, _) = random_mixed_tables(9, 30, 20, 6);
        let mut rows = synth.rows().to_vec();
        rows.extend(rows.clone().into_iter().map(|mut r| {
            if let Value::Num(v) = &mut r[0] {
                *v += 0.25;
            }
            r
        }));
        let bigger = Table::new(synth.schema().clone(), rows).unwrap();
        let ctx = GowerContext::from_tables(&[&attack.table, &bigger], true).unwrap();
        let small = nearest_neighbor_distances(&attack, &synth, &ctx).unwrap();
        let big = nearest_neighbor_distances(&attack, &bigger, &ctx).unwrap();
        for (a, b) in small.records.iter().zip(&big.records) {
            assert!(b.distance <= a.distance);
        }
    }

    #[test]
    fn parallel_and_serial_agree_bitwise() {
        let (attack, synth, ctx) = random_mixed_tables(13, 80, 50, 8);
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| nearest_neighbor_distances(&attack, &synth, &ctx).unwrap());
        let parallel = nearest_neighbor_distances(&attack, &synth, &ctx).unwrap();
        for (a, b) in serial.records.iter().zip(&parallel.records) {
            assert_eq!(a.distance.to_bits(), b.distance.to_bits());
        }
    }

    #[test]
    fn synthetic_row_order_is_irrelevant() {
        let (attack, synth, ctx) = random_mixed_tables(17, 40, 30, 5);
        let mut rows = synth.rows().to_vec();
        rows.reverse();
        let reversed = Table::new(synth.schema().clone(), rows).unwrap();
        let a = nearest_neighbor_distances(&attack, &synth, &ctx).unwrap();
        let b = nearest_neighbor_distances(&attack, &reversed, &ctx).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.distance.to_bits(), y.distance.to_bits());
        }
    }

    #[test]
    fn empty_synthetic_rejected() {
        let (attack, synth, ctx) = random_mixed_tables(19, 10, 5, 3);
        let empty = Table::new(synth.schema().clone(), Vec::new()).unwrap();
        let err = nearest_neighbor_distances(&attack, &empty, &ctx).unwrap_err();
        assert!(matches!(err, DistanceError::EmptySynthetic));
    }

    fn labelled_distances(n_members: usize, n_non: usize) -> DistanceTable {
        let records = (0..n_members + n_non)
            .map(|i| DistanceRecord {
                distance: i as f64 / (n_members + n_non) as f64,
                label: if i < n_members {
                    MembershipLabel::Member
                } else {
                    MembershipLabel::NonMember
                },
                source_index: i,
            })
            .collect();
        DistanceTable {
            records,
            train_indices: Vec::new(),
            test_indices: Vec::new(),
        }
    }

    #[test]
    fn split_counts_and_balance() {
        let dt = labelled_distances(100, 100);
        let split = split_distances(&dt, 0.7, false, 42).unwrap();
        assert_eq!(split.train_indices.len(), 140);
        assert_eq!(split.test_indices.len(), 60);
        let test_members = split.test_records().filter(|r| r.label.is_member()).count();
        assert_eq!(test_members, 30);
        // Disjoint splits.
        let train: std::collections::HashSet<_> = split.train_indices.iter().collect();
        assert!(split.test_indices.iter().all(|i| !train.contains(i)));
    }

    #[test]
    fn split_balances_unbalanced_test_side() {
        let dt = labelled_distances(150, 100);
        let split = split_distances(&dt, 0.7, false, 1).unwrap();
        // members: 105 train / 45 test; non-members: 70 train / 30 test
        assert_eq!(split.train_indices.len(), 175);
        assert_eq!(split.test_indices.len(), 60);
        let m = split.test_records().filter(|r| r.label.is_member()).count();
        assert_eq!(m, 30);

        let balanced = split_distances(&dt, 0.7, true, 1).unwrap();
        assert_eq!(balanced.train_indices.len(), 140);
        let tm = balanced
            .train_records()
            .filter(|r| r.label.is_member())
            .count();
        assert_eq!(tm, 70);
    }

    #[test]
    fn split_rejects_degenerate_fraction() {
        let dt = labelled_distances(10, 10);
        assert!(matches!(
            split_distances(&dt, 0.0, false, 0),
            Err(DistanceError::BadTrainFraction(_))
        ));
        assert!(matches!(
            split_distances(&dt, 1.0, false, 0),
            Err(DistanceError::BadTrainFraction(_))
        ));
    }

    #[test]
    fn split_rejects_tiny_classes() {
        let dt = labelled_distances(1, 10);
        assert!(matches!(
            split_distances(&dt, 0.5, false, 0),
            Err(DistanceError::TooFewRecords("member", 1))
        ));
    }

    #[test]
    fn split_is_seed_deterministic() {
        let dt = labelled_distances(37, 53);
        let a = split_distances(&dt, 0.7, false, 99).unwrap();
        let b = split_distances(&dt, 0.7, false, 99).unwrap();
        assert_eq!(a.train_indices, b.train_indices);
        assert_eq!(a.test_indices, b.test_indices);
        let c = split_distances(&dt, 0.7, false, 100).unwrap();
        assert_ne!(a.train_indices, c.train_indices);
    }

    #[test]
    fn distance_csv_round_trip() {
        let dt = labelled_distances(5, 5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        dt.write_csv(&path).unwrap();
        let loaded = DistanceTable::read_csv(&path).unwrap();
        assert_eq!(dt.records, loaded.records);
    }

    proptest! {
        #[test]
        fn gower_is_symmetric_bounded_and_zero_on_identity(
            xs in proptest::collection::vec(-100.0f64..100.0, 4),
            ys in proptest::collection::vec(-100.0f64..100.0, 4),
            cx in proptest::collection::vec(0u8..4, 2),
            cy in proptest::collection::vec(0u8..4, 2),
        ) {
            let schema = Schema::new(vec![
                FeatureSpec::numeric("a").with_range(-100.0, 100.0),
                FeatureSpec::numeric("b").with_range(-100.0, 100.0),
                FeatureSpec::numeric("c").with_range(-100.0, 100.0),
                FeatureSpec::numeric("d").with_range(-100.0, 100.0),
                FeatureSpec::categorical("e"),
                FeatureSpec::categorical("f"),
            ]).unwrap();
            let mk = |ns: &[f64], cs: &[u8]| -> Vec<Value> {
                ns.iter().map(|&v| Value::Num(v))
                    .chain(cs.iter().map(|&c| Value::Cat(format!("t{c}"))))
                    .collect()
            };
            let x = mk(&xs, &cx);
            let y = mk(&ys, &cy);
            let probe = Table::new(schema, vec![x.clone(), y.clone()]).unwrap();
            let ctx = GowerContext::from_tables(&[&probe], true).unwrap();
            let dxy = gower_distance(&x, &y, &ctx).unwrap();
            let dyx = gower_distance(&y, &x, &ctx).unwrap();
            prop_assert_eq!(dxy.to_bits(), dyx.to_bits());
            prop_assert!((0.0..=1.0).contains(&dxy));
            prop_assert_eq!(gower_distance(&x, &x, &ctx).unwrap(), 0.0);
        }
    }
}
