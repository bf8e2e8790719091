//! Schema-aware tabular data: CSV ingestion, schema inference, and
//! attack-dataset construction.
//!
//! A [`Table`] pairs an ordered [`Schema`] with rows of mixed numeric and
//! categorical cells. The real training set, the unseen holdout, and the
//! synthetic set are all plain tables; [`build_attack_dataset`] glues the
//! first two together with ground-truth membership labels.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("table {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("table {path}: empty table")]
    Empty { path: String },
    #[error("table {path}, row {row}: expected {expected} values, found {found}")]
    RowLength {
        path: String,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("table {path}, row {row}, column {column:?}: cannot parse {value:?} as a finite number")]
    BadNumeric {
        path: String,
        row: usize,
        column: String,
        value: String,
    },
    #[error("table {path}, row {row}, column {column:?}: missing value")]
    MissingValue {
        path: String,
        row: usize,
        column: String,
    },
    #[error("table {path}: column {column:?} is not described by the schema")]
    UnknownColumn { path: String, column: String },
    #[error("table {path}: schema features {missing:?} are absent from the header")]
    MissingColumns { path: String, missing: Vec<String> },
    #[error("schema: duplicate feature name {0:?}")]
    DuplicateFeature(String),
    #[error("schema: feature {name:?}: range min {min} exceeds max {max}")]
    InvalidRange { name: String, min: f64, max: f64 },
    #[error("schema: feature {name:?}: range bounds must be finite")]
    NonFiniteRange { name: String },
    #[error("schema: range on categorical feature {0:?}")]
    RangeOnCategorical(String),
    #[error("schema file {path}, line {line}: {message}")]
    SchemaParse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("row {row}: expected {expected} values, found {found}")]
    RowShape {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {column:?}: cell does not match the declared kind")]
    KindMismatch { row: usize, column: String },
    #[error("row {row}, column {column:?}: numeric cell must be finite")]
    NonFiniteCell { row: usize, column: String },
    #[error("attack dataset: schemas differ: {0}")]
    SchemaMismatch(String),
    #[error("attack dataset: {0} table has no rows")]
    EmptySide(&'static str),
}

/// Feature type used for distance computation and parsing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

/// One column of a table: a name, a kind, and (for numeric features) an
/// optional value range used for distance normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub range: Option<(f64, f64)>,
}

impl FeatureSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Numeric,
            range: None,
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Categorical,
            range: None,
        }
    }

    pub fn with_range(mut self, min: f64, max: f64) -> Self {
        self.range = Some((min, max));
        self
    }
}

/// Ordered list of feature specs with unique names.
#[derive(Clone, Debug, PartialEq)]
pub struct Schema {
    specs: Vec<FeatureSpec>,
}

impl Schema {
    pub fn new(specs: Vec<FeatureSpec>) -> Result<Self, TableError> {
        let mut seen = HashSet::new();
        for spec in &specs {
            if !seen.insert(spec.name.clone()) {
                return Err(TableError::DuplicateFeature(spec.name.clone()));
            }
            if let Some((min, max)) = spec.range {
                if spec.kind == FeatureKind::Categorical {
                    return Err(TableError::RangeOnCategorical(spec.name.clone()));
                }
                if !min.is_finite() || !max.is_finite() {
                    return Err(TableError::NonFiniteRange {
                        name: spec.name.clone(),
                    });
                }
                if min > max {
                    return Err(TableError::InvalidRange {
                        name: spec.name.clone(),
                        min,
                        max,
                    });
                }
            }
        }
        Ok(Schema { specs })
    }

    pub fn specs(&self) -> &[FeatureSpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    /// Same feature names and kinds, in the same order. Ranges are allowed
    /// to differ: observed ranges are file-specific.
    pub fn compatible(&self, other: &Schema) -> bool {
        self.specs.len() == other.specs.len()
            && self
                .specs
                .iter()
                .zip(&other.specs)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind)
    }

    /// First difference between two schemas, for error messages.
    pub fn describe_mismatch(&self, other: &Schema) -> String {
        if self.specs.len() != other.specs.len() {
            return format!(
                "{} features vs {} features",
                self.specs.len(),
                other.specs.len()
            );
        }
        for (a, b) in self.specs.iter().zip(&other.specs) {
            if a.name != b.name {
                return format!("column {:?} vs {:?}", a.name, b.name);
            }
            if a.kind != b.kind {
                return format!("column {:?} kinds {:?} vs {:?}", a.name, a.kind, b.kind);
            }
        }
        "identical".to_string()
    }
}

/// A single cell. Missing values are not representable by design.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Cat(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Cat(s) => write!(f, "{s}"),
        }
    }
}

/// Immutable schema-typed dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    schema: Schema,
    rows: Vec<Vec<Value>>,
}

impl Table {
    /// Build a table from rows, validating shape, kinds, and finiteness.
    pub fn new(schema: Schema, rows: Vec<Vec<Value>>) -> Result<Self, TableError> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(TableError::RowShape {
                    row: i + 1,
                    expected: schema.len(),
                    found: row.len(),
                });
            }
            for (spec, cell) in schema.specs().iter().zip(row) {
                match (spec.kind, cell) {
                    (FeatureKind::Numeric, Value::Num(v)) => {
                        if !v.is_finite() {
                            return Err(TableError::NonFiniteCell {
                                row: i + 1,
                                column: spec.name.clone(),
                            });
                        }
                    }
                    (FeatureKind::Categorical, Value::Cat(_)) => {}
                    _ => {
                        return Err(TableError::KindMismatch {
                            row: i + 1,
                            column: spec.name.clone(),
                        });
                    }
                }
            }
        }
        Ok(Table { schema, rows })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Observed (min, max) of a numeric feature over this table's rows.
    pub fn observed_range(&self, feature: usize) -> Option<(f64, f64)> {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut any = false;
        for row in &self.rows {
            if let Value::Num(v) = row[feature] {
                min = min.min(v);
                max = max.max(v);
                any = true;
            }
        }
        any.then_some((min, max))
    }

    /// Write as CSV with a header row. Numeric cells use shortest
    /// round-trip decimal formatting, so loading the file back reproduces
    /// every value bit-exactly.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), TableError> {
        let path = path.as_ref();
        let mut writer = csv::Writer::from_path(path).map_err(|e| TableError::Csv {
            path: path.display().to_string(),
            source: e,
        })?;
        let wrap = |e: csv::Error| TableError::Csv {
            path: path.display().to_string(),
            source: e,
        };
        writer
            .write_record(self.schema.specs().iter().map(|s| s.name.as_str()))
            .map_err(wrap)?;
        for row in &self.rows {
            writer
                .write_record(row.iter().map(|v| v.to_string()))
                .map_err(wrap)?;
        }
        writer.flush().map_err(|e| TableError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(())
    }
}

/// Schema handling during ingestion: infer kinds from the data, or use a
/// caller-provided schema (e.g. from [`load_schema_file`]).
#[derive(Clone, Debug)]
pub enum SchemaSource {
    Infer,
    Provided(Schema),
}

/// Binary membership ground truth: was the record part of the generator's
/// training data?
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MembershipLabel {
    NonMember,
    Member,
}

impl MembershipLabel {
    pub fn bit(self) -> u8 {
        match self {
            MembershipLabel::NonMember => 0,
            MembershipLabel::Member => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(MembershipLabel::NonMember),
            1 => Some(MembershipLabel::Member),
            _ => None,
        }
    }

    pub fn is_member(self) -> bool {
        self == MembershipLabel::Member
    }
}

/// Labelled union of the training table and the unseen table.
#[derive(Clone, Debug)]
pub struct AttackDataset {
    pub table: Table,
    pub labels: Vec<MembershipLabel>,
}

impl AttackDataset {
    pub fn n_members(&self) -> usize {
        self.labels.iter().filter(|l| l.is_member()).count()
    }

    pub fn n_non_members(&self) -> usize {
        self.labels.len() - self.n_members()
    }
}

/// Exact-match duplicate statistics for an attack dataset's two sides.
#[derive(Clone, Copy, Debug, Default, serde::Serialize, serde::Deserialize, PartialEq)]
pub struct DuplicateCounts {
    /// Rows of the training table that repeat an earlier training row.
    pub within_train: usize,
    /// Rows of the unseen table that repeat an earlier unseen row.
    pub within_unseen: usize,
    /// Unseen rows whose exact record also appears in the training table.
    pub train_unseen_overlap: usize,
}

/// Load a CSV table. With [`SchemaSource::Infer`], a column is numeric iff
/// every data cell parses as a finite real; otherwise it is categorical.
/// Numeric features without a caller-provided range get the observed
/// (min, max) filled in.
pub fn load_table(path: impl AsRef<Path>, schema: &SchemaSource) -> Result<Table, TableError> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| TableError::Csv {
            path: path_str.clone(),
            source: e,
        })?;

    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(|e| TableError::Csv {
            path: path_str.clone(),
            source: e,
        })?,
        None => return Err(TableError::Empty { path: path_str }),
    };
    let columns: Vec<String> = header.iter().map(|c| c.trim().to_string()).collect();

    let mut raw_rows: Vec<Vec<String>> = Vec::new();
    for (i, rec) in records.enumerate() {
        let rec = rec.map_err(|e| TableError::Csv {
            path: path_str.clone(),
            source: e,
        })?;
        let cells: Vec<String> = rec.iter().map(|c| c.trim().to_string()).collect();
        if cells.len() != columns.len() {
            return Err(TableError::RowLength {
                path: path_str,
                row: i + 1,
                expected: columns.len(),
                found: cells.len(),
            });
        }
        raw_rows.push(cells);
    }
    if raw_rows.is_empty() {
        return Err(TableError::Empty { path: path_str });
    }

    // Missing values are rejected outright rather than imputed.
    for (i, row) in raw_rows.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            if cell.is_empty() {
                return Err(TableError::MissingValue {
                    path: path_str,
                    row: i + 1,
                    column: columns[j].clone(),
                });
            }
        }
    }

    let specs = match schema {
        SchemaSource::Infer => columns
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let numeric = raw_rows
                    .iter()
                    .all(|row| matches!(row[j].parse::<f64>(), Ok(v) if v.is_finite()));
                FeatureSpec {
                    name: name.clone(),
                    kind: if numeric {
                        FeatureKind::Numeric
                    } else {
                        FeatureKind::Categorical
                    },
                    range: None,
                }
            })
            .collect::<Vec<_>>(),
        SchemaSource::Provided(provided) => {
            let mut used = vec![false; provided.len()];
            let mut specs = Vec::with_capacity(columns.len());
            for name in &columns {
                match provided.position(name) {
                    Some(idx) => {
                        used[idx] = true;
                        specs.push(provided.specs()[idx].clone());
                    }
                    None => {
                        return Err(TableError::UnknownColumn {
                            path: path_str,
                            column: name.clone(),
                        });
                    }
                }
            }
            let missing: Vec<String> = provided
                .specs()
                .iter()
                .zip(&used)
                .filter(|(_, u)| !**u)
                .map(|(s, _)| s.name.clone())
                .collect();
            if !missing.is_empty() {
                return Err(TableError::MissingColumns {
                    path: path_str,
                    missing,
                });
            }
            specs
        }
    };

    let mut rows = Vec::with_capacity(raw_rows.len());
    for (i, raw) in raw_rows.iter().enumerate() {
        let mut row = Vec::with_capacity(specs.len());
        for (spec, cell) in specs.iter().zip(raw) {
            match spec.kind {
                FeatureKind::Numeric => match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => row.push(Value::Num(v)),
                    _ => {
                        return Err(TableError::BadNumeric {
                            path: path_str,
                            row: i + 1,
                            column: spec.name.clone(),
                            value: cell.clone(),
                        });
                    }
                },
                FeatureKind::Categorical => row.push(Value::Cat(cell.clone())),
            }
        }
        rows.push(row);
    }

    let table = Table::new(Schema::new(specs)?, rows)?;
    Ok(fill_observed_ranges(table))
}

fn fill_observed_ranges(mut table: Table) -> Table {
    let filled: Vec<Option<(f64, f64)>> = table
        .schema
        .specs
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            if spec.kind == FeatureKind::Numeric && spec.range.is_none() {
                table.observed_range(j)
            } else {
                spec.range
            }
        })
        .collect();
    for (spec, range) in table.schema.specs.iter_mut().zip(filled) {
        spec.range = range;
    }
    table
}

/// Parse a schema file: one `name: kind [min max]` entry per line, with
/// `#` comments. Kind is `numeric` or `categorical`; the optional bounds
/// apply to numeric features only.
pub fn load_schema_file(path: impl AsRef<Path>) -> Result<Schema, TableError> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| TableError::Io {
        path: path_str.clone(),
        source: e,
    })?;

    let mut specs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| TableError::SchemaParse {
            path: path_str.clone(),
            line: lineno + 1,
            message,
        };
        let (name, rest) = line
            .split_once(':')
            .ok_or_else(|| parse_err("expected `name: kind`".to_string()))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(parse_err("empty feature name".to_string()));
        }
        let tokens: Vec<&str> = rest.split_whitespace().collect();
        let spec = match tokens.as_slice() {
            ["numeric"] => FeatureSpec::numeric(name),
            ["categorical"] => FeatureSpec::categorical(name),
            ["numeric", min, max] => {
                let min: f64 = min
                    .parse()
                    .map_err(|_| parse_err(format!("bad range bound {min:?}")))?;
                let max: f64 = max
                    .parse()
                    .map_err(|_| parse_err(format!("bad range bound {max:?}")))?;
                FeatureSpec::numeric(name).with_range(min, max)
            }
            _ => {
                return Err(parse_err(format!(
                    "expected `numeric`, `categorical`, or `numeric <min> <max>`, got {rest:?}"
                )));
            }
        };
        specs.push(spec);
    }
    Schema::new(specs)
}

/// Concatenate the training table (labelled member) and the unseen table
/// (labelled non-member). With `balance`, the larger side is subsampled
/// without replacement using `seed` so both sides have equal counts; row
/// order stays training-block then unseen-block.
pub fn build_attack_dataset(
    train: &Table,
    unseen: &Table,
    balance: bool,
    seed: u64,
) -> Result<AttackDataset, TableError> {
    if !train.schema.compatible(&unseen.schema) {
        return Err(TableError::SchemaMismatch(
            train.schema.describe_mismatch(&unseen.schema),
        ));
    }
    if train.n_rows() == 0 {
        return Err(TableError::EmptySide("training"));
    }
    if unseen.n_rows() == 0 {
        return Err(TableError::EmptySide("unseen"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep = |n: usize, target: usize, rng: &mut ChaCha8Rng| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        if target < n {
            idx.shuffle(rng);
            idx.truncate(target);
            idx.sort_unstable();
        }
        idx
    };

    let target = train.n_rows().min(unseen.n_rows());
    let (train_keep, unseen_keep) = if balance {
        // Larger side is subsampled; the shuffle draws are ordered
        // training-first so selection is reproducible.
        let t = keep(train.n_rows(), target, &mut rng);
        let u = keep(unseen.n_rows(), target, &mut rng);
        (t, u)
    } else {
        ((0..train.n_rows()).collect(), (0..unseen.n_rows()).collect())
    };

    let mut rows = Vec::with_capacity(train_keep.len() + unseen_keep.len());
    let mut labels = Vec::with_capacity(rows.capacity());
    for &i in &train_keep {
        rows.push(train.rows[i].clone());
        labels.push(MembershipLabel::Member);
    }
    for &i in &unseen_keep {
        rows.push(unseen.rows[i].clone());
        labels.push(MembershipLabel::NonMember);
    }

    // Widen numeric ranges so the combined schema covers both sides.
    let mut specs = train.schema.specs.clone();
    for (j, spec) in specs.iter_mut().enumerate() {
        if spec.kind == FeatureKind::Numeric {
            let other = unseen.schema.specs[j].range;
            spec.range = match (spec.range, other) {
                (Some((a, b)), Some((c, d))) => Some((a.min(c), b.max(d))),
                (one, two) => one.or(two),
            };
        }
    }

    let table = fill_observed_ranges(Table::new(Schema::new(specs)?, rows)?);
    Ok(AttackDataset { table, labels })
}

/// Exact-match duplicate counts between the two sides of an attack
/// dataset. Records are compared cell-by-cell; numeric cells match only
/// when bit-identical.
pub fn duplicate_counts(train: &Table, unseen: &Table) -> DuplicateCounts {
    let key = |row: &[Value]| -> String {
        let mut s = String::new();
        for cell in row {
            s.push_str(&cell.to_string());
            s.push('\u{1f}');
        }
        s
    };

    let mut seen = HashSet::new();
    let mut within_train = 0;
    for row in &train.rows {
        if !seen.insert(key(row)) {
            within_train += 1;
        }
    }
    let train_keys: HashSet<String> = train.rows.iter().map(|r| key(r)).collect();

    let mut seen_u = HashSet::new();
    let mut within_unseen = 0;
    let mut overlap = 0;
    for row in &unseen.rows {
        let k = key(row);
        if !seen_u.insert(k.clone()) {
            within_unseen += 1;
        }
        if train_keys.contains(&k) {
            overlap += 1;
        }
    }

    DuplicateCounts {
        within_train,
        within_unseen,
        train_unseen_overlap: overlap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn toy_table(n: usize, offset: f64) -> Table {
        let schema = Schema::new(vec![
            FeatureSpec::numeric("age"),
            FeatureSpec::categorical("sex"),
        ])
        .unwrap();
        let rows = (0..n)
            .map(|i| {
                vec![
                    Value::Num(offset + i as f64),
                    Value::Cat(if i % 2 == 0 { "M" } else { "F" }.to_string()),
                ]
            })
            .collect();
        Table::new(schema, rows).unwrap()
    }

    #[test]
    fn load_infers_kinds_and_fills_ranges() {
        let f = write_tmp("age,sex\n31,M\n45,F\n27,M\n");
        let table = load_table(f.path(), &SchemaSource::Infer).unwrap();
        assert_eq!(table.n_rows(), 3);
        let specs = table.schema().specs();
        assert_eq!(specs[0].kind, FeatureKind::Numeric);
        assert_eq!(specs[0].range, Some((27.0, 45.0)));
        assert_eq!(specs[1].kind, FeatureKind::Categorical);
        assert_eq!(table.rows()[1][0], Value::Num(45.0));
    }

    #[test]
    fn bad_numeric_names_row() {
        let schema = Schema::new(vec![
            FeatureSpec::numeric("age"),
            FeatureSpec::categorical("sex"),
        ])
        .unwrap();
        let f = write_tmp("age,sex\n31,M\nabc,F\n");
        let err = load_table(f.path(), &SchemaSource::Provided(schema)).unwrap_err();
        match err {
            TableError::BadNumeric { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "age");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn header_only_file_is_empty() {
        let f = write_tmp("age,sex\n");
        let err = load_table(f.path(), &SchemaSource::Infer).unwrap_err();
        assert!(matches!(err, TableError::Empty { .. }));
    }

    #[test]
    fn missing_value_rejected() {
        let f = write_tmp("age,sex\n31,M\n45,\n");
        let err = load_table(f.path(), &SchemaSource::Infer).unwrap_err();
        match err {
            TableError::MissingValue { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "sex");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn row_length_mismatch_names_row() {
        let f = write_tmp("age,sex\n31,M\n45\n");
        let err = load_table(f.path(), &SchemaSource::Infer).unwrap_err();
        assert!(matches!(err, TableError::RowLength { row: 2, .. }));
    }

    #[test]
    fn non_finite_numeric_rejected() {
        let f = write_tmp("age\ninf\n");
        // "inf" parses as f64 infinity, so inference must fall back to
        // categorical rather than accept a non-finite numeric.
        let table = load_table(f.path(), &SchemaSource::Infer).unwrap();
        assert_eq!(table.schema().specs()[0].kind, FeatureKind::Categorical);

        let schema = Schema::new(vec![FeatureSpec::numeric("age")]).unwrap();
        let err = load_table(f.path(), &SchemaSource::Provided(schema)).unwrap_err();
        assert!(matches!(err, TableError::BadNumeric { .. }));
    }

    #[test]
    fn schema_file_round_trip() {
        let f = write_tmp(
            "# toy schema\nage: numeric 0 120\nsex: categorical\nbmi: numeric  # observed range\n",
        );
        let schema = load_schema_file(f.path()).unwrap();
        assert_eq!(schema.len(), 3);
        assert_eq!(schema.specs()[0].range, Some((0.0, 120.0)));
        assert_eq!(schema.specs()[1].kind, FeatureKind::Categorical);
        assert_eq!(schema.specs()[2].range, None);
    }

    #[test]
    fn schema_file_bad_kind() {
        let f = write_tmp("age: integer\n");
        let err = load_schema_file(f.path()).unwrap_err();
        assert!(matches!(err, TableError::SchemaParse { line: 1, .. }));
    }

    #[test]
    fn duplicate_feature_rejected() {
        let err = Schema::new(vec![FeatureSpec::numeric("a"), FeatureSpec::numeric("a")])
            .unwrap_err();
        assert!(matches!(err, TableError::DuplicateFeature(_)));
    }

    #[test]
    fn csv_round_trip_reproduces_values() {
        let table = toy_table(17, 0.125);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        table.write_csv(&path).unwrap();
        let loaded = load_table(
            &path,
            &SchemaSource::Provided(table.schema().clone()),
        )
        .unwrap();
        assert_eq!(table.rows(), loaded.rows());
    }

    #[test]
    fn attack_dataset_already_balanced() {
        let r = toy_table(100, 0.0);
        let u = toy_table(100, 1000.0);
        let ds = build_attack_dataset(&r, &u, true, 1).unwrap();
        assert_eq!(ds.table.n_rows(), 200);
        assert_eq!(ds.n_members(), 100);
        assert_eq!(ds.n_non_members(), 100);
    }

    #[test]
    fn attack_dataset_balances_larger_side_deterministically() {
        let r = toy_table(150, 0.0);
        let u = toy_table(100, 1000.0);
        let a = build_attack_dataset(&r, &u, true, 7).unwrap();
        let b = build_attack_dataset(&r, &u, true, 7).unwrap();
        assert_eq!(a.table.n_rows(), 200);
        assert_eq!(a.n_members(), 100);
        assert_eq!(a.n_non_members(), 100);
        assert_eq!(a.table.rows(), b.table.rows());
        assert_eq!(a.labels, b.labels);

        let c = build_attack_dataset(&r, &u, true, 8).unwrap();
        assert_ne!(
            a.table.rows(),
            c.table.rows(),
            "different seed should select a different member subset"
        );
    }

    #[test]
    fn attack_dataset_without_balance_keeps_counts() {
        let r = toy_table(150, 0.0);
        let u = toy_table(100, 1000.0);
        let ds = build_attack_dataset(&r, &u, false, 0).unwrap();
        assert_eq!(ds.n_members(), 150);
        assert_eq!(ds.n_non_members(), 100);
        // Training block precedes the unseen block.
        assert!(ds.labels[..150].iter().all(|l| l.is_member()));
        assert!(!ds.labels[150..].iter().any(|l| l.is_member()));
    }

    #[test]
    fn attack_dataset_schema_mismatch() {
        let r = toy_table(10, 0.0);
        let schema = Schema::new(vec![
            FeatureSpec::numeric("years"),
            FeatureSpec::categorical("sex"),
        ])
        .unwrap();
        let rows = r.rows().to_vec();
        let u = Table::new(schema, rows).unwrap();
        let err = build_attack_dataset(&r, &u, true, 0).unwrap_err();
        assert!(matches!(err, TableError::SchemaMismatch(_)));
    }

    #[test]
    fn duplicate_counts_exact_match() {
        let schema = Schema::new(vec![FeatureSpec::numeric("x")]).unwrap();
        let t = |vals: &[f64]| {
            Table::new(
                schema.clone(),
                vals.iter().map(|&v| vec![Value::Num(v)]).collect(),
            )
            .unwrap()
        };
        let r = t(&[1.0, 2.0, 2.0, 3.0]);
        let u = t(&[3.0, 4.0, 4.0]);
        let d = duplicate_counts(&r, &u);
        assert_eq!(d.within_train, 1);
        assert_eq!(d.within_unseen, 1);
        assert_eq!(d.train_unseen_overlap, 1);
    }
}
