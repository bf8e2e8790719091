//! CSV ingestion: schema inference vs an explicit schema file.
//!
//! ```bash
//! cargo run --example schema_inference
//! ```

use synthrisk::tabular::{load_schema_file, load_table, FeatureKind, SchemaSource};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy");

    // Kinds inferred from the data: a column is numeric iff every cell
    // parses as a finite real.
    let inferred = load_table(format!("{data}/r.csv"), &SchemaSource::Infer)?;
    println!("inferred schema for r.csv ({} rows):", inferred.n_rows());
    for spec in inferred.schema().specs() {
        let kind = match spec.kind {
            FeatureKind::Numeric => "numeric",
            FeatureKind::Categorical => "categorical",
        };
        match spec.range {
            Some((lo, hi)) => println!("  {:<8} {kind:<12} observed range [{lo}, {hi}]", spec.name),
            None => println!("  {:<8} {kind}", spec.name),
        }
    }

    // Same file under an explicit schema; declared ranges survive as the
    // normalizer instead of the observed ones.
    let schema = load_schema_file(format!("{data}/schema.txt"))?;
    let declared = load_table(format!("{data}/r.csv"), &SchemaSource::Provided(schema))?;
    println!("\nwith schema.txt, age keeps its declared bounds:");
    let age = &declared.schema().specs()[0];
    println!("  {} range {:?}", age.name, age.range.unwrap());

    Ok(())
}
