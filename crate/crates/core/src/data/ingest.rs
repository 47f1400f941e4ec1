use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use super::profile::MeasurementProfile;
use super::schema::ChannelSchema;
use crate::{Error, Result};

const PROFILE_ID: &str = "profile_id";

/// Voltage and current vector norms from their d/q components.
pub fn derive_vector_norms(u_d: f64, u_q: f64, i_d: f64, i_q: f64) -> (f64, f64) {
    (u_d.hypot(u_q), i_d.hypot(i_q))
}

/// Where a schema channel's raw value comes from.
enum Source {
    Column(usize),
    Norm(usize, usize),
    /// rpm → rad/min
    SpeedRpm(usize),
}

impl Source {
    fn read(&self, cells: &[f64]) -> f64 {
        match *self {
            Source::Column(c) => cells[c],
            Source::Norm(a, b) => cells[a].hypot(cells[b]),
            Source::SpeedRpm(c) => 2.0 * PI * cells[c],
        }
    }

    fn columns(&self) -> Vec<usize> {
        match *self {
            Source::Column(c) | Source::SpeedRpm(c) => vec![c],
            Source::Norm(a, b) => vec![a, b],
        }
    }
}

fn resolve(name: &str, header: &HashMap<&str, usize>) -> Result<Source> {
    if let Some(&c) = header.get(name) {
        return Ok(Source::Column(c));
    }
    let pair = |a: &str, b: &str| match (header.get(a), header.get(b)) {
        (Some(&x), Some(&y)) => Some(Source::Norm(x, y)),
        _ => None,
    };
    let derived = match name {
        "u_s" => pair("u_d", "u_q"),
        "i_s" => pair("i_d", "i_q"),
        "omega_mech" => header.get("motor_speed").map(|&c| Source::SpeedRpm(c)),
        _ => None,
    };
    derived.ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
}

pub fn ingest_csv(path: impl AsRef<Path>, schema: &ChannelSchema) -> Result<Vec<MeasurementProfile>> {
    let file = std::fs::File::open(path)?;
    ingest_reader(file, schema)
}

/// Reads rows grouped by `profile_id` and normalizes every schema channel.
///
/// Profiles are returned in order of first appearance; rows keep file order.
/// Raw d/q voltage and current components and `motor_speed` in min⁻¹ are
/// accepted in place of `u_s`, `i_s` and `omega_mech`.
pub fn ingest_reader<R: Read>(reader: R, schema: &ChannelSchema) -> Result<Vec<MeasurementProfile>> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
    let id_col = *index
        .get(PROFILE_ID)
        .ok_or_else(|| Error::Schema(format!("missing column `{PROFILE_ID}`")))?;

    let sources = schema
        .columns()
        .map(|name| resolve(name, &index))
        .collect::<Result<Vec<_>>>()?;
    let divisors = schema.divisor_vector()?;

    let used: BTreeSet<usize> = sources
        .iter()
        .flat_map(Source::columns)
        .chain(std::iter::once(id_col))
        .collect();
    let ignored: Vec<&str> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| !used.contains(i))
        .map(|(_, h)| h)
        .collect();
    if !ignored.is_empty() {
        log::warn!("ignoring columns not in schema: {}", ignored.join(", "));
    }

    let used_cols: Vec<usize> = used.iter().copied().filter(|&c| c != id_col).collect();
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<f64>> = HashMap::new();
    let mut cells = vec![0.0; headers.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for &c in &used_cols {
            let raw = record.get(c).unwrap_or("").trim();
            cells[c] = raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                Error::Parse {
                    row: row + 1,
                    column: headers[c].to_string(),
                    value: raw.to_string(),
                }
            })?;
        }
        let id = record.get(id_col).unwrap_or("").trim().to_string();
        let values = groups.entry(id.clone()).or_insert_with(|| {
            order.push(id);
            Vec::new()
        });
        values.extend(
            sources
                .iter()
                .zip(&divisors)
                .map(|(src, d)| src.read(&cells) / d),
        );
    }

    let dims = schema.dims();
    order
        .into_iter()
        .map(|id| {
            let values = groups.remove(&id).unwrap_or_default();
            MeasurementProfile::new(id, dims, values)
        })
        .collect()
}

/// Writes profiles in physical units with a `profile_id` column, the format
/// [`ingest_csv`] reads.
pub fn write_csv_to<W: Write>(
    writer: W,
    schema: &ChannelSchema,
    profiles: &[MeasurementProfile],
) -> Result<()> {
    let divisors = schema.divisor_vector()?;
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec![PROFILE_ID.to_string()];
    header.extend(schema.columns().map(str::to_string));
    wtr.write_record(&header)?;
    for p in profiles {
        if p.dims() != schema.dims() {
            return Err(Error::Shape(format!(
                "profile `{}` does not match the schema layout",
                p.id()
            )));
        }
        for k in 0..p.len() {
            let mut rec = vec![p.id().to_string()];
            rec.extend(p.row(k).iter().zip(&divisors).map(|(v, d)| (v * d).to_string()));
            wtr.write_record(&rec)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv(
    path: impl AsRef<Path>,
    schema: &ChannelSchema,
    profiles: &[MeasurementProfile],
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv_to(std::io::BufWriter::new(file), schema, profiles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn schema() -> ChannelSchema {
        ChannelSchema::new(&["i_s"], &["coolant"], &["pm", "sw"], 0.5).unwrap()
    }

    #[test]
    fn vector_norms() {
        assert_eq!(derive_vector_norms(3.0, 4.0, 0.0, 0.0).0, 5.0);
        assert_eq!(derive_vector_norms(0.0, 0.0, 0.0, 0.0), (0.0, 0.0));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let (d, q): (f64, f64) = (rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0));
            let brute = (d * d + q * q).sqrt();
            let (u, i) = derive_vector_norms(d, q, q, d);
            assert!((u - brute).abs() <= 1e-12 * brute.max(1.0));
            assert!((i - brute).abs() <= 1e-12 * brute.max(1.0));
        }
    }

    #[test]
    fn normalizes_and_groups() {
        let csv = "profile_id,i_s,coolant,pm,sw,extra\n\
                   a,100,0,0,0,9\n\
                   a,50,20,30,40,9\n\
                   b,0,0,0,0,1\n\
                   c,1,1,1,1,1\n\
                   b,0,0,0,0,1\n\
                   c,1,1,1,1,1\n\
                   c,1,1,1,1,1\n";
        let profiles = ingest_reader(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(profiles.len(), 3);
        assert_eq!(profiles.iter().map(|p| p.len()).sum::<usize>(), 7);
        let a = &profiles[0];
        assert_eq!(a.id(), "a");
        assert_eq!(a.exogenous(0), &[1.0]);
        assert_eq!(a.row(0), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(a.targets(1), &[0.3, 0.4]);
        assert!(profiles[1].values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn derives_norms_from_dq() {
        let csv = "profile_id,i_d,i_q,coolant,pm,sw\np,60,80,0,0,0\np,0,0,0,0,0\n";
        let profiles = ingest_reader(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(profiles[0].exogenous(0), &[1.0]);
    }

    #[test]
    fn errors_name_the_problem() {
        let err = ingest_reader("profile_id,i_s,coolant,pm\na,1,1,1\n".as_bytes(), &schema()).unwrap_err();
        assert!(matches!(err, Error::Schema(ref m) if m.contains("`sw`")), "{err}");

        let err = ingest_reader(
            "profile_id,i_s,coolant,pm,sw\na,1,1,1,1\na,1,x,1,1\n".as_bytes(),
            &schema(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, ref column, .. } if column == "coolant"), "{err}");

        let err = ingest_reader(
            "profile_id,i_s,coolant,pm,sw\na,1,1,1,1\na,1,,1,1\n".as_bytes(),
            &schema(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));

        // single-sample profile
        let err = ingest_reader(
            "profile_id,i_s,coolant,pm,sw\na,1,1,1,1\na,1,1,1,1\nb,1,1,1,1\n".as_bytes(),
            &schema(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
    }

    #[test]
    fn write_then_ingest_is_lossless_and_deterministic() {
        let csv = "profile_id,i_s,coolant,pm,sw\na,123.456,21.5,77.125,80.3\na,0.1,22,78,81\n";
        let first = ingest_reader(csv.as_bytes(), &schema()).unwrap();
        let again = ingest_reader(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(first, again);
        let mut buf = Vec::new();
        write_csv_to(&mut buf, &schema(), &first).unwrap();
        let back = ingest_reader(buf.as_slice(), &schema()).unwrap();
        for (x, y) in first[0].values().iter().zip(back[0].values()) {
            assert!((x - y).abs() <= 1e-15 * x.abs().max(1.0));
        }
    }
}
