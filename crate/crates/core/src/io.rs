//! File formats: CSV tables with a mandatory header and small JSON sidecars.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so reading
//! a file back reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::{ExpFam1P, FieldSample, GlmDataset, SurvivalDataset, TorusLattice};
use crate::sampler::{DrawMatrix, GridDensity};
use crate::Real;

/// `draws.csv` → `draws.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn header(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|k| format!("{prefix}_{k}")).collect()
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

fn fmt<T: Real>(v: T) -> String {
    v.as_f64().to_string()
}

fn parse<T: Real>(field: &str, line: u64) -> Result<T> {
    field
        .trim()
        .parse::<f64>()
        .map(T::lit)
        .map_err(|_| Error::Data(format!("line {line}: cannot parse {field:?} as a number")))
}

/// Reads a headed CSV; returns the header and numeric rows.
fn read_table<T: Real>(path: &Path) -> Result<(Vec<String>, Vec<Vec<T>>)> {
    let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let head: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != head.len() {
            return Err(Error::Data(format!(
                "line {line}: expected {} columns, got {}",
                head.len(),
                rec.len()
            )));
        }
        rows.push(rec.iter().map(|f| parse(f, line)).collect::<Result<Vec<T>>>()?);
    }
    Ok((head, rows))
}

fn expect_header(found: &[String], expected: &[String], path: &Path) -> Result<()> {
    if found != expected {
        return Err(Error::Data(format!(
            "{}: expected header {}, found {}",
            path.display(),
            expected.join(","),
            found.join(",")
        )));
    }
    Ok(())
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_json<S: for<'de> Deserialize<'de>>(path: &Path) -> Result<S> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawMetadata {
    pub seed: u64,
    pub stream: u64,
    pub acceptance_rate: f64,
    pub burn_in: usize,
    pub final_scale: f64,
    pub draws: usize,
    pub dim: usize,
}

/// Draws as `theta_1,...,theta_D` plus a JSON sidecar with the chain metadata.
pub fn write_draws<T: Real>(path: &Path, draws: &DrawMatrix<T>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header("theta", draws.dim()))?;
    for s in 0..draws.len() {
        w.write_record(draws.row(s).iter().map(|&v| fmt(v)))?;
    }
    w.flush()?;
    write_json(
        &sidecar_path(path),
        &DrawMetadata {
            seed: draws.seed,
            stream: draws.stream,
            acceptance_rate: draws.acceptance_rate,
            burn_in: draws.burn_in,
            final_scale: draws.final_scale,
            draws: draws.len(),
            dim: draws.dim(),
        },
    )
}

pub fn read_draws<T: Real>(path: &Path) -> Result<DrawMatrix<T>> {
    let (head, rows) = read_table::<T>(path)?;
    expect_header(&head, &header("theta", head.len()), path)?;
    let mut dm = DrawMatrix::from_draws(Matrix::from_rows(&rows)?, 0)?;
    let side = sidecar_path(path);
    if side.exists() {
        let meta: DrawMetadata = read_json(&side)?;
        dm.seed = meta.seed;
        dm.stream = meta.stream;
        dm.acceptance_rate = meta.acceptance_rate;
        dm.burn_in = meta.burn_in;
        dm.final_scale = meta.final_scale;
    }
    Ok(dm)
}

/// GLM data as `x_1,...,x_D,y`.
pub fn write_glm_csv<T: Real>(path: &Path, data: &GlmDataset<T>) -> Result<()> {
    let mut w = writer(path)?;
    let mut head = header("x", data.dim());
    head.push("y".into());
    w.write_record(&head)?;
    for i in 0..data.n() {
        let mut rec: Vec<String> = data.x.row(i).iter().map(|&v| fmt(v)).collect();
        rec.push(fmt(data.y[i]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_glm_csv<T: Real>(path: &Path, family: ExpFam1P<T>) -> Result<GlmDataset<T>> {
    let (head, rows) = read_table::<T>(path)?;
    if head.len() < 2 {
        return Err(Error::Data(format!("{}: GLM CSV needs x_1..x_D,y", path.display())));
    }
    let d = head.len() - 1;
    let mut expected = header("x", d);
    expected.push("y".into());
    expect_header(&head, &expected, path)?;
    let mut x = Vec::with_capacity(rows.len() * d);
    let mut y = Vec::with_capacity(rows.len());
    for r in &rows {
        x.extend_from_slice(&r[..d]);
        family.validate_response(r[d])?;
        y.push(r[d]);
    }
    Ok(GlmDataset {
        x: Matrix::from_row_major(rows.len(), d, x)?,
        y,
        family,
    })
}

/// Survival data as `time,event,x_1,...,x_D` with `event ∈ {0, 1}`.
pub fn write_survival_csv<T: Real>(path: &Path, data: &SurvivalDataset<T>) -> Result<()> {
    let mut w = writer(path)?;
    let mut head = vec!["time".to_string(), "event".to_string()];
    head.extend(header("x", data.dim()));
    w.write_record(&head)?;
    for i in 0..data.n() {
        let mut rec = vec![fmt(data.times[i]), u8::from(data.events[i]).to_string()];
        rec.extend(data.x.row(i).iter().map(|&v| fmt(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_survival_csv<T: Real>(path: &Path) -> Result<SurvivalDataset<T>> {
    let (head, rows) = read_table::<T>(path)?;
    if head.len() < 3 {
        return Err(Error::Data(format!(
            "{}: survival CSV needs time,event,x_1..x_D",
            path.display()
        )));
    }
    let d = head.len() - 2;
    let mut expected = vec!["time".to_string(), "event".to_string()];
    expected.extend(header("x", d));
    expect_header(&head, &expected, path)?;
    let mut times = Vec::with_capacity(rows.len());
    let mut events = Vec::with_capacity(rows.len());
    let mut x = Vec::with_capacity(rows.len() * d);
    for r in &rows {
        times.push(r[0]);
        events.push(if r[1] == T::one() {
            true
        } else if r[1] == T::zero() {
            false
        } else {
            return Err(Error::Data(format!("event indicator must be 0 or 1, got {}", r[1])));
        });
        x.extend_from_slice(&r[2..]);
    }
    SurvivalDataset::new(times, events, Matrix::from_row_major(rows.len(), d, x)?)
}

/// Field values as a one-column CSV `y` in site order, with the lattice
/// `{m, L}` in the JSON sidecar.
pub fn write_field<T: Real>(path: &Path, field: &FieldSample<T>) -> Result<()> {
    write_column(path, "y", &field.values)?;
    write_json(&sidecar_path(path), &field.lattice)
}

pub fn read_field<T: Real>(path: &Path) -> Result<FieldSample<T>> {
    let side = sidecar_path(path);
    if !side.exists() {
        return Err(Error::Data(format!("missing lattice header {}", side.display())));
    }
    let lattice: TorusLattice = read_json(&side)?;
    let lattice = TorusLattice::new(lattice.m, lattice.side)?;
    FieldSample::new(lattice, read_column(path, "y")?)
}

/// One-column CSV of scalars.
pub fn write_column<T: Real>(path: &Path, name: &str, values: &[T]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([name])?;
    for &v in values {
        w.write_record([fmt(v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_column<T: Real>(path: &Path, name: &str) -> Result<Vec<T>> {
    let (head, rows) = read_table::<T>(path)?;
    expect_header(&head, &[name.to_string()], path)?;
    Ok(rows.into_iter().map(|r| r[0]).collect())
}

/// Boltzmann samples as `y_1,...,y_d` with `±1` entries.
pub fn write_boltzmann_csv<T: Real>(path: &Path, samples: &[Vec<T>]) -> Result<()> {
    let d = samples.first().map_or(0, Vec::len);
    let mut w = writer(path)?;
    w.write_record(header("y", d))?;
    for y in samples {
        w.write_record(y.iter().map(|&v| fmt(v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_boltzmann_csv<T: Real>(path: &Path) -> Result<Vec<Vec<T>>> {
    let (head, rows) = read_table::<T>(path)?;
    expect_header(&head, &header("y", head.len()), path)?;
    if rows.iter().flatten().any(|&v| v != T::one() && v != -T::one()) {
        return Err(Error::Data("Boltzmann samples must be -1 or +1".into()));
    }
    Ok(rows)
}

/// Grid posterior as `theta_1,...,theta_D,density,mass`, one row per cell.
pub fn write_grid_csv<T: Real>(path: &Path, grid: &GridDensity<T>) -> Result<()> {
    let mut w = writer(path)?;
    let mut head = header("theta", grid.dim());
    head.extend(["density".to_string(), "mass".to_string()]);
    w.write_record(&head)?;
    for c in 0..grid.cell_count() {
        let mut rec: Vec<String> = grid.center(c).into_iter().map(fmt).collect();
        rec.push(fmt(grid.density(c)));
        rec.push(fmt(grid.masses[c]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::simulate::{gen_cox, gen_glm, Baseline, Censoring, CovariateSpec, GlmKind};

    #[test]
    fn draws_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("draws.csv");
        let mut dm = DrawMatrix::from_draws(
            Matrix::from_rows(&[vec![0.1, 1.0 / 3.0], vec![-2.5e-17, 7.0]]).unwrap(),
            42,
        )
        .unwrap();
        dm.acceptance_rate = 0.31;
        write_draws(&p, &dm).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("theta_1,theta_2\n"));
        let back: DrawMatrix<f64> = read_draws(&p).unwrap();
        assert_eq!(back.draws.as_slice(), dm.draws.as_slice());
        assert_eq!(back.seed, 42);
        assert_eq!(back.acceptance_rate, 0.31);
    }

    #[test]
    fn glm_and_survival_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let unit = CovariateSpec::BoundedUniform { a: -1.0, b: 1.0 };
        let g: GlmDataset<f64> =
            gen_glm(GlmKind::Logistic, &[0.5, -0.2], 30, &unit, 1.0, &mut stream_rng(1, 0)).unwrap();
        let p = dir.path().join("glm.csv");
        write_glm_csv(&p, &g).unwrap();
        let back: GlmDataset<f64> = read_glm_csv(&p, ExpFam1P::BernoulliLogit).unwrap();
        assert_eq!(back.x.as_slice(), g.x.as_slice());
        assert_eq!(back.y, g.y);
        assert!(read_glm_csv::<f64>(&p, ExpFam1P::PlusMinusBinary).is_err());

        let s: SurvivalDataset<f64> = gen_cox(
            25,
            &[1.0],
            Baseline::Exponential { c: 1.0 },
            Censoring::Uniform { c: 2.0 },
            &unit,
            &mut stream_rng(2, 0),
        )
        .unwrap();
        let p = dir.path().join("surv.csv");
        write_survival_csv(&p, &s).unwrap();
        let back: SurvivalDataset<f64> = read_survival_csv(&p).unwrap();
        assert_eq!(back.times, s.times);
        assert_eq!(back.events, s.events);
    }

    #[test]
    fn field_and_boltzmann_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let lattice = TorusLattice::new(2, 3).unwrap();
        let f = FieldSample::new(lattice, (0..9).map(|i| i as f64 * 0.1).collect()).unwrap();
        let p = dir.path().join("field.csv");
        write_field(&p, &f).unwrap();
        let json = std::fs::read_to_string(sidecar_path(&p)).unwrap();
        assert!(json.contains("\"L\": 3"));
        let back: FieldSample<f64> = read_field(&p).unwrap();
        assert_eq!(back.values, f.values);

        let samples = vec![vec![1.0, -1.0, 1.0], vec![-1.0, -1.0, 1.0]];
        let p = dir.path().join("bm.csv");
        write_boltzmann_csv(&p, &samples).unwrap();
        assert_eq!(read_boltzmann_csv::<f64>(&p).unwrap(), samples);
    }

    #[test]
    fn malformed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "x_1,y\n1.0,abc\n").unwrap();
        let err = read_glm_csv::<f64>(&p, ExpFam1P::Gaussian { sigma2: 1.0 }).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        std::fs::write(&p, "a,y\n1.0,2.0\n").unwrap();
        assert!(read_glm_csv::<f64>(&p, ExpFam1P::Gaussian { sigma2: 1.0 }).is_err());
        assert!(read_field::<f64>(&p).is_err());
    }
}
