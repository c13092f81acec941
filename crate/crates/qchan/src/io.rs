//! File formats: channel/state JSON, analysis reports, orbit CSV.
//!
//! Complex numbers serialize as two-element [re, im] arrays. JSON floats are
//! written with 17 significant digits so every double round-trips losslessly
//! and repeated runs produce byte-identical files. The orbit CSV uses plain
//! decimal floats (shortest round-trip form), one row per step, with Bloch
//! columns r1,r2,r3 appended for qubit runs.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::channel::{ChannelCertificate, KrausChannel};
use crate::contraction::{AuditReport, ContractionEstimate};
use crate::dynamics::{BoundCheckResult, OrbitLog};
use crate::error::{Error, Result};
use crate::mat::{ComplexMatrix, DensityMatrix, Tolerances};
use crate::qubit;
use crate::spectral::SpectralReport;

/// Serializes floats as `{:.16e}` (17 significant digits) on top of the
/// pretty formatter; everything else is stock serde_json.
struct P17Formatter<'a> {
    pretty: PrettyFormatter<'a>,
}

impl<'a> P17Formatter<'a> {
    fn new() -> Self {
        P17Formatter {
            pretty: PrettyFormatter::new(),
        }
    }
}

impl<'a> Formatter for P17Formatter<'a> {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.pretty.begin_array(writer)
    }

    fn end_array<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.pretty.end_array(writer)
    }

    fn begin_array_value<W>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.pretty.begin_array_value(writer, first)
    }

    fn end_array_value<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.pretty.end_array_value(writer)
    }

    fn begin_object<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.pretty.begin_object(writer)
    }

    fn end_object<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.pretty.end_object(writer)
    }

    fn begin_object_key<W>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.pretty.begin_object_key(writer, first)
    }

    fn begin_object_value<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.pretty.begin_object_value(writer)
    }

    fn end_object_value<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.pretty.end_object_value(writer)
    }
}

/// Serializes any value to the canonical JSON text (pretty, 17-digit floats,
/// trailing newline).
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, P17Formatter::new());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf)
        .map_err(|e| Error::InvalidParameter(format!("non-UTF8 JSON output: {e}")))
}

/// Writes canonical JSON to a file.
pub fn write_json_file<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = to_json_string(value)?;
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Channel and state schemas
// ---------------------------------------------------------------------------

/// On-disk channel schema:
/// `{ "dim": N, "kraus": [ [[ [re,im], … ] N rows ] … ] }`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ChannelJson {
    pub dim: usize,
    pub kraus: Vec<Vec<Vec<[f64; 2]>>>,
}

fn matrix_to_rows(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

fn matrix_from_rows(rows: &[Vec<[f64; 2]>], dim: usize, what: &str) -> Result<ComplexMatrix> {
    if rows.len() != dim {
        return Err(Error::ChannelFile(format!(
            "{what}: expected {dim} rows, got {}",
            rows.len()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::ChannelFile(format!(
                "{what}: row {i} has {} entries, expected {dim}",
                row.len()
            )));
        }
    }
    Ok(ComplexMatrix::from_fn(dim, dim, |r, c| {
        Complex64::new(rows[r][c][0], rows[r][c][1])
    }))
}

pub fn channel_to_json(ch: &KrausChannel) -> ChannelJson {
    ChannelJson {
        dim: ch.dim(),
        kraus: ch.kraus_ops().iter().map(matrix_to_rows).collect(),
    }
}

pub fn channel_from_json(json: &ChannelJson, tol: &Tolerances) -> Result<KrausChannel> {
    if json.dim == 0 {
        return Err(Error::ChannelFile("dim must be positive".into()));
    }
    let kraus = json
        .kraus
        .iter()
        .enumerate()
        .map(|(i, rows)| matrix_from_rows(rows, json.dim, &format!("kraus[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    KrausChannel::new(kraus, tol)
}

/// Loads and validates a channel file; the certificate is computed eagerly
/// and non-CPTP input is rejected with its residual diagnostics.
pub fn load_channel(path: &Path, tol: &Tolerances) -> Result<KrausChannel> {
    let text = fs::read_to_string(path)?;
    let json: ChannelJson = serde_json::from_str(&text)
        .map_err(|e| Error::ChannelFile(format!("{}: {e}", path.display())))?;
    let ch = channel_from_json(&json, tol)?;
    let cert = ch.certify(tol);
    if !cert.is_cptp {
        return Err(Error::ChannelFile(format!(
            "{}: not CPTP (choi min eigenvalue {:.3e}, completeness residual {:.3e})",
            path.display(),
            cert.choi_min_eigenvalue,
            cert.unitality_residual
        )));
    }
    Ok(ch)
}

/// Writes a channel file in the canonical byte-stable form.
pub fn save_channel(ch: &KrausChannel, path: &Path) -> Result<()> {
    write_json_file(&channel_to_json(ch), path)
}

/// On-disk density-matrix schema: `{ "dim": N, "matrix": [ [ [re,im], … ] … ] }`.
#[derive(Debug, Serialize, Deserialize)]
pub struct StateJson {
    pub dim: usize,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

pub fn state_to_json(sigma: &DensityMatrix) -> StateJson {
    StateJson {
        dim: sigma.dim(),
        matrix: matrix_to_rows(sigma.matrix()),
    }
}

pub fn state_from_json(json: &StateJson, tol: &Tolerances) -> Result<DensityMatrix> {
    let mat = matrix_from_rows(&json.matrix, json.dim, "state matrix")?;
    DensityMatrix::new(mat, tol)
}

pub fn load_state(path: &Path, tol: &Tolerances) -> Result<DensityMatrix> {
    let text = fs::read_to_string(path)?;
    let json: StateJson = serde_json::from_str(&text)
        .map_err(|e| Error::ChannelFile(format!("{}: {e}", path.display())))?;
    state_from_json(&json, tol)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Serializable view of a contraction estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractionReport {
    pub c_lower: f64,
    pub method: String,
    pub restarts: usize,
    pub converged: bool,
    /// `true` when `c_lower` is the analytically exact rate rather than an
    /// optimizer lower bound; inequality checks with C on the weak side are
    /// only asserted in that case.
    pub c_is_exact: bool,
    /// The witnessing orthonormal pair, entries as [re, im].
    pub best_pair: Vec<Vec<[f64; 2]>>,
}

pub fn contraction_report(est: &ContractionEstimate, c_is_exact: bool) -> ContractionReport {
    let vec_to_rows = |v: &crate::mat::ComplexVector| -> Vec<[f64; 2]> {
        v.iter().map(|z| [z.re, z.im]).collect()
    };
    ContractionReport {
        c_lower: est.c_lower,
        method: est.method.as_str().to_string(),
        restarts: est.restarts,
        converged: est.converged,
        c_is_exact,
        best_pair: vec![vec_to_rows(&est.best_pair.0), vec_to_rows(&est.best_pair.1)],
    }
}

/// Serializable view of a ratio audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditSummary {
    pub trials: usize,
    pub max_ratio: f64,
    pub violations: usize,
    pub refinement_rounds: usize,
    pub conclusive: bool,
}

pub fn audit_summary(audit: &AuditReport) -> AuditSummary {
    AuditSummary {
        trials: audit.trials,
        max_ratio: audit.max_ratio,
        violations: audit.violations,
        refinement_rounds: audit.refinement_rounds,
        conclusive: audit.conclusive,
    }
}

/// Aggregated certificate for one channel.
///
/// `runtime_ms` is zeroed in serialized output so repeated runs are
/// byte-identical; wall-clock timing goes to stderr instead.
#[derive(Debug, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub channel_source: String,
    pub certificate: ChannelCertificate,
    pub spectral: Option<SpectralReport>,
    pub contraction: Option<ContractionReport>,
    pub audit: Option<AuditSummary>,
    pub bound_checks: Vec<BoundCheckResult>,
    pub runtime_ms: u64,
    pub seed: u64,
    pub tool_version: String,
    pub status: Vec<String>,
}

/// Machine-readable error envelope printed to stderr by the CLI.
#[derive(Debug, Serialize)]
pub struct ErrorJson {
    pub error: String,
    pub exit_code: i32,
}

// ---------------------------------------------------------------------------
// Orbit CSV
// ---------------------------------------------------------------------------

/// Renders an orbit log as CSV: columns n, trace_dist, hs_dist_sq, entropy,
/// delta_S, plus r1,r2,r3 for qubit orbits. Header row mandatory,
/// decimal-point floats.
pub fn orbit_to_csv(log: &OrbitLog) -> Result<String> {
    let mut out = String::new();
    let qubit = log.dim == 2;
    out.push_str("n,trace_dist,hs_dist_sq,entropy,delta_S");
    if qubit {
        out.push_str(",r1,r2,r3");
    }
    out.push('\n');
    for row in &log.rows {
        write!(
            out,
            "{},{},{},{},{}",
            row.n, row.trace_dist, row.hs_dist_sq, row.entropy, row.delta_s
        )
        .expect("writing to a String cannot fail");
        if qubit {
            let r = qubit::to_bloch(&row.state)?;
            write!(out, ",{},{},{}", r.r1, r.r2, r.r3).expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{make_depolarizing, make_random_unitary_mixture};
    use crate::dynamics::iterate_orbit;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn float_formatting_is_lossless_17_digits() {
        let values = [0.5, 1.0 / 3.0, 0.1 + 0.2, 2.0f64.sqrt(), 1e-300, -0.75];
        for &v in &values {
            let text = to_json_string(&v).unwrap();
            assert!(text.contains('e'), "expected scientific form: {text}");
            let back: f64 = serde_json::from_str(text.trim()).unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "round trip broke for {v}");
        }
    }

    #[test]
    fn channel_file_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ch.json");
        let ch = make_random_unitary_mixture(3, 4, 11, &tol()).unwrap();
        save_channel(&ch, &path).unwrap();
        let loaded = load_channel(&path, &tol()).unwrap();
        let path2 = dir.path().join("ch2.json");
        save_channel(&loaded, &path2).unwrap();
        let a = std::fs::read(&path).unwrap();
        let b = std::fs::read(&path2).unwrap();
        assert_eq!(a, b, "save→load→save must be byte-identical");
    }

    #[test]
    fn load_rejects_incomplete_kraus_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        // Single Kraus operator diag(1,0): ΣV†V = diag(1,0) ≠ I.
        std::fs::write(
            &path,
            r#"{"dim":2,"kraus":[[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[0.0,0.0]]]]}"#,
        )
        .unwrap();
        assert!(matches!(
            load_channel(&path, &tol()),
            Err(Error::NotTracePreserving { .. })
        ));
    }

    #[test]
    fn load_reports_parse_errors_with_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("syntax.json");
        std::fs::write(&path, "{\"dim\": 2, \"kraus\": [[").unwrap();
        match load_channel(&path, &tol()) {
            Err(Error::ChannelFile(msg)) => {
                assert!(msg.contains("line"), "no location in: {msg}")
            }
            other => panic!("expected ChannelFile error, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mismatch.json");
        std::fs::write(
            &path,
            r#"{"dim":2,"kraus":[[[[1.0,0.0]],[[0.0,0.0]]]]}"#,
        )
        .unwrap();
        assert!(matches!(
            load_channel(&path, &tol()),
            Err(Error::ChannelFile(_))
        ));
    }

    #[test]
    fn identity_channel_file_loads_bistochastic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("id.json");
        save_channel(&KrausChannel::identity_channel(2), &path).unwrap();
        let ch = load_channel(&path, &tol()).unwrap();
        assert!(ch.certify(&tol()).is_bistochastic);
    }

    #[test]
    fn depolarizing_file_round_trip_preserves_action() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dep.json");
        let dep = make_depolarizing(2, 0.5, &tol()).unwrap();
        save_channel(&dep, &path).unwrap();
        let loaded = load_channel(&path, &tol()).unwrap();
        let sigma = DensityMatrix::basis_state(2, 0).unwrap();
        let img = loaded.apply_schrodinger(sigma.matrix()).unwrap();
        assert!((img[(0, 0)].re - 0.75).abs() < 1e-12);
        assert!((img[(1, 1)].re - 0.25).abs() < 1e-12);
    }

    #[test]
    fn state_round_trip() {
        let mut rng = crate::sample::rng_from(3);
        let sigma = crate::sample::random_density(3, &mut rng);
        let json = state_to_json(&sigma);
        let text = to_json_string(&json).unwrap();
        let parsed: StateJson = serde_json::from_str(&text).unwrap();
        let back = state_from_json(&parsed, &tol()).unwrap();
        assert!(crate::mat::hs_norm(&(sigma.matrix() - back.matrix())) < 1e-15);
    }

    #[test]
    fn orbit_csv_has_bloch_columns_for_qubits() {
        let dep = make_depolarizing(2, 0.5, &tol()).unwrap();
        let sigma = DensityMatrix::basis_state(2, 0).unwrap();
        let log = iterate_orbit(&dep, &sigma, 2, &tol()).unwrap();
        let csv = orbit_to_csv(&log).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,trace_dist,hs_dist_sq,entropy,delta_S,r1,r2,r3");
        assert_eq!(lines.len(), 4);
        // r3 decays 1 → 0.5 → 0.25.
        for (line, want_r3) in lines[1..].iter().zip([1.0, 0.5, 0.25]) {
            let fields: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert_eq!(fields.len(), 8);
            assert!((fields[7] - want_r3).abs() < 1e-12, "bad r3 in {line}");
        }

        let dep3 = make_depolarizing(3, 0.5, &tol()).unwrap();
        let sigma3 = DensityMatrix::basis_state(3, 0).unwrap();
        let log3 = iterate_orbit(&dep3, &sigma3, 1, &tol()).unwrap();
        let csv3 = orbit_to_csv(&log3).unwrap();
        assert!(csv3.lines().next().unwrap() == "n,trace_dist,hs_dist_sq,entropy,delta_S");
    }
}
