//! Convergence sweeps against a fine zeroth-order reference cascade, plus the
//! CSV formats for scattering matrices and sweep rows.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::StructureSpec;
use crate::linalg::{c, CMat};
use crate::modal::BasisId;
use crate::section::Order;
use crate::smatrix::{ScatteringMatrix, BLOCK_NAMES};
use crate::solver::{solve_adaptive, solve_uniform, ReferenceRule, SolveReport, SolverConfig};

pub const DEFAULT_ORACLE_SECTIONS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Uniform0,
    Uniform1,
    Adaptive,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Uniform0 => "uniform0",
            Method::Uniform1 => "uniform1",
            Method::Adaptive => "adaptive",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform0" => Ok(Method::Uniform0),
            "uniform1" => Ok(Method::Uniform1),
            "adaptive" => Ok(Method::Adaptive),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}` (expected uniform0, uniform1 or adaptive)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub method: Method,
    /// Section count for uniform runs, `alpha` for adaptive runs.
    pub knob: f64,
    pub error_max_norm: f64,
    pub wall_ms: f64,
    pub eig_count: usize,
}

/// Comma-separated list of finite numbers. An empty list is an error.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, tok) in text.split(',').enumerate() {
        let tok = tok.trim();
        if tok.is_empty() {
            if text.trim().is_empty() {
                break;
            }
            return Err(Error::InvalidArgument(format!("empty entry at position {} in grid", i + 1)));
        }
        let v: f64 = tok
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("grid entry `{tok}` is not a number")))?;
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("grid entry `{tok}` is not finite")));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument("knob grid is empty".into()));
    }
    Ok(out)
}

pub fn parse_methods(text: &str) -> Result<Vec<Method>> {
    let methods: Vec<Method> = text
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if methods.is_empty() {
        return Err(Error::InvalidArgument("method list is empty".into()));
    }
    Ok(methods)
}

fn section_count(knob: f64) -> Result<usize> {
    if knob >= 1.0 && knob.fract() == 0.0 && knob <= u32::MAX as f64 {
        Ok(knob as usize)
    } else {
        Err(Error::InvalidArgument(format!("section count must be a positive integer, got {knob}")))
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub methods: Vec<Method>,
    /// Section counts for uniform methods; also the alpha grid when
    /// `alpha_grid` is absent.
    pub grid: Vec<f64>,
    pub alpha_grid: Option<Vec<f64>>,
    pub oracle_sections: usize,
    pub reference_rule: ReferenceRule,
}

impl SweepConfig {
    pub fn new(methods: Vec<Method>, grid: Vec<f64>) -> Self {
        SweepConfig {
            methods,
            grid,
            alpha_grid: None,
            oracle_sections: DEFAULT_ORACLE_SECTIONS,
            reference_rule: ReferenceRule::Midpoint,
        }
    }

    fn knobs(&self, m: Method) -> &[f64] {
        match (m, &self.alpha_grid) {
            (Method::Adaptive, Some(a)) => a,
            _ => &self.grid,
        }
    }
}

/// Zeroth-order uniform cascade used as ground truth.
pub fn oracle(spec: &StructureSpec, sections: usize) -> Result<SolveReport> {
    solve_uniform(spec, sections, Order::Zeroth, ReferenceRule::Midpoint)
}

pub fn run_method(spec: &StructureSpec, m: Method, knob: f64, rule: ReferenceRule) -> Result<SolveReport> {
    match m {
        Method::Uniform0 => solve_uniform(spec, section_count(knob)?, Order::Zeroth, rule),
        Method::Uniform1 => solve_uniform(spec, section_count(knob)?, Order::First, rule),
        Method::Adaptive => solve_adaptive(spec, &SolverConfig::with_rule(knob, rule)),
    }
}

pub fn record(m: Method, knob: f64, report: &SolveReport, reference: &ScatteringMatrix) -> Result<SweepRecord> {
    Ok(SweepRecord {
        method: m,
        knob,
        error_max_norm: report.smat.max_norm_diff(reference)?,
        wall_ms: report.total_wall_time.as_secs_f64() * 1e3,
        eig_count: report.total_eig_count,
    })
}

/// Rows are produced in method order, then knob order.
pub fn run_sweep(spec: &StructureSpec, cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    if cfg.methods.is_empty() {
        return Err(Error::InvalidArgument("method list is empty".into()));
    }
    for m in &cfg.methods {
        if cfg.knobs(*m).is_empty() {
            return Err(Error::InvalidArgument("knob grid is empty".into()));
        }
    }
    if cfg.oracle_sections == 0 {
        return Err(Error::InvalidArgument("oracle section count must be at least 1".into()));
    }
    let truth = oracle(spec, cfg.oracle_sections)?;
    let mut rows = Vec::new();
    for &m in &cfg.methods {
        for &knob in cfg.knobs(m) {
            let report = run_method(spec, m, knob, cfg.reference_rule)?;
            rows.push(record(m, knob, &report, &truth.smat)?);
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(io_error)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("write failed: {e}")))?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize().map(|r| r.map_err(csv_error)).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct EntryRow {
    block: String,
    row: usize,
    col: usize,
    re: f64,
    im: f64,
}

fn io_error(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("write failed: {e}"))
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Syntax { line, column: 0, message: e.to_string() }
}

/// One row per entry, blocks in `TLR, RR, RL, TRL` order, row-major.
pub fn write_smatrix_csv<W: Write>(out: W, s: &ScatteringMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (name, block) in BLOCK_NAMES.iter().zip(s.blocks()) {
        for row in 0..block.nrows() {
            for col in 0..block.ncols() {
                let z = block[(row, col)];
                w.serialize(EntryRow { block: (*name).into(), row, col, re: z.re, im: z.im })
                    .map_err(io_error)?;
            }
        }
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("write failed: {e}")))?;
    Ok(())
}

/// Inverse of [`write_smatrix_csv`]. Every entry of all four blocks must
/// appear exactly once; the ports are tagged with the supplied ids.
pub fn read_smatrix_csv<R: Read>(input: R, left: BasisId, right: BasisId) -> Result<ScatteringMatrix> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers().map_err(csv_error)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["block", "row", "col", "re", "im"] {
        return Err(Error::Syntax {
            line: 1,
            column: 1,
            message: "expected header `block,row,col,re,im`".into(),
        });
    }
    let mut entries = Vec::new();
    let mut n = 0usize;
    for rec in rd.deserialize::<EntryRow>() {
        let e = rec.map_err(csv_error)?;
        let line = entries.len() + 2;
        let b = BLOCK_NAMES.iter().position(|&name| name == e.block).ok_or_else(|| Error::Syntax {
            line,
            column: 1,
            message: format!("unknown block `{}`", e.block),
        })?;
        if !e.re.is_finite() || !e.im.is_finite() {
            return Err(Error::Syntax { line, column: 4, message: "non-finite entry".into() });
        }
        if e.row >= 1 << 16 || e.col >= 1 << 16 {
            return Err(Error::Syntax { line, column: 2, message: "index too large".into() });
        }
        n = n.max(e.row + 1).max(e.col + 1);
        entries.push((b, e.row, e.col, c(e.re, e.im), line));
    }
    if n == 0 {
        return Err(Error::Semantic("scattering-matrix CSV has no entries".into()));
    }
    if entries.len() != 4 * n * n {
        return Err(Error::Semantic(format!(
            "expected {} entries for dimension {n}, found {}",
            4 * n * n,
            entries.len()
        )));
    }
    let mut blocks = vec![CMat::zeros(n, n); 4];
    let mut seen = vec![false; 4 * n * n];
    for (b, row, col, z, line) in entries {
        let k = (b * n + row) * n + col;
        if seen[k] {
            return Err(Error::Syntax {
                line,
                column: 1,
                message: format!("duplicate entry {}[{row},{col}]", BLOCK_NAMES[b]),
            });
        }
        seen[k] = true;
        blocks[b][(row, col)] = z;
    }
    let mut it = blocks.into_iter();
    Ok(ScatteringMatrix {
        t_lr: it.next().unwrap(),
        r_r: it.next().unwrap(),
        r_l: it.next().unwrap(),
        t_rl: it.next().unwrap(),
        left_basis: left,
        right_basis: right,
    })
}

/// Machine-readable summary of a solve.
pub fn report_summary(report: &SolveReport) -> serde_json::Value {
    let sections: Vec<serde_json::Value> = report
        .sections
        .iter()
        .map(|s| {
            serde_json::json!({
                "z_l": s.z_l,
                "z_r": s.z_r,
                "est_error": s.est_error,
                "depth": s.depth,
            })
        })
        .collect();
    serde_json::json!({
        "section_count": report.sections.len(),
        "sections_solved": report.sections_solved,
        "total_eig_count": report.total_eig_count,
        "port_eig_count": report.port_eig_count,
        "total_wall_ms": report.total_wall_time.as_secs_f64() * 1e3,
        "left_port": report.left_port.id().to_string(),
        "right_port": report.right_port.id().to_string(),
        "sections": sections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{MaterialRegion, Polarization, Profile};

    fn taper() -> StructureSpec {
        StructureSpec {
            wavelength_um: 1.55,
            polarization: Polarization::TE,
            period_x_um: 1.0,
            z_min: 0.0,
            z_max: 1.0,
            truncation_order: 2,
            background_eps: c(1.0, 0.0),
            regions: vec![MaterialRegion {
                eps: c(12.25, 0.0),
                center_x: Profile::Constant { value: 0.5 },
                width: Profile::Linear { start: 0.26, end: 0.37 },
            }],
        }
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("2,4, 8").unwrap(), vec![2.0, 4.0, 8.0]);
        assert_eq!(parse_grid("1e-3").unwrap(), vec![1e-3]);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("  ").is_err());
        assert!(parse_grid("2,,4").is_err());
        assert!(parse_grid("2,x").is_err());
        assert!(parse_grid("inf").is_err());
    }

    #[test]
    fn method_parsing() {
        assert_eq!(
            parse_methods("uniform0,uniform1,adaptive").unwrap(),
            vec![Method::Uniform0, Method::Uniform1, Method::Adaptive]
        );
        assert!(parse_methods("").is_err());
        assert!(parse_methods("uniform2").is_err());
    }

    #[test]
    fn smatrix_csv_round_trip() {
        let s = oracle(&taper(), 4).unwrap().smat;
        let mut buf = Vec::new();
        write_smatrix_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("block,row,col,re,im\nTLR,0,0,"));
        assert_eq!(text.lines().count(), 1 + 4 * 25);
        let back = read_smatrix_csv(&buf[..], s.left_basis, s.right_basis).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn smatrix_csv_rejects_bad_input() {
        let id = BasisId::from_raw(0);
        for bad in [
            "",
            "block,row,col,re,im\n",
            "a,b\n",
            "block,row,col,re,im\nXX,0,0,1,0\nRR,0,0,0,0\nRL,0,0,0,0\nTRL,0,0,1,0\n",
            "block,row,col,re,im\nTLR,0,0,1,0\nTLR,0,0,0,0\nRL,0,0,0,0\nTRL,0,0,1,0\n",
            "block,row,col,re,im\nTLR,0,0,1,0\nRR,0,0,0,0\nRL,0,0,0,0\n",
            "block,row,col,re,im\nTLR,0,0,1,0\nRR,0,0,zz,0\nRL,0,0,0,0\nTRL,0,0,1,0\n",
            "block,row,col,re,im\nTLR,0,0,NaN,0\nRR,0,0,0,0\nRL,0,0,0,0\nTRL,0,0,1,0\n",
        ] {
            assert!(read_smatrix_csv(bad.as_bytes(), id, id).is_err(), "{bad:?}");
        }
        let ok = "block,row,col,re,im\nTLR,0,0,1,0\nRR,0,0,0,0\nRL,0,0,0,0\nTRL,0,0,1,0\n";
        assert_eq!(read_smatrix_csv(ok.as_bytes(), id, id).unwrap(), ScatteringMatrix::identity(1, id));
    }

    #[test]
    fn sweep_rows_are_ordered_and_consistent() {
        let spec = taper();
        let mut cfg = SweepConfig::new(vec![Method::Uniform0, Method::Adaptive], vec![2.0, 4.0]);
        cfg.alpha_grid = Some(vec![1e-1, 1e-2]);
        cfg.oracle_sections = 64;
        let rows = run_sweep(&spec, &cfg).unwrap();
        let keys: Vec<(Method, f64)> = rows.iter().map(|r| (r.method, r.knob)).collect();
        assert_eq!(
            keys,
            vec![(Method::Uniform0, 2.0), (Method::Uniform0, 4.0), (Method::Adaptive, 1e-1), (Method::Adaptive, 1e-2)]
        );
        assert_eq!(rows[0].eig_count, 2);
        let adaptive = run_method(&spec, Method::Adaptive, 1e-2, ReferenceRule::Midpoint).unwrap();
        assert_eq!(rows[3].eig_count, adaptive.total_eig_count);
        assert!(rows.iter().all(|r| r.error_max_norm >= 0.0));

        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("method,knob,error_max_norm,wall_ms,eig_count\nuniform0,2.0,"));
        assert_eq!(read_sweep_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn sweep_input_errors() {
        let spec = taper();
        let empty = SweepConfig::new(vec![Method::Uniform0], vec![]);
        assert!(matches!(run_sweep(&spec, &empty), Err(Error::InvalidArgument(_))));
        let frac = SweepConfig::new(vec![Method::Uniform1], vec![2.5]);
        assert!(matches!(run_sweep(&spec, &frac), Err(Error::InvalidArgument(_))));
    }
}
