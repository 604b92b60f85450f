//! Trace CSV files: a `#`-prefixed header block, then one row per
//! instrumented iteration. Reals are written with 17 significant digits.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::MetricKind;
use crate::problem::Provenance;
use crate::trace::{Algorithm, SolverTrace, TraceHeader, TraceRow};

pub const COLUMNS: [&str; 8] = [
    "k",
    "ids",
    "ids_certificate",
    "kkt_residual_sq",
    "gap_bound",
    "inclusion_residual",
    "agd_iters",
    "elapsed_ns",
];

const MAGIC: &str = "# idsopt trace";

fn real(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Config(format!("trace write failed: {e}")),
        _ => Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        },
    }
}

pub fn format_header(h: &TraceHeader) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "# instance: {}", h.instance.replace('\n', " "));
    let _ = writeln!(out, "# algorithm: {}", h.algorithm);
    match h.metric {
        MetricKind::Pdhg { s } | MetricKind::Ppm { s } => {
            let _ = writeln!(out, "# s: {s:e}");
        }
        MetricKind::Ladmm { tau, lambda } => {
            let _ = writeln!(out, "# tau: {tau:e}");
            let _ = writeln!(out, "# lambda: {lambda:e}");
        }
        MetricKind::Admm { tau } => {
            let _ = writeln!(out, "# tau: {tau:e}");
        }
    }
    let _ = writeln!(out, "# seed: {}", h.seed);
    let _ = writeln!(out, "# version: {}", h.version);
    let _ = writeln!(out, "# ids_every: {}", h.ids_every);
    let _ = writeln!(out, "# max_iters: {}", h.max_iters);
    if let Some(a) = h.alpha {
        let _ = writeln!(out, "# alpha: {a:e}");
    }
    if let Some(p) = h.provenance {
        let _ = writeln!(out, "# provenance: {}", p.name());
    }
    if let Some(d) = h.dist0_sq {
        let _ = writeln!(out, "# dist0_sq: {d:e}");
    }
    out
}

/// Streams rows to `W` as they are produced.
pub struct TraceWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, header: &TraceHeader) -> Result<Self> {
        out.write_all(format_header(header).as_bytes())
            .map_err(|e| Error::Config(format!("trace write failed: {e}")))?;
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(COLUMNS).map_err(csv_err)?;
        Ok(TraceWriter { inner })
    }

    pub fn write_row(&mut self, r: &TraceRow) -> Result<()> {
        let rec = [
            r.k.to_string(),
            real(r.ids),
            real(r.ids_certificate),
            real(r.kkt_residual_sq),
            real(r.gap_bound),
            real(r.inclusion_residual),
            r.agd_iters.map(|v| v.to_string()).unwrap_or_default(),
            r.elapsed_ns.to_string(),
        ];
        self.inner.write_record(&rec).map_err(csv_err)
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush().map_err(|e| Error::Config(format!("trace write failed: {e}")))?;
        self.inner
            .into_inner()
            .map_err(|e| Error::Config(format!("trace write failed: {e}")))
    }
}

pub fn format_trace(trace: &SolverTrace) -> Result<String> {
    let mut w = TraceWriter::new(Vec::new(), &trace.header)?;
    for r in &trace.rows {
        w.write_row(r)?;
    }
    String::from_utf8(w.finish()?).map_err(|e| Error::Config(e.to_string()))
}

pub fn write_trace(path: impl AsRef<Path>, trace: &SolverTrace) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_trace(trace)?).map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<SolverTrace> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text)
}

fn header_value<T: std::str::FromStr>(key: &str, v: &str, line: usize) -> Result<T> {
    v.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad value '{v}' for '{key}'"),
    })
}

pub fn parse_trace(text: &str) -> Result<SolverTrace> {
    let mut lines = text.lines().enumerate().peekable();
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected '{MAGIC}'"),
            })
        }
    }
    let mut instance = String::new();
    let mut algorithm = None;
    let (mut s, mut tau, mut lambda) = (None, None, None);
    let mut seed = 0;
    let mut version = String::new();
    let mut ids_every = 1;
    let mut max_iters = 0;
    let mut alpha = None;
    let mut provenance = None;
    let mut dist0_sq = None;
    let mut header_lines = 1;
    while let Some((idx, l)) = lines.next_if(|(_, l)| l.starts_with('#')) {
        let line = idx + 1;
        header_lines = line;
        let body = l.trim_start_matches('#').trim();
        let Some((key, v)) = body.split_once(':') else {
            continue;
        };
        let v = v.trim();
        match key.trim() {
            "instance" => instance = v.to_string(),
            "algorithm" => {
                algorithm = Some(v.parse::<Algorithm>().map_err(|e| Error::Parse {
                    line,
                    msg: e.to_string(),
                })?)
            }
            "s" => s = Some(header_value::<f64>("s", v, line)?),
            "tau" => tau = Some(header_value::<f64>("tau", v, line)?),
            "lambda" => lambda = Some(header_value::<f64>("lambda", v, line)?),
            "seed" => seed = header_value("seed", v, line)?,
            "version" => version = v.to_string(),
            "ids_every" => ids_every = header_value("ids_every", v, line)?,
            "max_iters" => max_iters = header_value("max_iters", v, line)?,
            "alpha" => alpha = Some(header_value("alpha", v, line)?),
            "provenance" => {
                provenance = Some(Provenance::from_name(v).ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("unknown provenance '{v}'"),
                })?)
            }
            "dist0_sq" => dist0_sq = Some(header_value("dist0_sq", v, line)?),
            _ => {}
        }
    }
    let missing = |what: &str| Error::Parse {
        line: header_lines,
        msg: format!("header lacks '{what}'"),
    };
    let algorithm = algorithm.ok_or_else(|| missing("algorithm"))?;
    let metric = match algorithm {
        Algorithm::Pdhg => MetricKind::Pdhg {
            s: s.ok_or_else(|| missing("s"))?,
        },
        Algorithm::Ppm => MetricKind::Ppm {
            s: s.ok_or_else(|| missing("s"))?,
        },
        Algorithm::Ladmm => MetricKind::Ladmm {
            tau: tau.ok_or_else(|| missing("tau"))?,
            lambda: lambda.ok_or_else(|| missing("lambda"))?,
        },
        Algorithm::Admm => MetricKind::Admm {
            tau: tau.ok_or_else(|| missing("tau"))?,
        },
    };
    let header = TraceHeader {
        instance,
        algorithm,
        metric,
        seed,
        version,
        ids_every,
        max_iters,
        alpha,
        provenance,
        dist0_sq,
    };

    let body: String = lines.map(|(_, l)| format!("{l}\n")).collect();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let names = reader.headers().map_err(csv_err)?.clone();
    if names.iter().ne(COLUMNS.iter().copied()) {
        return Err(Error::Parse {
            line: header_lines + 1,
            msg: format!("expected columns {}", COLUMNS.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = header_lines + 2 + i;
        let opt_real = |j: usize| -> Result<Option<f64>> {
            let v = &rec[j];
            if v.is_empty() {
                Ok(None)
            } else {
                header_value(COLUMNS[j], v, line).map(Some)
            }
        };
        let row = TraceRow {
            k: header_value("k", &rec[0], line)?,
            ids: opt_real(1)?,
            ids_certificate: opt_real(2)?,
            kkt_residual_sq: opt_real(3)?,
            gap_bound: opt_real(4)?,
            inclusion_residual: opt_real(5)?,
            agd_iters: if rec[6].is_empty() {
                None
            } else {
                Some(header_value("agd_iters", &rec[6], line)?)
            },
            elapsed_ns: header_value("elapsed_ns", &rec[7], line)?,
        };
        if let Some(prev) = rows.last().map(|r: &TraceRow| r.k) {
            if row.k <= prev {
                return Err(Error::Parse {
                    line,
                    msg: format!("k = {} does not increase", row.k),
                });
            }
        }
        rows.push(row);
    }
    Ok(SolverTrace { header, rows })
}
