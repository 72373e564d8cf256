use std::io::Write;
use std::path::Path;

use super::ProjectionBasis;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct TourFrame {
    pub basis: ProjectionBasis,
    /// Fraction of the way along the current leg.
    pub t: f64,
    pub index_value: f64,
    /// Leg endpoint (the start frame counts as a target).
    pub is_target: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TourTrace {
    pub frames: Vec<TourFrame>,
    pub rng_seed: u64,
}

impl TourTrace {
    pub fn last(&self) -> &TourFrame {
        self.frames.last().expect("a trace always holds its start frame")
    }

    pub fn targets(&self) -> impl Iterator<Item = &TourFrame> {
        self.frames.iter().filter(|f| f.is_target)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn p(&self) -> usize {
        self.last().basis.p()
    }

    /// Writes the whole trace as CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = TraceWriter::new(out, self.p())?;
        for (i, f) in self.frames.iter().enumerate() {
            w.write_frame(i, f)?;
        }
        Ok(())
    }
}

/// Incremental trace CSV writer: `frame_id,t,is_target,index_value,b1_1,b1_2,…,bp_2`,
/// one row per frame, flushed after every row.
pub struct TraceWriter<W: Write> {
    out: W,
    p: usize,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, p: usize) -> Result<Self> {
        let mut header = String::from("frame_id,t,is_target,index_value");
        for i in 1..=p {
            for j in 1..=2 {
                header.push_str(&format!(",b{i}_{j}"));
            }
        }
        header.push('\n');
        out.write_all(header.as_bytes()).map_err(|e| Error::io("<trace>", e))?;
        out.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(Self { out, p })
    }

    pub fn write_frame(&mut self, frame_id: usize, frame: &TourFrame) -> Result<()> {
        if frame.basis.p() != self.p {
            return Err(Error::dims(self.p, frame.basis.p()));
        }
        let mut line = format!(
            "{frame_id},{},{},{}",
            frame.t,
            u8::from(frame.is_target),
            frame.index_value
        );
        for v in frame.basis.matrix().as_slice() {
            line.push_str(&format!(",{v}"));
        }
        line.push('\n');
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io("<trace>", e))
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Reads a trace CSV back; bases are revalidated.
pub fn read_trace(path: impl AsRef<Path>) -> Result<TourTrace> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let n_basis = headers.len().checked_sub(4).filter(|n| n % 2 == 0 && *n >= 4);
    let Some(n_basis) = n_basis else {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "trace header must have 4 + 2p columns".into(),
        });
    };
    let p = n_basis / 2;
    let mut frames = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("column {} is not a number", i + 1),
                })
        };
        let t = num(1)?;
        let is_target = num(2)? != 0.0;
        let index_value = num(3)?;
        let coeffs = (4..4 + n_basis).map(num).collect::<Result<Vec<_>>>()?;
        let basis = ProjectionBasis::new(Matrix::new(p, 2, coeffs)?)?;
        frames.push(TourFrame {
            basis,
            t,
            index_value,
            is_target,
        });
    }
    Ok(TourTrace { frames, rng_seed: 0 })
}
