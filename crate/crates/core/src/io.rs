//! JSON channel description files.
//!
//! A MIMO channel file holds `nt`, `nr`, `ne`, `memory`, `power`, the tap
//! arrays `h_taps`/`g_taps` (one row-major matrix per delay) and the noise
//! autocorrelations `cw`/`cu` (lag 0 first). A PLC file holds `t_ch`,
//! `t_noise`, `power` and the `[phase][tap]` tables `h_lptv`, `g_lptv`,
//! `cw_cyclo`, `cu_cyclo`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RMat;
use crate::plc::PlcChannel;
use crate::spectral::{MatrixTapSequence, MimoWiretapChannel, NoiseAutocorrelation};

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub nt: usize,
    pub nr: usize,
    pub ne: usize,
    pub memory: usize,
    pub power: f64,
    pub h_taps: Vec<Rows>,
    pub g_taps: Vec<Rows>,
    pub cw: Vec<Rows>,
    pub cu: Vec<Rows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlcFile {
    pub t_ch: usize,
    pub t_noise: usize,
    pub power: f64,
    pub h_lptv: Rows,
    pub g_lptv: Rows,
    pub cw_cyclo: Rows,
    pub cu_cyclo: Rows,
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::Validation {
        field: field.into(),
        message: message.into(),
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, path: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse {
            path: path.into(),
            line: inner.line(),
            column: inner.column(),
            message: if field.is_empty() || field == "." {
                inner.to_string()
            } else {
                format!("at `{field}`: {inner}")
            },
        }
    })
}

fn matrix(field: &str, index: usize, rows: &Rows, shape: (usize, usize)) -> Result<RMat> {
    let (r, c) = shape;
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(invalid(field, format!("entry {index} must be {r}x{c}")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid(field, format!("entry {index} has a non-finite value")));
    }
    Ok(RMat::from_fn(r, c, |i, j| rows[i][j]))
}

fn sequence(field: &str, data: &[Rows], memory: usize, shape: (usize, usize)) -> Result<Vec<RMat>> {
    if data.len() != memory + 1 {
        return Err(invalid(field, format!("needs memory + 1 = {} entries, got {}", memory + 1, data.len())));
    }
    data.iter()
        .enumerate()
        .map(|(i, rows)| matrix(field, i, rows, shape))
        .collect()
}

fn noise(field: &str, data: &[Rows], memory: usize, dim: usize) -> Result<NoiseAutocorrelation> {
    let lags = sequence(field, data, memory, (dim, dim))?;
    NoiseAutocorrelation::with_label(lags, field).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => invalid(field, e.to_string()),
        other => other,
    })
}

impl ChannelFile {
    pub fn into_channel(self) -> Result<MimoWiretapChannel> {
        if self.nt == 0 || self.nr == 0 || self.ne == 0 {
            return Err(invalid("nt", "antenna counts must be positive"));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(invalid("power", format!("must be positive and finite, got {}", self.power)));
        }
        let h = sequence("h_taps", &self.h_taps, self.memory, (self.nr, self.nt))?;
        let g = sequence("g_taps", &self.g_taps, self.memory, (self.ne, self.nt))?;
        let cw = noise("cw", &self.cw, self.memory, self.nr)?;
        let cu = noise("cu", &self.cu, self.memory, self.ne)?;
        MimoWiretapChannel::new(MatrixTapSequence::new(h)?, MatrixTapSequence::new(g)?, cw, cu, self.power)
    }

    pub fn from_channel(channel: &MimoWiretapChannel) -> Self {
        let rows = |m: &RMat| -> Rows { (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect() };
        Self {
            nt: channel.nt(),
            nr: channel.nr(),
            ne: channel.ne(),
            memory: channel.memory(),
            power: channel.power(),
            h_taps: channel.h().taps().iter().map(rows).collect(),
            g_taps: channel.g().taps().iter().map(rows).collect(),
            cw: channel.cw().lags().iter().map(rows).collect(),
            cu: channel.cu().lags().iter().map(rows).collect(),
        }
    }
}

impl PlcFile {
    pub fn into_channel(self) -> Result<PlcChannel> {
        let plc = PlcChannel {
            t_ch: self.t_ch,
            t_noise: self.t_noise,
            power: self.power,
            h_lptv: self.h_lptv,
            g_lptv: self.g_lptv,
            cw_cyclo: self.cw_cyclo,
            cu_cyclo: self.cu_cyclo,
        };
        plc.validate()?;
        Ok(plc)
    }
}

pub fn channel_from_str(text: &str, path: &str) -> Result<MimoWiretapChannel> {
    parse::<ChannelFile>(text, path)?.into_channel()
}

pub fn plc_from_str(text: &str, path: &str) -> Result<PlcChannel> {
    parse::<PlcFile>(text, path)?.into_channel()
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn read_channel(path: &Path) -> Result<MimoWiretapChannel> {
    channel_from_str(&read(path)?, &path.display().to_string())
}

pub fn read_plc(path: &Path) -> Result<PlcChannel> {
    plc_from_str(&read(path)?, &path.display().to_string())
}
