//! CSV result files and JSON checkpoints.
//!
//! Every CSV starts with one `# config ...` comment line holding the fully
//! resolved configuration, then a header row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use risfd_core::channel::ChannelSet;
use risfd_core::neural::{Activation, Architecture, Mlp};
use risfd_core::numerics::CMat;
use risfd_core::system::Action;

use crate::error::{csv_err, io_err, Result, SimError};

pub const REWARD_HEADER: [&str; 4] = ["seed", "step", "instant_reward", "average_reward"];
pub const SWEEP_HEADER: [&str; 5] = ["seed", "sweep_param", "sweep_value", "scheme", "best_ssr"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRow {
    pub seed: u64,
    pub step: usize,
    pub instant_reward: f64,
    pub average_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub scheme: String,
    pub best_ssr: f64,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

/// Writes the config comment, the header and `rows`.
pub fn write_csv<T: Serialize>(path: &Path, config_line: &str, rows: &[T]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# config {config_line}").map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Reads rows after checking the header against `expected`.
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path, expected: &[&str]) -> Result<Vec<T>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(SimError::Malformed {
            path: path.to_owned(),
            row: 1,
            detail: format!("header `{}`, expected `{}`", header.iter().collect::<Vec<_>>().join(","), expected.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.deserialize().enumerate() {
        let row = rec.map_err(|e| SimError::Malformed {
            path: path.to_owned(),
            row: i + 2,
            detail: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Self-describing network parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub sizes: Vec<usize>,
    pub activations: Vec<String>,
    pub params: Vec<f64>,
}

impl NetworkFile {
    pub fn from_mlp(net: &Mlp) -> Self {
        let arch = net.architecture();
        NetworkFile {
            sizes: arch.sizes.clone(),
            activations: arch.activations.iter().map(|a| a.name().to_owned()).collect(),
            params: net.params().to_vec(),
        }
    }

    pub fn to_mlp(&self) -> Result<Mlp> {
        let acts = self
            .activations
            .iter()
            .map(|n| {
                Activation::from_name(n).ok_or_else(|| SimError::InvalidValue {
                    key: "activation".into(),
                    value: n.clone(),
                    expected: "relu, tanh or linear".into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let arch = Architecture::new(self.sizes.clone(), acts)?;
        Ok(Mlp::from_params(arch, self.params.clone())?)
    }
}

/// Complex matrix as row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMat> for MatrixFile {
    fn from(m: &CMat) -> Self {
        MatrixFile {
            rows: m.rows(),
            cols: m.cols(),
            data: m.as_slice().iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl MatrixFile {
    pub fn to_cmat(&self) -> Result<CMat> {
        let data = self.data.iter().map(|&[re, im]| risfd_core::C64::new(re, im)).collect();
        Ok(CMat::from_vec(self.rows, self.cols, data)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub h_d_bs: MatrixFile,
    pub h_u_bs: MatrixFile,
    pub h_d: Vec<MatrixFile>,
    pub h_u: Vec<MatrixFile>,
    pub g_d: Vec<MatrixFile>,
    pub g_u: Vec<MatrixFile>,
    pub phase_noise: Vec<f64>,
}

fn all(ms: &[CMat]) -> Vec<MatrixFile> {
    ms.iter().map(MatrixFile::from).collect()
}

fn back(ms: &[MatrixFile]) -> Result<Vec<CMat>> {
    ms.iter().map(MatrixFile::to_cmat).collect()
}

impl From<&ChannelSet> for ChannelFile {
    fn from(c: &ChannelSet) -> Self {
        ChannelFile {
            h_d_bs: (&c.h_d_bs).into(),
            h_u_bs: (&c.h_u_bs).into(),
            h_d: all(&c.h_d),
            h_u: all(&c.h_u),
            g_d: all(&c.g_d),
            g_u: all(&c.g_u),
            phase_noise: c.phase_noise.clone(),
        }
    }
}

impl ChannelFile {
    pub fn to_channels(&self) -> Result<ChannelSet> {
        let c = ChannelSet {
            h_d_bs: self.h_d_bs.to_cmat()?,
            h_u_bs: self.h_u_bs.to_cmat()?,
            h_d: back(&self.h_d)?,
            h_u: back(&self.h_u)?,
            g_d: back(&self.g_d)?,
            g_u: back(&self.g_u)?,
            phase_noise: self.phase_noise.clone(),
        };
        c.validate()?;
        Ok(c)
    }
}

/// Best precoder and phases of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionFile {
    pub reward: f64,
    pub step: usize,
    pub w: MatrixFile,
    pub theta: Vec<f64>,
}

impl ActionFile {
    pub fn new(action: &Action, reward: f64, step: usize) -> Self {
        ActionFile {
            reward,
            step,
            w: (&action.w).into(),
            theta: action.theta.clone(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|source| SimError::Json {
        path: path.to_owned(),
        source,
    })?;
    out.write_all(b"\n").map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|source| SimError::Json {
        path: path.to_owned(),
        source,
    })
}
