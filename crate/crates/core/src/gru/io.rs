//! Binary model files and training-history CSV.
//!
//! Layout: the magic `EEGSCRUB`, a little-endian `u32` format version, a
//! `u32` byte length followed by a TOML header, then a `u32` array count
//! and per array a `u32` name length, the UTF-8 name, a `u32` rank, `u64`
//! dimensions and little-endian `f64` values.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::linear::LinearNet;
use super::network::{layout, GruNet, ModelConfig};
use super::train::{Classifier, EpochRecord, Net};
use super::Network;
use crate::error::{Error, Result};
use crate::normalize::{NormMode, NormStats};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"EEGSCRUB";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    kind: String,
    class_names: Vec<String>,
    norm_mode: NormMode,
    n_features: usize,
    n_classes: usize,
    gru: Option<GruHeader>,
}

/// TOML integers are signed 64-bit, so the seed travels as a string.
#[derive(Debug, Serialize, Deserialize)]
struct GruHeader {
    seq_len: usize,
    feat_dim: usize,
    hidden_size: usize,
    seed: String,
}

struct Array {
    name: String,
    dims: Vec<u64>,
    data: Vec<f64>,
}

fn model_arrays(net: &Net) -> Vec<Array> {
    match net {
        Net::Gru(g) => layout(&g.config)
            .into_iter()
            .enumerate()
            .map(|(i, (name, r, c))| Array {
                name: name.to_string(),
                dims: vec![r as u64, c as u64],
                data: g.block(i).to_vec(),
            })
            .collect(),
        Net::Linear(l) => {
            let (c, n) = (l.n_classes, l.n_features);
            let p = l.params();
            vec![
                Array {
                    name: "W".into(),
                    dims: vec![c as u64, n as u64],
                    data: p[..c * n].to_vec(),
                },
                Array {
                    name: "b".into(),
                    dims: vec![c as u64],
                    data: p[c * n..].to_vec(),
                },
            ]
        }
    }
}

pub fn save_model(model: &Classifier, path: &Path) -> Result<()> {
    let gru = match &model.net {
        Net::Gru(g) => Some(GruHeader {
            seq_len: g.config.seq_len,
            feat_dim: g.config.feat_dim,
            hidden_size: g.config.hidden_size,
            seed: g.config.seed.to_string(),
        }),
        Net::Linear(_) => None,
    };
    let header = Header {
        kind: model.net.kind().into(),
        class_names: model.class_names.clone(),
        norm_mode: model.norm.mode,
        n_features: model.n_features(),
        n_classes: model.net.as_network().n_classes(),
        gru,
    };
    let header = toml::to_string(&header).map_err(|e| Error::Format {
        file: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut arrays = model_arrays(&model.net);
    let dim = model.norm.dim() as u64;
    arrays.push(Array {
        name: "norm_shift".into(),
        dims: vec![dim],
        data: model.norm.shift.clone(),
    });
    arrays.push(Array {
        name: "norm_scale".into(),
        dims: vec![dim],
        data: model.norm.scale.clone(),
    });

    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
    buf.extend_from_slice(header.as_bytes());
    buf.extend_from_slice(&(arrays.len() as u32).to_le_bytes());
    for a in &arrays {
        buf.extend_from_slice(&(a.name.len() as u32).to_le_bytes());
        buf.extend_from_slice(a.name.as_bytes());
        buf.extend_from_slice(&(a.dims.len() as u32).to_le_bytes());
        for d in &a.dims {
            buf.extend_from_slice(&d.to_le_bytes());
        }
        for v in &a.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&buf))
        .map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    file: String,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.err("unexpected end of file"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Format {
            file: self.file.clone(),
            message: message.into(),
        }
    }
}

pub fn load_model(path: &Path) -> Result<Classifier> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
        file: path.display().to_string(),
    };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(r.err("not a model file (bad magic)"));
    }
    let version = r.u32()?;
    if version != MODEL_FORMAT_VERSION {
        return Err(r.err(format!(
            "unsupported format version {version} (expected {MODEL_FORMAT_VERSION})"
        )));
    }
    let len = r.u32()? as usize;
    let raw = r.take(len)?.to_vec();
    let text = String::from_utf8(raw).map_err(|_| r.err("header is not UTF-8"))?;
    let header: Header = toml::from_str(&text).map_err(|e| r.err(format!("bad header: {e}")))?;

    let count = r.u32()? as usize;
    let mut arrays = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let raw = r.take(name_len)?.to_vec();
        let name = String::from_utf8(raw).map_err(|_| r.err("array name is not UTF-8"))?;
        let rank = r.u32()? as usize;
        let dims = (0..rank).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        let size = dims.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d)).ok_or_else(|| r.err("array too large"))?;
        if size > ((bytes.len() - r.pos) / 8) as u64 {
            return Err(r.err(format!("array '{name}' overruns the file")));
        }
        let data = r.take(size as usize * 8)?.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        arrays.push(Array { name, dims, data });
    }
    if r.pos != bytes.len() {
        return Err(r.err("trailing bytes after the last array"));
    }

    let mut get = |name: &str, dims: &[usize]| -> Result<Vec<f64>> {
        let i = arrays
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| r.err(format!("missing array '{name}'")))?;
        let a = arrays.swap_remove(i);
        if a.dims.iter().map(|&d| d as usize).ne(dims.iter().copied()) {
            return Err(r.err(format!("array '{name}' has shape {:?}, expected {dims:?}", a.dims)));
        }
        Ok(a.data)
    };

    let (n, c) = (header.n_features, header.n_classes);
    let net = match (header.kind.as_str(), &header.gru) {
        ("gru", Some(g)) => {
            let seed = g.seed.parse().map_err(|_| r.err(format!("bad seed '{}'", g.seed)))?;
            let config = ModelConfig {
                seq_len: g.seq_len,
                feat_dim: g.feat_dim,
                hidden_size: g.hidden_size,
                n_classes: c,
                seed,
            };
            let mut theta = Vec::new();
            for (name, rows, cols) in layout(&config) {
                theta.extend(get(name, &[rows, cols])?);
            }
            Net::Gru(GruNet::from_params(config, theta)?)
        }
        ("linear", None) => {
            let mut theta = get("W", &[c, n])?;
            theta.extend(get("b", &[c])?);
            Net::Linear(LinearNet::from_params(n, c, theta)?)
        }
        (kind, _) => return Err(r.err(format!("unknown or inconsistent model kind '{kind}'"))),
    };
    let norm = NormStats {
        mode: header.norm_mode,
        shift: get("norm_shift", &[n])?,
        scale: get("norm_scale", &[n])?,
    };
    if header.class_names.len() != c {
        return Err(r.err(format!("{} class names for {c} classes", header.class_names.len())));
    }
    Ok(Classifier {
        net,
        norm,
        class_names: header.class_names,
    })
}

pub fn write_history_csv(history: &[EpochRecord], path: &Path) -> Result<()> {
    let file = path.display().to_string();
    let to_err = |e: csv::Error| Error::Format {
        file: file.clone(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    for rec in history {
        w.serialize(rec).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
