//! CSV loaders for labeled feature tables and raw multichannel recordings.
//!
//! Dialect: comma separated, `.` decimal point, UTF-8, first row is the
//! header. Row numbers in errors count data rows from 1, header excluded.

use std::path::Path;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::signal::Recording;

/// Class names in label order.
pub const EMOTION_CLASSES: [&str; 3] = ["NEGATIVE", "NEUTRAL", "POSITIVE"];
/// Sampling rate assumed for raw files unless overridden.
pub const DEFAULT_RAW_FS: f64 = 256.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    /// Labels are always present.
    pub features: FeatureMatrix,
    pub class_names: Vec<String>,
    pub source: String,
}

impl LabeledDataset {
    pub fn labels(&self) -> &[usize] {
        self.features.labels.as_deref().unwrap_or_default()
    }
}

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(file))
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        file: path.display().to_string(),
        message: message.into(),
    }
}

fn headers(path: &Path, rdr: &mut csv::Reader<std::fs::File>) -> Result<Vec<String>> {
    let h = rdr.headers().map_err(|e| format_err(path, e.to_string()))?;
    if h.is_empty() || h.iter().all(str::is_empty) {
        return Err(format_err(path, "file is empty or has no header"));
    }
    Ok(h.iter().map(String::from).collect())
}

/// Maps a label cell to a class index: class names case-insensitively, or a
/// bare class index.
pub fn parse_label(cell: &str) -> Option<usize> {
    let upper = cell.trim().to_ascii_uppercase();
    EMOTION_CLASSES
        .iter()
        .position(|c| *c == upper)
        .or_else(|| upper.parse::<usize>().ok().filter(|&i| i < EMOTION_CLASSES.len()))
}

fn parse_cell(path: &Path, row: usize, column: &str, cell: &str) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| Error::Parse {
        file: path.display().to_string(),
        row,
        column: column.to_string(),
        message: format!("'{cell}' is not a number"),
    })
}

/// Loads a table of numeric feature columns plus one label column.
pub fn load_feature_csv(path: &Path, label_column: &str) -> Result<LabeledDataset> {
    let features = load_table(path, label_column, true)?;
    Ok(LabeledDataset {
        features,
        class_names: EMOTION_CLASSES.map(String::from).to_vec(),
        source: path.display().to_string(),
    })
}

/// Loads feature rows for prediction. A label column, if present, is
/// skipped and its contents are not checked.
pub fn load_unlabeled_csv(path: &Path, label_column: &str) -> Result<FeatureMatrix> {
    load_table(path, label_column, false)
}

fn load_table(path: &Path, label_column: &str, labeled: bool) -> Result<FeatureMatrix> {
    let mut rdr = open(path)?;
    let header = headers(path, &mut rdr)?;
    let label_idx = header.iter().position(|h| h == label_column);
    if labeled && label_idx.is_none() {
        return Err(format_err(path, format!("no '{label_column}' column in header")));
    }
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&i| Some(i) != label_idx).collect();
    if feature_cols.is_empty() {
        return Err(format_err(path, "no feature columns"));
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| format_err(path, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(Error::Parse {
                file: path.display().to_string(),
                row,
                column: header[rec.len().min(header.len() - 1)].clone(),
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        if let (true, Some(li)) = (labeled, label_idx) {
            let cell = &rec[li];
            let label = parse_label(cell).ok_or_else(|| Error::Parse {
                file: path.display().to_string(),
                row,
                column: label_column.to_string(),
                message: format!("unknown label '{cell}'"),
            })?;
            labels.push(label);
        }
        let values = feature_cols
            .iter()
            .map(|&j| {
                let v = parse_cell(path, row, &header[j], &rec[j])?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        file: path.display().to_string(),
                        row,
                        column: header[j].clone(),
                        message: format!("non-finite value '{}'", &rec[j]),
                    });
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(format_err(path, "file has a header but no data rows"));
    }
    let names = feature_cols.iter().map(|&j| header[j].clone()).collect();
    FeatureMatrix::new(rows, names, labeled.then_some(labels))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawLoad {
    pub recording: Recording,
    /// Data rows dropped because a value was NaN or infinite.
    pub rejected_rows: usize,
}

fn is_time_column(name: &str) -> bool {
    let n = name.trim().to_ascii_lowercase();
    n == "time" || n.contains("timestamp")
}

/// Loads one column per channel, skipping a leading timestamp column.
pub fn load_raw_csv(path: &Path, fs: f64) -> Result<RawLoad> {
    let mut rdr = open(path)?;
    let header = headers(path, &mut rdr)?;
    let skip = usize::from(is_time_column(&header[0]));
    let names: Vec<String> = header[skip..].to_vec();
    if names.is_empty() {
        return Err(format_err(path, "no channel columns"));
    }
    let mut data = vec![Vec::new(); names.len()];
    let mut rejected_rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| format_err(path, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(Error::Parse {
                file: path.display().to_string(),
                row,
                column: header.last().cloned().unwrap_or_default(),
                message: format!("ragged row: expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let values = (skip..header.len())
            .map(|j| parse_cell(path, row, &header[j], &rec[j]))
            .collect::<Result<Vec<f64>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            rejected_rows += 1;
            continue;
        }
        for (col, v) in data.iter_mut().zip(values) {
            col.push(v);
        }
    }
    let recording = Recording::from_samples(data, names, fs).map_err(|e| format_err(path, e.to_string()))?;
    Ok(RawLoad {
        recording,
        rejected_rows,
    })
}

/// Writes one column per channel with a header of channel names.
pub fn write_raw_csv(rec: &Recording, path: &Path) -> Result<()> {
    let to_err = |e: csv::Error| format_err(path, e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    w.write_record(rec.channel_names()).map_err(to_err)?;
    for i in 0..rec.len() {
        w.write_record(rec.channels().iter().map(|c| format!("{:?}", c.samples()[i]))).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn feature_csv_parses_and_maps_labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "f.csv", "a,label,b\n1,POSITIVE,2\n3.5,neutral,-4\n5,Negative,6e-1\n");
        let d = load_feature_csv(&p, "label").unwrap();
        assert_eq!(d.features.feature_names, ["a", "b"]);
        assert_eq!(d.features.rows, vec![vec![1.0, 2.0], vec![3.5, -4.0], vec![5.0, 0.6]]);
        assert_eq!(d.labels(), [2, 1, 0]);
        assert_eq!(d.class_names, EMOTION_CLASSES);
        assert_eq!(d, load_feature_csv(&p, "label").unwrap());
    }

    #[test]
    fn feature_csv_errors_name_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "f.csv", "x,y,label\n1,2,NEUTRAL\n1,abc,NEUTRAL\n");
        match load_feature_csv(&p, "label") {
            Err(Error::Parse { row, column, file, .. }) => {
                assert_eq!((row, column.as_str()), (2, "y"));
                assert!(file.ends_with("f.csv"));
            }
            other => panic!("{other:?}"),
        }
        let p = write(&dir, "g.csv", "x,label\n1,HAPPY\n");
        assert!(matches!(load_feature_csv(&p, "label"), Err(Error::Parse { row: 1, .. })));
        let p = write(&dir, "i.csv", "x,label\n1,NEUTRAL\ninf,NEUTRAL\n");
        assert!(matches!(load_feature_csv(&p, "label"), Err(Error::Parse { row: 2, .. })));
        let p = write(&dir, "h.csv", "x,y\n1,2\n");
        assert!(matches!(load_feature_csv(&p, "label"), Err(Error::Format { .. })));
        let p = write(&dir, "e.csv", "");
        assert!(load_feature_csv(&p, "label").is_err());
        let p = write(&dir, "n.csv", "x,label\n");
        assert!(load_feature_csv(&p, "label").is_err());
    }

    #[test]
    fn unlabeled_load_skips_label_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "u.csv", "a,label,b\n1,?,2\n");
        let m = load_unlabeled_csv(&p, "label").unwrap();
        assert_eq!(m.rows, vec![vec![1.0, 2.0]]);
        assert!(m.labels.is_none());
        let p = write(&dir, "v.csv", "a,b\n1,2\n");
        assert_eq!(load_unlabeled_csv(&p, "label").unwrap().feature_names, ["a", "b"]);
    }

    #[test]
    fn raw_csv_channels_and_duration() {
        let dir = tempfile::tempdir().unwrap();
        let mut text = String::from("TP9,AF7,AF8,TP10\n");
        for i in 0..512 {
            text.push_str(&format!("{i},{},{},{}\n", i + 1, i + 2, i + 3));
        }
        let load = load_raw_csv(&write(&dir, "r.csv", &text), DEFAULT_RAW_FS).unwrap();
        assert_eq!(load.recording.n_channels(), 4);
        assert_eq!(load.recording.len(), 512);
        assert_eq!(load.recording.duration(), 2.0);
        assert_eq!(load.rejected_rows, 0);
    }

    #[test]
    fn raw_csv_drops_timestamp_and_rejects_nan_rows() {
        let dir = tempfile::tempdir().unwrap();
        let text = "timestamps,TP9,AF7,AF8,TP10\n0.0,1,2,3,4\n0.1,1.0,2.0,NaN,4.0\n0.2,5,6,7,8\n";
        let load = load_raw_csv(&write(&dir, "r.csv", text), 256.0).unwrap();
        assert_eq!(load.recording.channel_names(), ["TP9", "AF7", "AF8", "TP10"]);
        assert_eq!(load.rejected_rows, 1);
        assert_eq!(load.recording.channel("TP10").unwrap().samples(), [4.0, 8.0]);
    }

    #[test]
    fn raw_csv_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "r.csv", "A,B\n1,2\n3\n");
        assert!(matches!(load_raw_csv(&p, 256.0), Err(Error::Parse { row: 2, .. })));
        let p = write(&dir, "t.csv", "timestamp\n1\n");
        assert!(load_raw_csv(&p, 256.0).is_err());
    }

    #[test]
    fn raw_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rec = Recording::from_samples(
            vec![vec![0.1, -2.5, 1e-7], vec![3.0, 4.0, 5.0]],
            vec!["AF7".into(), "AF8".into()],
            128.0,
        )
        .unwrap();
        let p = dir.path().join("out.csv");
        write_raw_csv(&rec, &p).unwrap();
        assert_eq!(load_raw_csv(&p, 128.0).unwrap().recording, rec);
    }
}
