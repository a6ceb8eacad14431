//! CSV schemas for block records.
//!
//! Encoder dumps carry the ten record columns
//! `x,y,h,w,n0,n1,s,d_nn,d_c,isSplitTBs`. Partition dumps prepend
//! `image,qp,order` and append `accepted`. An empty `d_nn` means the NN
//! mode was not evaluated for that leaf.

use std::path::Path;

use serde::{Deserialize, Serialize};

use itnn_core::codec::BlockRecord;
use itnn_core::pipeline::ImageLog;

use crate::error::{Error, Result};

pub const RECORD_COLUMNS: [&str; 10] = ["x", "y", "h", "w", "n0", "n1", "s", "d_nn", "d_c", "isSplitTBs"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qp: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    pub x: usize,
    pub y: usize,
    pub h: usize,
    pub w: usize,
    pub n0: usize,
    pub n1: usize,
    pub s: u8,
    pub d_nn: Option<f64>,
    pub d_c: f64,
    #[serde(rename = "isSplitTBs")]
    pub is_split_tbs: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted: Option<bool>,
}

impl RecordRow {
    pub fn plain(r: &BlockRecord) -> Self {
        RecordRow {
            image: None,
            qp: None,
            order: None,
            x: r.x,
            y: r.y,
            h: r.h,
            w: r.w,
            n0: r.n0,
            n1: r.n1,
            s: r.s,
            d_nn: r.d_nn,
            d_c: r.d_c,
            is_split_tbs: r.is_split_tbs,
            accepted: None,
        }
    }

    pub fn record(&self) -> BlockRecord {
        BlockRecord {
            x: self.x,
            y: self.y,
            h: self.h,
            w: self.w,
            n0: self.n0,
            n1: self.n1,
            s: self.s,
            d_nn: self.d_nn,
            d_c: self.d_c,
            is_split_tbs: self.is_split_tbs,
        }
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.into(),
        source,
    })
}

fn write_rows(path: &Path, rows: impl IntoIterator<Item = RecordRow>) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let mut w = writer(path)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(Error::io(path))
}

pub fn write_records(path: &Path, records: &[BlockRecord]) -> Result<()> {
    if records.is_empty() {
        // serde-driven writers emit the header with the first row only.
        let mut w = writer(path)?;
        w.write_record(RECORD_COLUMNS).map_err(|source| Error::Csv {
            path: path.into(),
            source,
        })?;
        return w.flush().map_err(Error::io(path));
    }
    write_rows(path, records.iter().map(RecordRow::plain))
}

/// Every leaf of every image in examination order, with the acceptance flag.
pub fn write_partition(path: &Path, images: &[ImageLog]) -> Result<()> {
    let rows = images.iter().flat_map(|img| {
        img.records.iter().zip(&img.accepted).enumerate().map(|(order, (r, &acc))| RecordRow {
            image: Some(img.id.clone()),
            qp: Some(img.qp),
            order: Some(order),
            accepted: Some(acc),
            ..RecordRow::plain(r)
        })
    });
    write_rows(path, rows)
}

pub fn read_records(path: &Path) -> Result<Vec<RecordRow>> {
    let csv_err = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<std::result::Result<Vec<RecordRow>, _>>().map_err(csv_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rec = |s, d_nn| BlockRecord {
            x: 8,
            y: 16,
            h: 8,
            w: 8,
            n0: 0,
            n1: 4,
            s,
            d_nn,
            d_c: 0.1 + 0.2,
            is_split_tbs: false,
        };
        let log = ImageLog {
            id: "img".into(),
            qp: 27,
            records: vec![rec(35, Some(1.0 / 3.0)), rec(1, None)],
            accepted: vec![true, false],
        };
        write_partition(&path, std::slice::from_ref(&log)).unwrap();
        let rows = read_records(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].record(), log.records[0]);
        assert_eq!(rows[1].record(), log.records[1]);
        assert_eq!((rows[1].order, rows[1].accepted, rows[1].qp), (Some(1), Some(false), Some(27)));

        write_records(&path, &log.records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&RECORD_COLUMNS.join(",")));
        assert_eq!(read_records(&path).unwrap()[0].qp, None);
    }
}
