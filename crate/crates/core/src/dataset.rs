//! Labeled covariate tables and their CSV form.
//!
//! The file layout is
//!
//! ```text
//! # leaves: A,B,C
//! # pairs: A|B,A|C,B|C
//! label,x_1,x_2,x_3
//! 0,2,4,4
//! 1,4,2,4
//! ```
//!
//! The `#` lines are present only for datasets built from trees; they record
//! which leaf pair each column holds. Values are written with the shortest
//! decimal form that parses back to the same `f64`.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::treeio::{cophenetic_vector, DistanceVector, PhyloTree};
use crate::tropical::TorusPoint;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    raw: Vec<Vec<f64>>,
    points: Vec<TorusPoint>,
    labels: Vec<u8>,
    leaf_order: Option<Vec<String>>,
}

impl Dataset {
    /// Rows as given (any representative of each torus class) with 0/1 labels.
    pub fn new(raw: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if raw.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: raw.len(), found: labels.len() });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::invalid(format!("labels must be 0 or 1, got {bad}")));
        }
        let e = raw.first().map_or(0, Vec::len);
        let mut points = Vec::with_capacity(raw.len());
        for r in &raw {
            if r.len() != e {
                return Err(Error::DimensionMismatch { expected: e, found: r.len() });
            }
            points.push(TorusPoint::new(r)?);
        }
        Ok(Dataset { raw, points, labels, leaf_order: None })
    }

    pub fn from_points(points: Vec<TorusPoint>, labels: Vec<u8>) -> Result<Self> {
        Self::new(points.into_iter().map(TorusPoint::into_coords).collect(), labels)
    }

    /// Cophenetic vectors of `class0` (label 0) followed by `class1` (label 1).
    /// All trees must share one leaf set.
    pub fn from_trees(class0: &[PhyloTree], class1: &[PhyloTree]) -> Result<Self> {
        let mut raw = Vec::with_capacity(class0.len() + class1.len());
        let mut labels = Vec::with_capacity(raw.capacity());
        let mut order: Option<Vec<String>> = None;
        for (y, trees) in [(0u8, class0), (1u8, class1)] {
            for t in trees {
                let DistanceVector { values, leaf_order } = cophenetic_vector(t)?;
                match &order {
                    Some(o) if *o != leaf_order => return Err(Error::LeafSetMismatch),
                    Some(_) => {}
                    None => order = Some(leaf_order),
                }
                raw.push(values);
                labels.push(y);
            }
        }
        let mut ds = Self::new(raw, labels)?;
        ds.leaf_order = order;
        Ok(ds)
    }

    pub fn with_leaf_order(mut self, leaf_order: Vec<String>) -> Result<Self> {
        let m = leaf_order.len();
        if !self.is_empty() && m * m.saturating_sub(1) / 2 != self.dim() {
            return Err(Error::invalid(format!("{m} leaves do not match dimension {}", self.dim())));
        }
        self.leaf_order = Some(leaf_order);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of coordinates `e` (0 for an empty dataset).
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, TorusPoint::dim)
    }

    pub fn points(&self) -> &[TorusPoint] {
        &self.points
    }

    /// Rows exactly as supplied.
    pub fn raw(&self) -> &[Vec<f64>] {
        &self.raw
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn leaf_order(&self) -> Option<&[String]> {
        self.leaf_order.as_deref()
    }

    pub fn class_points(&self, y: u8) -> Vec<TorusPoint> {
        self.points.iter().zip(&self.labels).filter(|(_, &l)| l == y).map(|(p, _)| p.clone()).collect()
    }

    /// `(n0, n1)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let n1 = self.labels.iter().filter(|&&y| y == 1).count();
        (self.len() - n1, n1)
    }

    pub fn require_both_classes(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        match self.class_counts() {
            (0, _) | (_, 0) => Err(Error::SingleClass),
            _ => Ok(()),
        }
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            raw: idx.iter().map(|&i| self.raw[i].clone()).collect(),
            points: idx.iter().map(|&i| self.points[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            leaf_order: self.leaf_order.clone(),
        }
    }

    /// Dataset with every label flipped.
    pub fn swap_labels(&self) -> Dataset {
        let mut out = self.clone();
        for y in &mut out.labels {
            *y = 1 - *y;
        }
        out
    }

    /// Stratified split: within each class a random `train_frac` share (rounded,
    /// and leaving at least one row on each side when the class has two or
    /// more rows) goes to the training part. Row order is preserved in both parts.
    pub fn stratified_split<R: Rng + ?Sized>(&self, train_frac: f64, rng: &mut R) -> Result<(Dataset, Dataset)> {
        if !(train_frac > 0.0 && train_frac < 1.0) {
            return Err(Error::invalid(format!("train fraction must lie in (0, 1), got {train_frac}")));
        }
        let mut train = Vec::new();
        let mut test = Vec::new();
        for y in [0u8, 1] {
            let mut idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == y).collect();
            idx.shuffle(rng);
            let n = idx.len();
            let mut k = (train_frac * n as f64).round() as usize;
            if n >= 2 {
                k = k.clamp(1, n - 1);
            }
            train.extend_from_slice(&idx[..k]);
            test.extend_from_slice(&idx[k..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        Ok((self.subset(&train), self.subset(&test)))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        if let Some(order) = &self.leaf_order {
            writeln!(w, "# leaves: {}", order.join(","))?;
            writeln!(w, "# pairs: {}", DistanceVector::pair_names(order).join(","))?;
        }
        let mut cw = csv::Writer::from_writer(w);
        let mut header = vec!["label".to_string()];
        header.extend((1..=self.dim()).map(|k| format!("x_{k}")));
        cw.write_record(&header)?;
        for (row, y) in self.raw.iter().zip(&self.labels) {
            let mut rec = Vec::with_capacity(row.len() + 1);
            rec.push(y.to_string());
            rec.extend(row.iter().map(|v| v.to_string()));
            cw.write_record(&rec)?;
        }
        cw.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let text = std::io::read_to_string(reader)?;
        Self::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut leaf_order = None;
        for line in text.lines().take_while(|l| l.starts_with('#') || l.trim().is_empty()) {
            if let Some(rest) = line.trim_start_matches('#').trim().strip_prefix("leaves:") {
                leaf_order = Some(rest.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>());
            }
        }
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("label") {
            return Err(Error::Record { line: 1, message: "first column must be named 'label'".into() });
        }
        if header.len() < 3 {
            return Err(Error::Record { line: 1, message: "at least two coordinate columns are required".into() });
        }
        let mut raw = Vec::new();
        let mut labels = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let y = match rec.get(0) {
                Some("0") => 0u8,
                Some("1") => 1u8,
                other => {
                    return Err(Error::Record {
                        line,
                        message: format!("label must be 0 or 1, got '{}'", other.unwrap_or("")),
                    })
                }
            };
            let mut row = Vec::with_capacity(rec.len() - 1);
            for (k, field) in rec.iter().enumerate().skip(1) {
                let v: f64 = field.parse().map_err(|_| Error::Record {
                    line,
                    message: format!("column {} is not a number: '{field}'", k + 1),
                })?;
                if !v.is_finite() {
                    return Err(Error::Record { line, message: format!("column {} is not finite", k + 1) });
                }
                row.push(v);
            }
            raw.push(row);
            labels.push(y);
        }
        let ds = Self::new(raw, labels)?;
        match leaf_order {
            Some(order) if !ds.is_empty() => ds.with_leaf_order(order),
            _ => Ok(ds),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::treeio::parse_newick;

    #[test]
    fn csv_round_trip_is_exact() {
        let ds = Dataset::new(vec![vec![0.1, 0.2 + 0.1, 1e-300], vec![3.0, -2.5, 0.0]], vec![0, 1]).unwrap();
        let text = ds.to_csv_string();
        assert!(text.starts_with("label,x_1,x_2,x_3\n0,0.1,0.30000000000000004,"));
        assert_eq!(Dataset::from_csv_str(&text).unwrap(), ds);
    }

    #[test]
    fn trees_carry_leaf_order() {
        let a = parse_newick("((A:1,B:1):1,C:2);").unwrap();
        let b = parse_newick("((A:1,C:1):1,B:2);").unwrap();
        let ds = Dataset::from_trees(&[a], &[b]).unwrap();
        assert_eq!(ds.raw()[0], vec![2.0, 4.0, 4.0]);
        let text = ds.to_csv_string();
        assert!(text.contains("# pairs: A|B,A|C,B|C\n"));
        let back = Dataset::from_csv_str(&text).unwrap();
        assert_eq!(back.leaf_order().unwrap(), ["A", "B", "C"]);
        assert_eq!(back, ds);
        let c = parse_newick("((A:1,B:1):1,D:2);").unwrap();
        assert!(matches!(Dataset::from_trees(&[ds_tree()], &[c]), Err(Error::LeafSetMismatch)));
    }

    fn ds_tree() -> PhyloTree {
        parse_newick("((A:1,B:1):1,C:2);").unwrap()
    }

    #[test]
    fn bad_records_report_lines() {
        let text = "label,x_1,x_2\n0,1,2\n2,1,2\n";
        assert!(matches!(Dataset::from_csv_str(text), Err(Error::Record { line: 3, .. })));
        let text = "label,x_1,x_2\n0,1,abc\n";
        assert!(matches!(Dataset::from_csv_str(text), Err(Error::Record { line: 2, .. })));
        let text = "label,x_1,x_2\n0,1,2\n1,1\n";
        assert!(Dataset::from_csv_str(text).is_err());
    }

    #[test]
    fn stratified_split_keeps_class_shares() {
        let raw: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, 0.0, 0.0]).collect();
        let labels: Vec<u8> = (0..30).map(|i| u8::from(i >= 10)).collect();
        let ds = Dataset::new(raw, labels).unwrap();
        let (tr, te) = ds.stratified_split(0.5, &mut stream(1, "split", 0)).unwrap();
        assert_eq!(tr.class_counts(), (5, 10));
        assert_eq!(te.class_counts(), (5, 10));
        let (tr2, _) = ds.stratified_split(0.5, &mut stream(1, "split", 0)).unwrap();
        assert_eq!(tr, tr2);
    }
}
