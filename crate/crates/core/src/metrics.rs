//! Reconstruction and classification metrics, and nearest-neighbour probes
//! over word vectors.

use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::MeanStd;
use crate::error::{Error, Result};

/// Unit-cost edit distance.
pub fn levenshtein<S: PartialEq>(a: &[S], b: &[S]) -> usize {
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = diag + usize::from(x != y);
            diag = row[j + 1];
            row[j + 1] = sub.min(row[j] + 1).min(diag + 1);
        }
    }
    row[b.len()]
}

/// What the edit distance is divided by.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Denominator {
    #[default]
    Reference,
    Hypothesis,
}

/// Character prediction error as a ratio: edit distance over reference length.
///
/// ```
/// use hcrn::metrics::cper;
/// assert!((cper(b"cat", b"cut").unwrap() - 1.0 / 3.0).abs() < 1e-12);
/// assert_eq!(cper(b"ab", b"").unwrap(), 1.0);
/// ```
pub fn cper<S: PartialEq>(reference: &[S], hypothesis: &[S]) -> Result<f64> {
    cper_with(reference, hypothesis, Denominator::Reference)
}

pub fn cper_with<S: PartialEq>(reference: &[S], hypothesis: &[S], denominator: Denominator) -> Result<f64> {
    let len = match denominator {
        Denominator::Reference => reference.len(),
        Denominator::Hypothesis => hypothesis.len(),
    };
    if len == 0 {
        return Err(Error::Input(format!("cper with an empty {denominator:?} sequence")));
    }
    Ok(levenshtein(reference, hypothesis) as f64 / len as f64)
}

/// Word reconstruction failures: percentage of pairs that differ anywhere,
/// and the length distribution of the failed references.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wrfr {
    pub percent: f64,
    pub failed: usize,
    /// `None` when nothing failed.
    pub failed_length: Option<MeanStd>,
}

pub fn wrfr<S: PartialEq>(pairs: &[(impl AsRef<[S]>, impl AsRef<[S]>)]) -> Result<Wrfr> {
    if pairs.is_empty() {
        return Err(Error::Input("wrfr over no words".into()));
    }
    let lengths: Vec<f64> =
        pairs.iter().filter(|(r, h)| r.as_ref() != h.as_ref()).map(|(r, _)| r.as_ref().len() as f64).collect();
    Ok(Wrfr {
        percent: 100.0 * lengths.len() as f64 / pairs.len() as f64,
        failed: lengths.len(),
        failed_length: (!lengths.is_empty()).then(|| MeanStd::of(lengths)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub words: usize,
    /// Total edit distance over total reference length, in percent.
    pub cper: f64,
    pub wrfr: f64,
    pub failed: usize,
    pub failed_length: Option<MeanStd>,
}

impl ReconstructionReport {
    pub fn from_pairs<S: PartialEq>(pairs: &[(impl AsRef<[S]>, impl AsRef<[S]>)]) -> Result<Self> {
        let w = wrfr(pairs)?;
        let mut dist = 0;
        let mut len = 0;
        for (r, h) in pairs {
            let (r, h) = (r.as_ref(), h.as_ref());
            if r.is_empty() {
                return Err(Error::Input("empty reference word".into()));
            }
            dist += levenshtein(r, h);
            len += r.len();
        }
        Ok(ReconstructionReport {
            words: pairs.len(),
            cper: 100.0 * dist as f64 / len as f64,
            wrfr: w.percent,
            failed: w.failed,
            failed_length: w.failed_length,
        })
    }

    pub fn header() -> String {
        format!("{:<16} {:>8} {:>8} {:>8} {:>14}", "", "words", "CPER", "WRFR", "Length")
    }

    pub fn row(&self, name: &str) -> String {
        let length = self.failed_length.map_or_else(|| "-".to_string(), |m| format!("{:.1}({:.1})", m.mean, m.std));
        format!("{:<16} {:>8} {:>8.2} {:>8.2} {:>14}", name, self.words, self.cper, self.wrfr, length)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub total: usize,
    pub error_rate: f64,
    /// `confusion[label][prediction]`
    pub confusion: Vec<Vec<usize>>,
    pub support: Vec<usize>,
    /// Accuracy per true class; `None` for classes with no examples.
    pub per_class: Vec<Option<f64>>,
}

/// ```
/// use hcrn::metrics::classification_error;
/// let r = classification_error(&[0, 1, 1, 2], &[0, 1, 2, 2], 4).unwrap();
/// assert_eq!(r.error_rate, 25.0);
/// assert_eq!(r.per_class[3], None);
/// ```
pub fn classification_error(predictions: &[usize], labels: &[usize], num_classes: usize) -> Result<ClassificationReport> {
    if predictions.len() != labels.len() {
        return Err(Error::Input(format!("{} predictions for {} labels", predictions.len(), labels.len())));
    }
    let mut confusion = vec![vec![0; num_classes]; num_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p >= num_classes || l >= num_classes {
            return Err(Error::Input(format!("class index {} out of range for {num_classes} classes", p.max(l))));
        }
        confusion[l][p] += 1;
    }
    let support: Vec<usize> = confusion.iter().map(|row| row.iter().sum()).collect();
    let per_class = (0..num_classes)
        .map(|c| (support[c] > 0).then(|| confusion[c][c] as f64 / support[c] as f64))
        .collect();
    let correct: usize = (0..num_classes).map(|c| confusion[c][c]).sum();
    let total = labels.len();
    let error_rate = if total == 0 { 0.0 } else { 100.0 * (total - correct) as f64 / total as f64 };
    Ok(ClassificationReport { total, error_rate, confusion, support, per_class })
}

impl ClassificationReport {
    pub fn accuracy(&self) -> f64 {
        1.0 - self.error_rate / 100.0
    }

    /// Text table with one row per class that has examples.
    pub fn table(&self, class_names: &[String]) -> String {
        let mut out = format!("error rate {:.2}% over {} sentences\n", self.error_rate, self.total);
        out.push_str(&format!("{:<36} {:>8} {:>9}\n", "class", "support", "accuracy"));
        for (c, acc) in self.per_class.iter().enumerate() {
            if let Some(acc) = acc {
                let name = class_names.get(c).map_or_else(|| c.to_string(), Clone::clone);
                out.push_str(&format!("{:<36} {:>8} {:>8.2}%\n", name, self.support[c], 100.0 * acc));
            }
        }
        out
    }
}

impl fmt::Display for ClassificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}% error over {}", self.error_rate, self.total)
    }
}

/// `100 (base - new) / base`.
///
/// ```
/// let r = hcrn::metrics::relative_improvement(26.27, 22.73);
/// assert!((r - 13.48).abs() < 0.005);
/// ```
pub fn relative_improvement(base: f64, new: f64) -> f64 {
    100.0 * (base - new) / base
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub word: String,
    pub distance: f64,
}

/// The `k` entries closest to `query_vec` by Euclidean distance, skipping the
/// entry named `query`. Equal distances are ordered by word.
pub fn nearest_neighbors(entries: &[(String, Vec<f64>)], query: &str, query_vec: &[f64], k: usize) -> Result<Vec<Neighbor>> {
    let mut scored = Vec::with_capacity(entries.len());
    for (word, v) in entries {
        if word == query {
            continue;
        }
        if v.len() != query_vec.len() {
            return Err(Error::Input(format!("vector for {word:?} has width {}, query has {}", v.len(), query_vec.len())));
        }
        let d = v.iter().zip(query_vec).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        scored.push(Neighbor { word: word.clone(), distance: d });
    }
    if k > scored.len() {
        warn!("asked for {k} neighbours but only {} candidates exist", scored.len());
    }
    scored.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.word.cmp(&b.word)));
    scored.truncate(k);
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edit_distance_examples() {
        assert_eq!(levenshtein(b"kitten", b"sitting"), 3);
        assert_eq!(levenshtein(b"", b"abc"), 3);
        assert_eq!(levenshtein::<u8>(b"", b""), 0);
    }

    #[test]
    fn cper_examples() {
        assert_eq!(cper(b"same", b"same").unwrap(), 0.0);
        assert!(matches!(cper(b"", b"x"), Err(Error::Input(_))));
        assert_eq!(cper_with(b"ab", b"abcd", Denominator::Hypothesis).unwrap(), 0.5);
    }

    #[test]
    fn wrfr_examples() {
        let all = [("ab", "ab"), ("cd", "cd")].map(|(a, b)| (a.as_bytes(), b.as_bytes()));
        let w = wrfr(&all).unwrap();
        assert_eq!((w.percent, w.failed_length), (0.0, None));

        let quarter = [("ab", "ab"), ("cd", "cd"), ("ef", "ef"), ("gh", "gx")].map(|(a, b)| (a.as_bytes(), b.as_bytes()));
        assert_eq!(wrfr(&quarter).unwrap().percent, 25.0);

        let long = [(b"abcdefghijklm".as_slice(), b"abcdefghijklx".as_slice())];
        let w = wrfr(&long).unwrap();
        assert_eq!(w.failed_length, Some(MeanStd { mean: 13.0, std: 0.0 }));

        let none: [(&[u8], &[u8]); 0] = [];
        assert!(wrfr(&none).is_err());
    }

    #[test]
    fn reconstruction_report_table() {
        let pairs = [(b"cat".as_slice(), b"cut".as_slice()), (b"dog".as_slice(), b"dog".as_slice())];
        let r = ReconstructionReport::from_pairs(&pairs).unwrap();
        assert!((r.cper - 100.0 / 6.0).abs() < 1e-12);
        assert_eq!(r.wrfr, 50.0);
        assert!(r.row("in-vocab").contains("3.0(0.0)"));
        let ok = ReconstructionReport::from_pairs(&[(b"a".as_slice(), b"a".as_slice())]).unwrap();
        assert!(ok.row("x").trim_end().ends_with('-'));
    }

    #[test]
    fn classification_examples() {
        let r = classification_error(&[1, 2, 3], &[1, 2, 3], 4).unwrap();
        assert_eq!(r.error_rate, 0.0);
        assert_eq!(r.per_class[0], None);
        let r = classification_error(&[0, 0, 1, 1], &[0, 0, 1, 0], 2).unwrap();
        assert_eq!(r.error_rate, 25.0);
        assert_eq!(r.confusion, vec![vec![2, 1], vec![0, 1]]);
        assert_eq!(r.per_class[0], Some(2.0 / 3.0));
        assert!(matches!(classification_error(&[0], &[0, 1], 2), Err(Error::Input(_))));
        assert!(r.table(&["x".into(), "y".into()]).contains("x"));
    }

    #[test]
    fn relative_improvement_examples() {
        assert!((relative_improvement(26.27, 22.73) - 13.48).abs() < 0.005);
        assert!((relative_improvement(35.80, 27.13) - 24.22).abs() < 0.005);
        assert_eq!(relative_improvement(10.0, 10.0), 0.0);
    }

    #[test]
    fn neighbors() {
        let entries = vec![
            ("a".to_string(), vec![0.0, 0.0]),
            ("b".to_string(), vec![1.0, 0.0]),
            ("c".to_string(), vec![0.0, 1.0]),
            ("d".to_string(), vec![5.0, 5.0]),
        ];
        let n = nearest_neighbors(&entries, "a", &[0.0, 0.0], 3).unwrap();
        let words: Vec<&str> = n.iter().map(|x| x.word.as_str()).collect();
        assert_eq!(words, ["b", "c", "d"]);

        let n = nearest_neighbors(&entries, "zzz", &[5.0, 5.0], 1).unwrap();
        assert_eq!(n[0].word, "d");
        assert_eq!(n[0].distance, 0.0);

        let two = &entries[..2];
        assert_eq!(nearest_neighbors(two, "q", &[0.0, 0.0], 3).unwrap().len(), 2);
    }
}
