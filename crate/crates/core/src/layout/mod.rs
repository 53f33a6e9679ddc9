//! Layout reassembly of OCR output and text de-identification.
//!
//! OCR engines return words with pixel bounding boxes. [`reassemble`] maps
//! them onto a character grid whose cell size is the median character size,
//! so indentation and table columns survive as plain spaces.

mod redact;

pub use redact::{apply_spans, redact_postcodes, RedactionSpan, POSTCODE_CATEGORY};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LayoutError {
    #[error("no OCR elements given")]
    EmptyInput,
    #[error("OCR element {index}: {reason}")]
    InvalidElement { index: usize, reason: String },
    #[error("malformed OCR JSON: {0}")]
    Json(String),
    #[error("redaction spans overlap: {first:?} and {second:?}")]
    OverlappingSpans {
        first: (usize, usize),
        second: (usize, usize),
    },
    #[error("redaction span {start}..{end} is outside a document of {len} characters")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }
}

/// One recognised text fragment. On the wire the box is `[x0, y0, x1, y1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrElement {
    pub text: String,
    #[serde(with = "bbox_array")]
    pub bbox: BBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

mod bbox_array {
    use super::BBox;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &BBox, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq([b.x0, b.y0, b.x1, b.y1])
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BBox, D::Error> {
        let [x0, y0, x1, y1] = <[f64; 4]>::deserialize(d)?;
        Ok(BBox { x0, y0, x1, y1 })
    }
}

impl OcrElement {
    pub fn new(text: impl Into<String>, x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            text: text.into(),
            bbox: BBox::new(x0, y0, x1, y1),
            confidence: None,
        }
    }

    fn char_len(&self) -> usize {
        self.text.trim().chars().count()
    }

    fn check(&self, index: usize) -> Result<(), LayoutError> {
        let invalid = |reason: &str| LayoutError::InvalidElement {
            index,
            reason: reason.to_string(),
        };
        let b = &self.bbox;
        if ![b.x0, b.y0, b.x1, b.y1].iter().all(|v| v.is_finite()) {
            return Err(invalid("bounding box has a non-finite coordinate"));
        }
        if b.x0 >= b.x1 || b.y0 >= b.y1 {
            return Err(invalid("bounding box must satisfy x0 < x1 and y0 < y1"));
        }
        if self.text.trim().is_empty() {
            return Err(invalid("text is empty"));
        }
        if self.text.contains(['\n', '\r']) {
            return Err(invalid("text contains a line break"));
        }
        if let Some(c) = self.confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(invalid("confidence is outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Parses the OCR interchange format: a JSON array of elements.
pub fn parse_ocr_json(text: &str) -> Result<Vec<OcrElement>, LayoutError> {
    let elements: Vec<OcrElement> = serde_json::from_str(text).map_err(|e| LayoutError::Json(e.to_string()))?;
    for (i, e) in elements.iter().enumerate() {
        e.check(i)?;
    }
    Ok(elements)
}

/// Where an element's first character landed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellPosition {
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlainTextGrid {
    pub lines: Vec<String>,
    /// `(char_width, char_height)` in pixels.
    pub cell_size: (f64, f64),
    /// One entry per input element, in input order. Columns count characters.
    pub placements: Vec<CellPosition>,
}

impl PlainTextGrid {
    /// The grid as a newline-terminated document.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

/// Even-length inputs take the mean of the middle pair.
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Median per-character width and median element height, in pixels.
pub fn median_char_size(elements: &[OcrElement]) -> Result<(f64, f64), LayoutError> {
    if elements.is_empty() {
        return Err(LayoutError::EmptyInput);
    }
    for (i, e) in elements.iter().enumerate() {
        e.check(i)?;
    }
    let mut widths: Vec<f64> = elements
        .iter()
        .map(|e| (e.bbox.x1 - e.bbox.x0) / e.char_len() as f64)
        .collect();
    let mut heights: Vec<f64> = elements.iter().map(|e| e.bbox.y1 - e.bbox.y0).collect();
    Ok((median(&mut widths), median(&mut heights)))
}

fn grid_index(coord: f64, cell: f64) -> usize {
    // f64::round rounds half away from zero.
    (coord / cell).round().max(0.0) as usize
}

/// Places every element on a character grid.
///
/// Row is `round(y0 / char_height)`, raised where needed so an element lying
/// wholly below another never shares or precedes its row. Column is
/// `round(x0 / char_width)`; within a row elements are laid out by `x0`, and an
/// element that would overlap its left neighbour is pushed right to the first
/// free column. Text is never dropped or overwritten.
pub fn reassemble(elements: &[OcrElement]) -> Result<PlainTextGrid, LayoutError> {
    if elements.is_empty() {
        return Ok(PlainTextGrid {
            lines: Vec::new(),
            cell_size: (0.0, 0.0),
            placements: Vec::new(),
        });
    }
    let (cw, ch) = median_char_size(elements)?;

    let mut by_top: Vec<usize> = (0..elements.len()).collect();
    by_top.sort_by(|&a, &b| elements[a].bbox.y0.total_cmp(&elements[b].bbox.y0).then(a.cmp(&b)));
    let mut rows = vec![0usize; elements.len()];
    let mut placed: Vec<usize> = Vec::with_capacity(elements.len());
    for &i in &by_top {
        let b = &elements[i].bbox;
        let floor = placed
            .iter()
            .filter(|&&j| elements[j].bbox.y1 <= b.y0)
            .map(|&j| rows[j] + 1)
            .max()
            .unwrap_or(0);
        rows[i] = grid_index(b.y0, ch).max(floor);
        placed.push(i);
    }

    let mut order: Vec<usize> = (0..elements.len()).collect();
    order.sort_by(|&a, &b| {
        rows[a]
            .cmp(&rows[b])
            .then(elements[a].bbox.x0.total_cmp(&elements[b].bbox.x0))
            .then(a.cmp(&b))
    });

    let last_row = rows.iter().copied().max().unwrap_or(0);
    let mut lines = vec![String::new(); last_row + 1];
    let mut cursor = vec![0usize; last_row + 1];
    let mut placements = vec![CellPosition { row: 0, col: 0 }; elements.len()];
    for i in order {
        let row = rows[i];
        let col = grid_index(elements[i].bbox.x0, cw).max(cursor[row]);
        let text = elements[i].text.trim();
        let line = &mut lines[row];
        let width = line.chars().count();
        line.extend(std::iter::repeat_n(' ', col - width));
        line.push_str(text);
        cursor[row] = col + text.chars().count();
        placements[i] = CellPosition { row, col };
    }
    for line in &mut lines {
        let trimmed = line.trim_end().len();
        line.truncate(trimmed);
    }

    Ok(PlainTextGrid {
        lines,
        cell_size: (cw, ch),
        placements,
    })
}
