//! A painting oracle for layout reassembly, plus element-set generators.
//!
//! The oracle paints every element's characters onto a character raster at
//! `round(x0 / w), round(y0 / h)` with the cell size taken from `statrs`
//! medians. It has no collision handling, so it is only compared on
//! "structured" fixtures where nothing collides.

use mrie_core::layout::OcrElement;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::statistics::{Data, Median};

pub fn paint(elements: &[OcrElement]) -> Vec<String> {
    if elements.is_empty() {
        return Vec::new();
    }
    let widths: Vec<f64> = elements
        .iter()
        .map(|e| (e.bbox.x1 - e.bbox.x0) / e.text.trim().chars().count() as f64)
        .collect();
    let heights: Vec<f64> = elements.iter().map(|e| e.bbox.y1 - e.bbox.y0).collect();
    let w = Data::new(widths).median();
    let h = Data::new(heights).median();

    let cells: Vec<(usize, usize, Vec<char>)> = elements
        .iter()
        .map(|e| {
            (
                (e.bbox.y0 / h).round() as usize,
                (e.bbox.x0 / w).round() as usize,
                e.text.trim().chars().collect(),
            )
        })
        .collect();
    let rows = cells.iter().map(|c| c.0).max().unwrap() + 1;
    let cols = cells.iter().map(|c| c.1 + c.2.len()).max().unwrap();
    let mut raster = vec![vec![' '; cols]; rows];
    for (r, c, chars) in &cells {
        for (i, ch) in chars.iter().enumerate() {
            assert_eq!(raster[*r][c + i], ' ', "structured fixture must not collide");
            raster[*r][c + i] = *ch;
        }
    }
    raster
        .into_iter()
        .map(|row| row.into_iter().collect::<String>().trim_end().to_string())
        .collect()
}

fn word(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    const ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789:.,/%+-()";
    let len = rng.random_range(1..=max_len);
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())] as char)
        .collect()
}

/// Words on a regular character grid with at least one blank cell between
/// neighbours. Box widths are exact; box origins carry sub-cell jitter.
pub fn structured(rng: &mut ChaCha8Rng) -> Vec<OcrElement> {
    let cw = rng.random_range(6.0..14.0);
    let ch = rng.random_range(12.0..30.0);
    let rows = rng.random_range(1..25);
    let mut out = Vec::new();
    for row in 0..rows {
        if rng.random_bool(0.2) {
            continue;
        }
        let mut col = rng.random_range(0..10);
        for _ in 0..rng.random_range(1..6) {
            let text = word(rng, 12);
            let len = text.chars().count();
            let x0 = (col as f64 + rng.random_range(-0.3..0.3)).max(0.0) * cw;
            let y0 = (row as f64 + rng.random_range(-0.3..0.3)).max(0.0) * ch;
            out.push(OcrElement::new(text, x0, y0, x0 + len as f64 * cw, y0 + ch));
            col += len + rng.random_range(1..8);
        }
    }
    if out.is_empty() {
        out.push(OcrElement::new("x", 0.0, 0.0, cw, ch));
    }
    // Input order must not matter.
    for i in (1..out.len()).rev() {
        out.swap(i, rng.random_range(0..=i));
    }
    out
}

/// Arbitrary boxes: overlapping, differently sized, in any order.
pub fn unstructured(rng: &mut ChaCha8Rng) -> Vec<OcrElement> {
    let n = rng.random_range(1..30);
    (0..n)
        .map(|_| {
            let text = if rng.random_bool(0.1) {
                format!("{} {}", word(rng, 5), word(rng, 5))
            } else {
                word(rng, 10)
            };
            let len = text.chars().count() as f64;
            let x0 = rng.random_range(0.0..800.0);
            let y0 = rng.random_range(0.0..1000.0);
            let cw = rng.random_range(4.0..16.0);
            let h = rng.random_range(5.0..40.0);
            OcrElement::new(text, x0, y0, x0 + len * cw, y0 + h)
        })
        .collect()
}
