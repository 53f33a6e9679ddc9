//! Invariants every reassembled grid must satisfy.

use mrie_core::layout::{OcrElement, PlainTextGrid};

fn sorted_chars(s: impl Iterator<Item = char>) -> Vec<char> {
    let mut v: Vec<char> = s.filter(|c| !c.is_whitespace()).collect();
    v.sort_unstable();
    v
}

/// Every element's text sits at its reported position and the grid holds
/// nothing else.
pub fn check_conservation(elements: &[OcrElement], grid: &PlainTextGrid) -> Result<(), String> {
    for (e, pos) in elements.iter().zip(&grid.placements) {
        let text: Vec<char> = e.text.trim().chars().collect();
        let line: Vec<char> = grid.lines[pos.row].chars().collect();
        if line.get(pos.col..pos.col + text.len()) != Some(&text[..]) {
            return Err(format!("{:?} not found at {:?}", e.text, pos));
        }
    }
    let input = sorted_chars(elements.iter().flat_map(|e| e.text.chars()));
    let output = sorted_chars(grid.lines.iter().flat_map(|l| l.chars()));
    if input != output {
        return Err("character multiset changed".into());
    }
    Ok(())
}

pub fn check_rows(elements: &[OcrElement], grid: &PlainTextGrid) -> Result<(), String> {
    for (i, a) in elements.iter().enumerate() {
        for (j, b) in elements.iter().enumerate() {
            let (pa, pb) = (grid.placements[i], grid.placements[j]);
            if a.bbox.y1 <= b.bbox.y0 && pa.row >= pb.row {
                return Err(format!(
                    "element {i} lies above {j} but is on row {} >= {}",
                    pa.row, pb.row
                ));
            }
            if pa.row == pb.row && a.bbox.x0 < b.bbox.x0 {
                let end_a = pa.col + a.text.trim().chars().count();
                if end_a > pb.col {
                    return Err(format!("element {i} is left of {j} but ends at {end_a} > {}", pb.col));
                }
            }
        }
    }
    Ok(())
}
