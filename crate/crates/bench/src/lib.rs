//! Seeded input generators shared by the benchmarks.

use mrie_core::eval::ReportOutcome;
use mrie_core::layout::OcrElement;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Per-report outcomes for `annotators` annotators over `reports` reports,
/// each report scoring `features` cells.
pub fn outcomes(annotators: usize, reports: usize, features: u64, seed: u64) -> Vec<ReportOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(annotators * reports);
    for a in 0..annotators {
        let p = (0.80 + 0.02 * a as f64).min(0.97);
        for r in 0..reports {
            let k = (0..features).filter(|_| rng.random_bool(p)).count() as u64;
            out.push(ReportOutcome::new(format!("a{a}"), format!("r{r:05}"), k, features));
        }
    }
    out
}

/// A page of `lines` text lines, each split into a few jittered words.
pub fn ocr_page(lines: usize, seed: u64) -> Vec<OcrElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut elements = Vec::new();
    for line in 0..lines {
        let y = 40.0 + 24.0 * line as f64 + rng.random_range(-2.0..2.0);
        let mut x = 30.0 + rng.random_range(0.0..20.0);
        for w in 0..rng.random_range(2..7) {
            let len = rng.random_range(3..12);
            let text: String = (0..len)
                .map(|i| (b'a' + ((w * 7 + i + line) % 26) as u8) as char)
                .collect();
            let width = 9.0 * len as f64;
            elements.push(OcrElement::new(text, x, y, x + width, y + 18.0));
            x += width + rng.random_range(9.0..40.0);
        }
    }
    elements
}

/// Report-like text of roughly `bytes` bytes with a postcode every few lines.
pub fn report_text(bytes: usize, seed: u64) -> String {
    const POSTCODES: [&str; 4] = ["SW1A 1AA", "M1 1AE", "B33 8TH", "CR2 6XH"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::with_capacity(bytes + 64);
    while text.len() < bytes {
        if rng.random_range(0..6) == 0 {
            text.push_str("Address on file: ");
            text.push_str(POSTCODES[rng.random_range(0..POSTCODES.len())]);
            text.push('\n');
        } else {
            text.push_str("Sections show invasive carcinoma with clear margins, grade 2.\n");
        }
    }
    text
}
