//! Generated UK postcodes in every format class, and a control corpus of
//! clinical strings that must survive redaction untouched.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Outward-code shapes: `A` letter, `9` digit.
pub const FORMAT_CLASSES: [&str; 6] = ["A9", "A99", "A9A", "AA9", "AA99", "AA9A"];

const LETTERS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
const DIGITS: &[u8] = b"0123456789";

fn fill(shape: &str, rng: &mut ChaCha8Rng) -> String {
    shape
        .chars()
        .map(|c| match c {
            'A' => *LETTERS.choose(rng).unwrap() as char,
            '9' => *DIGITS.choose(rng).unwrap() as char,
            other => other,
        })
        .collect()
}

/// A postcode of the given outward class, with or without the space.
pub fn postcode(class: &str, spaced: bool, rng: &mut ChaCha8Rng) -> String {
    let outward = fill(class, rng);
    let inward = fill("9AA", rng);
    if spaced {
        format!("{outward} {inward}")
    } else {
        format!("{outward}{inward}")
    }
}

const TEMPLATES: [&str; 8] = [
    "{}",
    "Address: 12 High Street, Leeds {}",
    "Patient postcode {}.",
    "({})",
    "GP surgery, {}, United Kingdom",
    "Lives at {}; referred by GP",
    "postcode:{}",
    "Clinic\t{}\nWard 4",
];

/// `(text, postcode)` pairs covering every class, spacing and template.
pub fn positive_corpus(rng: &mut ChaCha8Rng, per_combination: usize) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for class in FORMAT_CLASSES {
        for spaced in [true, false] {
            for template in TEMPLATES {
                for _ in 0..per_combination {
                    let pc = postcode(class, spaced, rng);
                    out.push((template.replace("{}", &pc), pc));
                }
            }
        }
    }
    out
}

/// Specimen codes, TNM stages, receptor scores and measurements.
pub fn control_corpus(rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut out: Vec<String> = [
        "T2 N0",
        "T2 N0 M0",
        "pT1c pN0 M0",
        "T2N0M0",
        "ypT1a N1mi",
        "pT4b pN3a",
        "TNM 8th edition: pT2 pN1a (2/14)",
        "Tumour 22 mm, grade 2",
        "12 x 8 x 5 mm",
        "3.5 cm from the nipple",
        "Specimen weight 45 g",
        "ER Allred 8/8, PR 6/8",
        "HER2 IHC 2+, FISH not amplified",
        "Ki-67 20%",
        "B5a lesion, R1 margin",
        "Block A1 to A12",
        "Slides H1-H4",
        "ICD-10 C50.4",
        "Histology number H21-01234",
        "Specimen S21 0123A",
        "Lab ref BR-2021-0045",
        "NHS number 943 476 5919",
        "Date 12/03/2021",
        "Grade 3 (3+3+2 = 8)",
        "M1 metastasis absent",
        "pT1b(m) N0(i+)",
        "Nodes 0/12",
        "SNOMED 384727002",
        "Margins: closest 2 mm (inferior)",
        "DCIS grade high, 15mm",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();

    for _ in 0..300 {
        let s = match rng.random_range(0..7) {
            0 => format!(
                "pT{}{} pN{} M{}",
                rng.random_range(1..5),
                ["", "a", "b", "c"][rng.random_range(0..4)],
                rng.random_range(0..4),
                rng.random_range(0..2)
            ),
            1 => format!("T{} N{}", rng.random_range(0..5), rng.random_range(0..4)),
            2 => format!("{} mm", rng.random_range(1..200)),
            3 => format!("{}.{} cm", rng.random_range(0..20), rng.random_range(0..10)),
            4 => format!("H{:02}-{:05}", rng.random_range(0..100), rng.random_range(0..100_000)),
            5 => format!("S{:02}/{:04}", rng.random_range(0..100), rng.random_range(0..10_000)),
            _ => format!(
                "{} x {} x {} mm",
                rng.random_range(1..100),
                rng.random_range(1..100),
                rng.random_range(1..100)
            ),
        };
        out.push(s);
    }
    out
}
