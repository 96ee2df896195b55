use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{print_section, section_order, ModelUnit, Section, UnitKind};

use super::GenError;

pub const MASK: &str = "[MASK]";

pub const DISCRETE_INSTRUCTION: &str = "This is a partially masked code for X language discrete class models. The parts represented by [MASK] may include value, state, and other keywords of discrete class models that have been concealed. Based on the available code, please speculate on the exact content in [MASK].";

pub const CONTINUOUS_INSTRUCTION: &str = "This is a partially masked code for X language continuous class models. The parts represented by [MASK] may include value, equation, and other keywords of continuous class models that have been concealed. Based on the available code, please speculate on the exact content in [MASK].";

/// Near-synonymous instructions mixed into the dataset.
pub const DEFAULT_PARAPHRASES: [&str; 3] = [
    "Some keywords of this X language model have been replaced by [MASK]. Reconstruct the hidden code exactly.",
    "The following X language model has masked sections marked [MASK]. Using the visible code, write the concealed content.",
    "Fill in each [MASK] in this X language simulation model with the code that was removed from it.",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSample {
    pub instruction: String,
    pub input: String,
    pub output: String,
}

fn masked_sections(kind: UnitKind) -> Option<[Section; 2]> {
    match kind {
        UnitKind::Discrete => Some([Section::Value, Section::State]),
        UnitKind::Continuous => Some([Section::Value, Section::Equation]),
        _ => None,
    }
}

/// Canonical text of `unit` with its value and behavior sections each
/// replaced by a `[MASK]` line, and the hidden text.
pub fn mask_unit(unit: &ModelUnit) -> Option<(String, String)> {
    let masked = masked_sections(unit.kind)?;
    let mut input = format!("{} {}\n", unit.kind.keyword(), unit.name);
    for imp in &unit.imports {
        input.push_str(&format!("  import {};\n", imp.name));
    }
    let mut output = String::new();
    for &sec in section_order(unit.kind) {
        if masked.contains(&sec) {
            input.push_str(MASK);
            input.push('\n');
            if unit.section_present(sec) {
                output.push_str(&print_section(unit, sec));
            }
        } else if unit.section_present(sec) {
            input.push_str(&print_section(unit, sec));
        }
    }
    input.push_str("end;\n");
    Some((input, output))
}

/// Puts the hidden sections back: the text before the behavior section
/// header goes to the first mask, the rest to the second.
pub fn unmask(input: &str, output: &str) -> Option<String> {
    let split = output
        .match_indices('\n')
        .map(|(i, _)| i + 1)
        .chain(std::iter::once(0))
        .filter(|&i| {
            let rest = &output[i..];
            ["state:\n", "equation:\n"].iter().any(|h| rest.starts_with(h))
        })
        .min()?;
    let (first, second) = output.split_at(split);
    let mask_line = format!("{MASK}\n");
    let a = input.find(&mask_line)?;
    let b = a + mask_line.len() + input[a + mask_line.len()..].find(&mask_line)?;
    let mut out = String::new();
    out.push_str(&input[..a]);
    out.push_str(first);
    out.push_str(&input[a + mask_line.len()..b]);
    out.push_str(second);
    out.push_str(&input[b + mask_line.len()..]);
    Some(out)
}

/// One sample per unit, instructions drawn with a seeded generator from the
/// kind's table instruction plus `paraphrase_pool`.
pub fn build_mask_dataset(units: &[ModelUnit], paraphrase_pool: &[String], seed: u64) -> Result<Vec<MaskSample>, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(units.len());
    for u in units {
        let (input, output) = mask_unit(u).ok_or_else(|| GenError::NotMaskable(u.name.clone()))?;
        let base = if u.kind == UnitKind::Continuous {
            CONTINUOUS_INSTRUCTION
        } else {
            DISCRETE_INSTRUCTION
        };
        let pool: Vec<&str> = std::iter::once(base).chain(paraphrase_pool.iter().map(String::as_str)).collect();
        let instruction = pool[rng.random_range(0..pool.len())].to_string();
        out.push(MaskSample {
            instruction,
            input,
            output,
        });
    }
    Ok(out)
}

/// One JSON object per line with fields `instruction`, `input`, `output`.
pub fn to_jsonl(samples: &[MaskSample]) -> String {
    samples
        .iter()
        .map(|s| serde_json::to_string(s).expect("sample serializes") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_unit;

    const DISCRETE: &str = "discrete Counter\nparameter:\n  Int step = 1;\nvalue:\n  Int n = 0;\nport:\n  output Int y;\nstate:\n  initial state Tick\n    when entry() then statehold(1); y = n; end;\n    when timeout() then n = n + step; transform to Tick; end;\n  end;\nend;\n";
    const CONTINUOUS: &str = "continuous Tank\nvalue:\n  Real level = 0.0;\nport:\n  input Real inflow;\n  output Real h;\nequation:\n  der(level) = inflow;\n  h = level;\nend;\n";

    #[test]
    fn splice_back_reproduces() {
        for src in [DISCRETE, CONTINUOUS] {
            let u = parse_unit(src).unwrap();
            let (input, output) = mask_unit(&u).unwrap();
            assert_eq!(input.matches(MASK).count(), 2);
            assert_eq!(parse_unit(&unmask(&input, &output).unwrap()).unwrap(), u);
        }
    }

    #[test]
    fn continuous_output_holds_equations() {
        let u = parse_unit(CONTINUOUS).unwrap();
        let s = &build_mask_dataset(std::slice::from_ref(&u), &[], 1).unwrap()[0];
        assert!(s.output.contains(&print_section(&u, Section::Equation)));
        assert_eq!(s.instruction, CONTINUOUS_INSTRUCTION);
    }

    #[test]
    fn missing_value_section() {
        let u = parse_unit("discrete A\nport:\n  output Real y;\nstate:\n  initial state S\n  end;\nend;\n").unwrap();
        let (input, output) = mask_unit(&u).unwrap();
        assert!(output.starts_with("state:"));
        assert_eq!(parse_unit(&unmask(&input, &output).unwrap()).unwrap(), u);
    }

    #[test]
    fn seeded_and_deterministic() {
        let units: Vec<ModelUnit> = (0..20).map(|_| parse_unit(DISCRETE).unwrap()).collect();
        let pool: Vec<String> = DEFAULT_PARAPHRASES.iter().map(|s| s.to_string()).collect();
        let a = to_jsonl(&build_mask_dataset(&units, &pool, 42).unwrap());
        let b = to_jsonl(&build_mask_dataset(&units, &pool, 42).unwrap());
        assert_eq!(a, b);
        assert!(a.contains("This is a partially masked code for X language discrete class models."));
        let first: serde_json::Value = serde_json::from_str(a.lines().next().unwrap()).unwrap();
        let keys: Vec<&String> = first.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["input", "instruction", "output"]);
    }

    #[test]
    fn couples_are_rejected() {
        let u = parse_unit("couple C\nend;\n").unwrap();
        assert!(matches!(build_mask_dataset(&[u], &[], 0), Err(GenError::NotMaskable(_))));
    }
}
