use crate::model::{print_unit, ModelUnit, UnitKind};

use super::prompt::{Label, PromptBundle, Purpose, Role, X_BNF};
use super::GenError;

pub const AUGMENT_TASK: &str = "Generate a couple/continuous/discrete simulation model of X language based on the model described in the aforementioned Input component.";

/// Introduction (language rules, BNF, examples), Input (the description)
/// and Task, in that order.
pub fn build_augmentation_prompt(
    model_description: &str,
    examples: &[ModelUnit],
    kind: UnitKind,
) -> Result<PromptBundle, GenError> {
    if examples.is_empty() {
        return Err(GenError::FewShotRequired);
    }
    let mut intro = String::from(
        "X language describes simulation models as classes. A couple class model composes parts and connects their ports; \
         a discrete class model reacts to events through the keyword State; a continuous class model evolves through the keyword Equation; \
         a function class model computes a result in the keyword Algorithm.\n\nBNF of X language:\n",
    );
    intro.push_str(X_BNF);
    intro.push_str("\n\nExamples from the X language model library:");
    for ex in examples {
        intro.push_str("\n\n");
        intro.push_str(&print_unit(ex));
    }
    let mut b = PromptBundle::new(Purpose::Augment {
        kind,
        description: model_description.to_string(),
    });
    b.push(Role::User, Label::Introduction, intro);
    b.push(Role::User, Label::Input, model_description);
    b.push(
        Role::User,
        Label::Task,
        format!("{AUGMENT_TASK} The model is a {} class model.", kind.keyword()),
    );
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_unit;

    fn examples() -> Vec<ModelUnit> {
        ["continuous A\nport:\n  output Real y;\nequation:\n  y = 1.0;\nend;\n", "discrete B\nend;\n"]
            .iter()
            .map(|s| parse_unit(s).unwrap())
            .collect()
    }

    #[test]
    fn three_parts_in_order() {
        let b = build_augmentation_prompt("hydraulic pump", &examples(), UnitKind::Continuous).unwrap();
        assert_eq!(b.labels(), [Label::Introduction, Label::Input, Label::Task]);
        assert!(b.messages[2].content.contains("Generate a couple/continuous/discrete simulation model"));
        assert_eq!(b.messages[1].content, "hydraulic pump");
        assert!(b.messages[0].content.contains("continuous A"));
    }

    #[test]
    fn needs_examples() {
        assert!(matches!(
            build_augmentation_prompt("pump", &[], UnitKind::Discrete),
            Err(GenError::FewShotRequired)
        ));
    }

    #[test]
    fn pure() {
        let a = build_augmentation_prompt("pump", &examples(), UnitKind::Discrete).unwrap();
        let b = build_augmentation_prompt("pump", &examples(), UnitKind::Discrete).unwrap();
        assert_eq!(a, b);
    }
}
