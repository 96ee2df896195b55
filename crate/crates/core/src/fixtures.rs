//! Bundled sample inputs: the aircraft electrical system (design document,
//! review edits and hand-written reference models) and a small library of
//! X-language units.

use crate::doc::Edit;
use crate::eval::{Annotations, SourceFile};
use crate::model::{parse_units, ModelUnit};

/// Reference units of the aircraft electrical system, one file each.
pub const AIRCRAFT_REFERENCE: [(&str, &str); 8] = [
    ("AircraftElectricalSystem.x", include_str!("../fixtures/aircraft/reference/AircraftElectricalSystem.x")),
    ("AutoPilot.x", include_str!("../fixtures/aircraft/reference/AutoPilot.x")),
    ("BallisticSceneControl.x", include_str!("../fixtures/aircraft/reference/BallisticSceneControl.x")),
    ("Battery.x", include_str!("../fixtures/aircraft/reference/Battery.x")),
    ("Control.x", include_str!("../fixtures/aircraft/reference/Control.x")),
    ("Radar.x", include_str!("../fixtures/aircraft/reference/Radar.x")),
    ("Thrust.x", include_str!("../fixtures/aircraft/reference/Thrust.x")),
    ("clamp.x", include_str!("../fixtures/aircraft/reference/clamp.x")),
];

pub const AIRCRAFT_DOCUMENT: &str = include_str!("../fixtures/aircraft/document.md");
pub const AIRCRAFT_EDITS: &str = include_str!("../fixtures/aircraft/edits.json");
pub const AIRCRAFT_ANNOTATIONS: &str = include_str!("../fixtures/aircraft/annotations.json");
pub const AIRCRAFT_CONFIG: &str = include_str!("../fixtures/aircraft/pipeline.toml");

/// Containment relations a reader finds in the aircraft document, as
/// (parent, child) surface names.
pub const AIRCRAFT_RELATIONS: [(&str, &str); 6] = [
    ("aircraft electrical system", "power supply"),
    ("aircraft electrical system", "flight scenario control module"),
    ("aircraft electrical system", "control bus"),
    ("aircraft electrical system", "radar"),
    ("aircraft electrical system", "rudder"),
    ("aircraft electrical system", "thrust module"),
];

pub const CORPUS: [(&str, &str); 4] = [
    ("electric_vehicle.x", include_str!("../fixtures/corpus/electric_vehicle.x")),
    ("library.x", include_str!("../fixtures/corpus/library.x")),
    ("railroad_crossing.x", include_str!("../fixtures/corpus/railroad_crossing.x")),
    ("takeoff.x", include_str!("../fixtures/corpus/takeoff.x")),
];

fn parse_all(files: &[(&str, &str)]) -> Vec<ModelUnit> {
    files
        .iter()
        .flat_map(|(name, text)| parse_units(text).unwrap_or_else(|e| panic!("bundled {name}: {e}")))
        .collect()
}

pub fn aircraft_reference() -> Vec<ModelUnit> {
    parse_all(&AIRCRAFT_REFERENCE)
}

pub fn aircraft_sources() -> Vec<SourceFile> {
    AIRCRAFT_REFERENCE
        .iter()
        .map(|(name, text)| SourceFile {
            name: name.to_string(),
            text: text.to_string(),
        })
        .collect()
}

pub fn aircraft_edits() -> Vec<Edit> {
    serde_json::from_str(AIRCRAFT_EDITS).expect("bundled edits parse")
}

pub fn aircraft_annotations() -> Annotations {
    serde_json::from_str(AIRCRAFT_ANNOTATIONS).expect("bundled annotations parse")
}

/// Example library used for few-shot prompts.
pub fn library_units() -> Vec<ModelUnit> {
    parse_all(&CORPUS)
}

/// Every bundled unit: the library followed by the aircraft reference.
pub fn corpus_units() -> Vec<ModelUnit> {
    let mut out = library_units();
    out.extend(aircraft_reference());
    out
}
