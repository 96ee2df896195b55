use proptest::prelude::*;
use xgen_core::eval::{evaluate_batch, EvalConfig, GeneratedSet, Reference, SourceFile, WeightsSource};
use xgen_core::fixtures;
use xgen_core::kernel::{simulate, SimulationConfig, Value};
use xgen_core::{link_model_set, parse_unit, print_unit};

fn sim() -> SimulationConfig {
    SimulationConfig {
        end_time: 100.0,
        continuous_step: 0.1,
        ..SimulationConfig::default()
    }
}

#[test]
fn flight_phases_advance_in_order() {
    let model = link_model_set(&fixtures::aircraft_reference(), None).unwrap();
    let trace = simulate(&model, &sim()).unwrap();
    let phases: Vec<(f64, Value)> = trace
        .port_events("AircraftElectricalSystem.control.phase")
        .into_iter()
        .map(|e| (e.time, e.value.clone()))
        .collect();
    let values: Vec<Value> = phases.iter().map(|p| p.1.clone()).collect();
    assert_eq!(values, (1..=4).map(Value::Int).collect::<Vec<_>>());
    assert_eq!(phases[0].0, 0.0);
    assert_eq!(phases[1].0, 10.0);
    assert!(phases.windows(2).all(|w| w[0].0 < w[1].0));
}

#[test]
fn radar_range_shrinks_while_scanning() {
    let model = link_model_set(&fixtures::aircraft_reference(), None).unwrap();
    let trace = simulate(&model, &sim()).unwrap();
    let ranges: Vec<f64> = trace
        .port_events("AircraftElectricalSystem.radar.target_range")
        .into_iter()
        .filter_map(|e| match e.value {
            Value::Real(r) => Some(r),
            _ => None,
        })
        .collect();
    assert!(ranges.len() > 2);
    assert!(ranges.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn entropy_weighting_over_a_batch() {
    let reference = Reference::new(fixtures::aircraft_reference(), &sim()).unwrap();
    let clean = GeneratedSet::parse(&fixtures::aircraft_sources());
    let faulted: Vec<SourceFile> = fixtures::aircraft_sources()
        .into_iter()
        .map(|mut f| {
            if f.name == "Battery.x" {
                f.text = f.text.replace("28.5", "24.0");
            }
            f
        })
        .collect();
    let cfg = EvalConfig {
        weights_source: WeightsSource::Ewm,
        simulation: sim(),
        ..EvalConfig::default()
    };
    let annotations = fixtures::aircraft_annotations();
    let reports = evaluate_batch(
        &[(clean, Some(annotations.clone())), (GeneratedSet::parse(&faulted), Some(annotations))],
        &reference,
        &cfg,
    )
    .unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r.weights_source == WeightsSource::Ewm));
    assert_eq!(reports[0].score(), 1.0);
    assert!(reports[1].score() < 1.0);
}

fn generator(holds: &[u8], values: &[i32]) -> String {
    let mut src = String::from("discrete Pulse\nvalue:\n  Int k = 0;\nport:\n  output Int y;\nstate:\n");
    for (i, (h, v)) in holds.iter().zip(values).enumerate() {
        let init = if i == 0 { "initial " } else { "" };
        let next = (i + 1) % holds.len();
        src.push_str(&format!(
            "{init}state S{i}\n  when entry() then\n    statehold({h});\n    k = k + {v};\n    y = k;\n  end;\n  \
             when timeout() then\n    transform to S{next};\n  end;\nend;\n"
        ));
    }
    src.push_str("end;\n");
    src
}

proptest! {
    #[test]
    fn generated_units_print_canonically(spec in prop::collection::vec((1u8..9, -50i32..50), 1..6)) {
        let (holds, values): (Vec<u8>, Vec<i32>) = spec.into_iter().unzip();
        let unit = parse_unit(&generator(&holds, &values)).unwrap();
        let text = print_unit(&unit);
        let again = parse_unit(&text).unwrap();
        prop_assert_eq!(&again, &unit);
        prop_assert_eq!(print_unit(&again), text);
    }
}
