use overtaking::config::Config;
use overtaking::detector::analyze;
use overtaking::domain::{DimensionTable, PresetName};
use overtaking::io::{export_relational, read_relational, relational_tables};
use overtaking::sampler::{scenario_for, GeneratorConfig};
use overtaking::sim;
use overtaking::Error;

fn three_vehicle_log() -> overtaking::log::SimulationLog {
    let gen = GeneratorConfig {
        n_vehicles_min: 3,
        n_vehicles_max: 3,
        presets: vec![PresetName::MidRainNight],
        ..GeneratorConfig::default()
    };
    sim::run(&scenario_for(1, 1, &gen).unwrap(), &Default::default()).unwrap()
}

#[test]
fn cardinalities() {
    let log = three_vehicle_log();
    let v = analyze(&log, &Config::default().detector).unwrap();
    let t = relational_tables(std::slice::from_ref(&log), &[v], &DimensionTable::default()).unwrap();
    assert_eq!(t.simulations.len(), 1);
    assert_eq!(t.frames.len(), 401);
    assert!(t.frames.iter().all(|f| f.sim_id == 1));
    assert_eq!(t.vehicles.len(), 3);
    assert_eq!(t.ego_vehicle.len(), 1);
    assert_eq!(t.vehicle_states.len(), 3 * 401);
    assert_eq!(t.ego_states.len(), 401);
    assert_eq!(t.weather[0].precipitation, 60.0);
    assert!(t.simulations[0].class.is_some());
}

#[test]
fn written_tables_read_back() {
    let log = three_vehicle_log();
    let tmp = tempfile::tempdir().unwrap();
    let dims = DimensionTable::default();
    let paths = export_relational(std::slice::from_ref(&log), &[], &dims, tmp.path()).unwrap();
    assert_eq!(paths.len(), 7);
    let back = read_relational(tmp.path()).unwrap();
    assert_eq!(back, relational_tables(&[log], &[], &dims).unwrap());
}

#[test]
fn dangling_keys_are_rejected() {
    let dims = DimensionTable::default();
    let mut log = three_vehicle_log();
    log.frames[10].sim = 9;
    assert!(matches!(relational_tables(&[log], &[], &dims), Err(Error::Referential(_))));

    let mut log = three_vehicle_log();
    log.frames[5].vehicles[1].id = 77;
    assert!(matches!(relational_tables(&[log], &[], &dims), Err(Error::Referential(_))));

    let log = three_vehicle_log();
    let mut v = analyze(&log, &Config::default().detector).unwrap();
    v.sim = 4;
    assert!(matches!(relational_tables(&[log], &[v], &dims), Err(Error::Referential(_))));
}
