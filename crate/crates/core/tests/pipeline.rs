//! End-to-end runs across modules and serialization round trips.

use mcmullen_core::bounds::{coverage_by_birth, find_witness, BoundWitness, SearchLimits};
use mcmullen_core::density::{ConstraintReport, DensitySpec};
use mcmullen_core::exact::rat;
use mcmullen_core::hierarchy::ConstructionParams;
use mcmullen_core::nets::{generate_net, match_distortion, Net};
use mcmullen_core::probe::{
    empirical_bilipschitz, kr_map, proof_replay, CellMasses, Direction, EdgeSelection, GridMap, KrTransport,
};
use mcmullen_core::Point;

fn mcmullen_15(depth: usize) -> DensitySpec {
    let branching = vec![84][..depth - 1].to_vec();
    DensitySpec::new(ConstructionParams::new(rat(1, 15), rat(1, 20), branching, depth)).unwrap()
}

#[test]
fn depth_two_net_against_lattice() {
    let k = 45u64;
    let net = generate_net(&mcmullen_15(2), 2, k).unwrap();
    assert_eq!(net.points.len() as u64, k * k);
    let lattice: Vec<Point<f64>> = (0..k)
        .flat_map(|j| (0..k).map(move |i| Point::new((i as f64 + 0.5) / k as f64, (j as f64 + 0.5) / k as f64)))
        .collect();
    let m = match_distortion(&net.points, &lattice, 3000).unwrap();
    assert_eq!(m.pairs.len(), 2025);
    assert!(m.constant > 1.0);
    println!("depth-2 net vs lattice, n = 2025: matching constant {:.4}", m.constant);
}

#[test]
fn replay_on_depth_two_transport_with_audit() {
    let spec = mcmullen_15(2);
    let masses = CellMasses::from_spec(&spec, 2, 256).unwrap();
    let kr = KrTransport::new(&masses).unwrap();
    assert!(kr.mass_audit(&masses).total_error <= 0.02);
    let map = kr.grid_map(Direction::Forward);
    let k = empirical_bilipschitz(&map, 2000, 3).k_emp;
    let d = proof_replay(&map, &spec, EdgeSelection::root_bottom(&spec).unwrap(), k, 1e-4).unwrap();
    assert_eq!(d.blocks.len(), 12);
    assert!(d.boundary_vl >= 0.0 && d.length_p > 0.0);
    let table = d.to_string();
    assert!(table.lines().any(|l| l.starts_with("length_upper,")));
}

#[test]
fn serde_round_trips() {
    let w: BoundWitness = find_witness(1.0 / 28.0, 1.0 / 200.0, 2.0, SearchLimits::default()).unwrap().unwrap();
    let json = serde_json::to_string(&w).unwrap();
    assert!(json.contains("\"N0\""));
    assert_eq!(serde_json::from_str::<BoundWitness>(&json).unwrap(), w);

    let report: ConstraintReport = mcmullen_15(2).verify_constraints(2).unwrap();
    let back: ConstraintReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(back, report);

    let net: Net = generate_net(&mcmullen_15(1), 1, 8).unwrap();
    assert_eq!(serde_json::from_str::<Net>(&serde_json::to_string(&net).unwrap()).unwrap(), net);

    let map: GridMap = kr_map(&mcmullen_15(1), 1, 8, Direction::Inverse).unwrap();
    assert_eq!(serde_json::from_str::<GridMap>(&serde_json::to_string(&map).unwrap()).unwrap(), map);
}

#[test]
fn coverage_table_is_consistent() {
    let levels = coverage_by_birth(1.0 / 28.0, 1.0 / 200.0, &[84, 168, 336], 4).unwrap();
    assert_eq!(levels.len(), 3);
    // older units see more finest squares along an edge
    assert!(levels.windows(2).all(|w| w[0].squares > w[1].squares));
    assert!(levels.windows(2).all(|w| w[0].excluded_stretch >= w[1].excluded_stretch));
    assert!(levels[0].excluded_stretch > 1.0);
}
