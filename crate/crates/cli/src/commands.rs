//! One function per subcommand. Each writes its artifacts into the output
//! directory and prints a short summary.

use mcmullen_core::bounds::{coverage_by_birth, excluded_stretch, find_witness, stretch_ceiling, usable_squares, SearchLimits};
use mcmullen_core::density::{all_level_values, DensitySpec, RasterMode};
use mcmullen_core::exact::{decimal_string, fraction_string, int, to_f64};
use mcmullen_core::nets::generate_net;
use mcmullen_core::probe::{
    empirical_bilipschitz, proof_replay, resolution_warnings, CellMasses, Direction, EdgeSelection, KrTransport,
};
use mcmullen_core::Error;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{self, exact, Csv, Outputs, PGM_MAXVAL};

pub const DEFAULT_RESOLUTION: usize = 256;
pub const DEFAULT_SCALE: u64 = 64;
pub const DEFAULT_K: f64 = 2.0;
pub const DEFAULT_ALPHA: f64 = 1e-4;
pub const DEFAULT_N_GRID: [u64; 5] = [700, 7_000, 70_000, 700_000, 7_000_000];
/// Random pairs per distortion estimate, on top of all grid neighbours.
pub const DISTORTION_PAIRS: usize = 20_000;

fn spec(cfg: &RunConfig) -> Result<DensitySpec, CliError> {
    Ok(DensitySpec::new(cfg.params.clone())?)
}

pub fn build(cfg: &RunConfig, out: &Outputs) -> Result<(), CliError> {
    let report = cfg.params.validate();
    out.write_json("validation.json", &json!({ "passed": report.passed(), "checks": report.checks }))?;
    if !report.passed() {
        return Err(Error::InvalidParams(report).into());
    }
    let values = all_level_values(&cfg.params)?;
    let mut csv = Csv::new(&["level", "n", "s", "t", "s_decimal", "t_decimal"]);
    for (j, pair) in values.levels.iter().enumerate() {
        let level = j + 1;
        let n = if level == 1 { String::new() } else { cfg.params.branching_at(level).to_string() };
        csv.row([
            level.to_string(),
            n,
            fraction_string(&pair.s),
            fraction_string(&pair.t),
            decimal_string(to_f64(&pair.s)),
            decimal_string(to_f64(&pair.t)),
        ]);
        println!("level {level}: s = {}, t = {}", fraction_string(&pair.s), fraction_string(&pair.t));
    }
    out.write("level_values.csv", &csv.finish())?;
    Ok(())
}

pub fn eval(cfg: &RunConfig, out: &Outputs) -> Result<(), CliError> {
    let p = cfg.point()?;
    let e = spec(cfg)?.evaluate(&p, cfg.depth())?;
    println!("rho({}, {}) = {} = {}", fraction_string(&p.x), fraction_string(&p.y), fraction_string(&e.value), decimal_string(to_f64(&e.value)));
    out.write_json(
        "eval.json",
        &json!({
            "point": [fraction_string(&p.x), fraction_string(&p.y)],
            "depth": cfg.depth(),
            "value": exact(&e.value),
            "level": e.level,
            "birth_level": e.birth_level,
            "in_core": e.in_core,
        }),
    )?;
    Ok(())
}

pub fn integrate(cfg: &RunConfig, out: &Outputs) -> Result<(), CliError> {
    let rect = cfg.rect()?;
    let value = spec(cfg)?.integrate(&rect, cfg.depth())?;
    println!("integral = {} = {}", fraction_string(&value), decimal_string(to_f64(&value)));
    let corners = [&rect.x0, &rect.y0, &rect.x1, &rect.y1].map(fraction_string);
    out.write_json(
        "integrate.json",
        &json!({ "rect": corners, "depth": cfg.depth(), "integral": exact(&value), "area": exact(&rect.area()) }),
    )?;
    Ok(())
}

pub fn raster(cfg: &RunConfig, out: &Outputs) -> Result<(), CliError> {
    let m = cfg.resolution.unwrap_or(DEFAULT_RESOLUTION);
    let mode = cfg.raster_mode()?;
    let spec = spec(cfg)?;
    let raster = spec.raster(m, cfg.depth(), mode)?;
    let bounds = spec.density_bounds();
    let (lo, hi) = (to_f64(&bounds.min), to_f64(&bounds.max));
    out.write("density.pgm", &output::pgm(&raster, lo, hi))?;
    out.write("density.csv", &output::raster_csv(&raster))?;
    out.write_json(
        "density.json",
        &json!({
            "resolution": m,
            "depth": cfg.depth(),
            "mode": mode,
            "rows": "row 0 is the top edge y = 1",
            "maxval": PGM_MAXVAL,
            "mapping": "gray = round((value - min) / (max - min) * maxval)",
            "min": exact(&bounds.min),
            "max": exact(&bounds.max),
            "total": exact(&raster.total),
        }),
    )?;
    println!("raster {m} x {m}, total mass {}", fraction_string(&raster.total));
    if mode == RasterMode::CellAverage && raster.total != int(1) {
        return Err(CliError::invariant(
            "cell averages do not carry total mass 1",
            json!({ "total": fraction_string(&raster.total) }),
        ));
    }
    Ok(())
}

pub fn verify(cfg: &RunConfig, out: &Outputs) -> Result<(), CliError> {
    let report = spec(cfg)?.verify_constraints(cfg.depth())?;
    out.write_json("verify.json", &report)?;
    println!("{} units checked, {} violations", report.units_checked, report.violation_count);
    if !report.passed() {
        return Err(CliError::invariant(
            format!("{} mass constraint violations", report.violation_count),
            json!({ "violation_count": report.violation_count }),
        ));
    }
    Ok(())
}

pub fn bounds(cfg: &RunConfig, out: &Outputs) -> Result<(), CliError> {
    let delta = to_f64(&cfg.params.delta);
    let gamma = to_f64(&cfg.params.gamma);
    let k = cfg.positive_k(DEFAULT_K)?;
    let witness = find_witness(delta, gamma, k, SearchLimits::default())?;
    let contradiction = witness.as_ref().is_some_and(|w| w.contradiction);
    out.write_json(
        "witness.json",
        &json!({
            "delta": fraction_string(&cfg.params.delta),
            "gamma": fraction_string(&cfg.params.gamma),
            "K": k,
            "contradiction": contradiction,
            "witness": witness,
        }),
    )?;
    match &witness {
        Some(w) => println!("K = {k}: contradiction at alpha = {:e}, N0 = {}", w.alpha, w.N0),
        None => println!("K = {k}: no witness found"),
    }

    let grid = cfg.n_grid.clone().unwrap_or(DEFAULT_N_GRID.to_vec());
    let mut csv = Csv::new(&["N", "usable_N", "K_star"]);
    for n in grid {
        let k_star = excluded_stretch(delta, gamma, n)?;
        csv.row([n.to_string(), usable_squares(n).to_string(), decimal_string(k_star)]);
    }
    out.write("kstar.csv", &csv.finish())?;
    println!("stretch ceiling over the alpha grid: {}", decimal_string(stretch_ceiling(delta, gamma)));

    if cfg.depth() > 1 {
        let mut csv = Csv::new(&["birth", "squares", "K_star"]);
        for level in coverage_by_birth(delta, gamma, &cfg.params.branching, cfg.depth())? {
            csv.row([level.birth.to_string(), level.squares.to_string(), decimal_string(level.excluded_stretch)]);
        }
        out.write("coverage.csv", &csv.finish())?;
    }
    Ok(())
}

pub fn probe(cfg: &RunConfig, out: &Outputs) -> Result<(), CliError> {
    let m = cfg.resolution.unwrap_or(DEFAULT_RESOLUTION);
    let spec = spec(cfg)?;
    let mut csv = Csv::new(&["depth", "resolution", "k_emp", "max_stretch", "min_stretch", "pairs", "mass_error", "resolved"]);
    let mut deepest = None;
    for depth in 1..=cfg.depth() {
        let masses = CellMasses::from_spec(&spec, depth, m)?;
        let kr = KrTransport::new(&masses)?;
        let audit = kr.mass_audit(&masses);
        let warnings = resolution_warnings(&spec, depth, m);
        for w in &warnings {
            println!("warning: depth {depth}: {w}");
        }
        let map = kr.grid_map(Direction::Forward);
        let report = empirical_bilipschitz(&map, DISTORTION_PAIRS, cfg.seed);
        csv.row([
            depth.to_string(),
            m.to_string(),
            decimal_string(report.k_emp),
            decimal_string(report.max_stretch),
            decimal_string(report.min_stretch),
            report.pairs_checked.to_string(),
            decimal_string(audit.total_error),
            warnings.is_empty().to_string(),
        ]);
        println!("depth {depth}: K_emp = {}", decimal_string(report.k_emp));
        out.write(&format!("map_depth{depth}.csv"), &map.to_csv())?;
        deepest = Some((map, report.k_emp));
    }
    out.write("distortion.csv", &csv.finish())?;

    let Some((map, k_emp)) = deepest else { return Ok(()) };
    if cfg.depth() < 2 {
        println!("replay skipped: the covered edge needs depth 2 or more");
        return Ok(());
    }
    let k = cfg.k.unwrap_or(k_emp.max(1.0));
    let alpha = cfg.alpha.unwrap_or(DEFAULT_ALPHA);
    let diagnostics = proof_replay(&map, &spec, EdgeSelection::root_bottom(&spec)?, k, alpha)?;
    out.write("replay.csv", &diagnostics.to_string())?;
    out.write_json("replay.json", &diagnostics)?;
    println!(
        "replay: {} of {} blocks nice, Omega > 0: {}, contradiction: {}",
        diagnostics.nice.count(),
        diagnostics.nice.blocks,
        diagnostics.omega_positive(),
        diagnostics.contradiction()
    );
    Ok(())
}

pub fn net(cfg: &RunConfig, out: &Outputs) -> Result<(), CliError> {
    let k = cfg.scale.unwrap_or(DEFAULT_SCALE);
    let net = generate_net(&spec(cfg)?, cfg.depth(), k)?;
    let min_sq = net.min_cell_distance_sq();
    let separated = min_sq.is_none_or(|d| d >= 1);
    out.write("net.csv", &net.to_csv())?;
    out.write_json("net.json", &net)?;
    out.write_json(
        "stats.json",
        &json!({
            "scale": net.scale,
            "grid": net.grid,
            "count": net.points.len(),
            "separation": net.separation,
            "covering_radius": net.covering_radius,
            "min_cell_distance_sq": min_sq,
            "separated_at_grid_spacing": separated,
        }),
    )?;
    println!(
        "{} points on a {} grid: separation {}, covering radius {}",
        net.points.len(),
        net.grid,
        decimal_string(net.separation),
        decimal_string(net.covering_radius)
    );
    if !separated {
        return Err(CliError::invariant("two points share a grid cell", json!({ "min_cell_distance_sq": min_sq })));
    }
    Ok(())
}
