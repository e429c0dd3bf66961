//! One handler per subcommand. Every handler writes its data files into the
//! prepared run directory and returns the list of relative output paths for
//! the manifest.

use crate::args::*;
use crate::output::{create_run_dir, g17, trace_row, write_csv, TRACE_HEADER};
use entpot::{
    beta_tilde_grid, energy, energy_prediction, hysteresis, overlap,
    run_chain, BitString, ColoredState, CouplingContext, DysonParams, Error as CoreError,
    MCConfig, ReplicaPair, Schedule,
};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Numerical(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Usage(_) => 1,
            CmdError::Numerical(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CmdError::Usage(m) | CmdError::Numerical(m) => m,
        }
    }
}

impl From<CoreError> for CmdError {
    fn from(e: CoreError) -> Self {
        if e.is_numerical() {
            CmdError::Numerical(e.to_string())
        } else {
            CmdError::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Usage(format!("i/o: {e}"))
    }
}

pub type CmdResult = Result<Vec<String>, CmdError>;

fn usage(msg: impl Into<String>) -> CmdError {
    CmdError::Usage(msg.into())
}

pub fn coupling_dump(args: &CouplingDumpArgs, dir: &Path) -> CmdResult {
    let ctx = CouplingContext::new(args.n)?;
    let n = args.n;
    let mut rows = Vec::new();
    for s in 0..=ctx.n_a() {
        for t in 0..=(n - ctx.n_a()) {
            let v = ctx.g_hat(s, t)?;
            rows.push(format!(
                "ghat,{s},{t},{},{},{}",
                v.numer(),
                v.denom(),
                g17(*v.numer() as f64 / *v.denom() as f64)
            ));
        }
    }
    let k0 = BitString::zero(n)?;
    for l in 0..ctx.dim() as u32 {
        let bl = BitString::new(l, n)?;
        let d = ctx.delta(k0, bl, k0, bl)?;
        let dt = ctx.delta_tilde(k0, bl, k0, bl)?;
        rows.push(format!(
            "delta_diag,0,{l},{},{},{}",
            d.numer(),
            d.denom(),
            g17(*d.numer() as f64 / *d.denom() as f64)
        ));
        rows.push(format!(
            "delta_tilde_diag,0,{l},{},{},{}",
            dt.numer(),
            dt.denom(),
            g17(*dt.numer() as f64 / *dt.denom() as f64)
        ));
    }
    write_csv(&dir.join("data.csv"), "record,i,j,numerator,denominator,value", &rows)?;
    println!(
        "n = {n}: {} bipartitions, common denominator {}, diagonal row sum {}",
        ctx.bipartitions().len(),
        2 * entpot::binomial(n as i64, (n / 2) as i64),
        ctx.delta_tilde_row_sum()
    );
    Ok(vec!["data.csv".into()])
}

fn load_state(path: &Path) -> Result<ColoredState, CmdError> {
    let file = std::fs::File::open(path)?;
    let state = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => ColoredState::from_json(file)?,
        Some("csv") => ColoredState::from_csv(file)?,
        _ => return Err(usage("state files must end in .json or .csv")),
    };
    Ok(state)
}

pub fn energy_cmd(args: &EnergyArgs, dir: &Path, seed: u64) -> CmdResult {
    let mut outputs = vec!["data.csv".to_string()];
    let state = match &args.state {
        Some(path) => load_state(path)?,
        None => {
            let n = args.n.ok_or_else(|| usage("--n is required without --state"))?;
            let nc = args.nc.ok_or_else(|| usage("--nc is required without --state"))?;
            let s = ColoredState::random(n, nc, seed)?;
            std::fs::create_dir_all(dir.join("states"))?;
            let f = std::fs::File::create(dir.join("states/state.json"))?;
            s.to_json(std::io::BufWriter::new(f))?;
            outputs.push("states/state.json".into());
            s
        }
    };
    let ctx = CouplingContext::new(state.n())?;
    let report = energy(&state, &ctx)?;
    let mut rows: Vec<String> = report
        .per_bipartition
        .iter()
        .map(|(bp, v)| {
            let idx: Vec<String> = bp.indices().iter().map(|i| i.to_string()).collect();
            format!("purity,{},{}", idx.join("|"), g17(*v))
        })
        .collect();
    rows.push(format!("total,,{}", g17(report.total)));
    rows.push(format!("lower_bound,,{}", g17(report.lower_bound)));
    write_csv(&dir.join("data.csv"), "kind,bipartition,value", &rows)?;
    println!(
        "H = {:.12} over {} bipartitions (lower bound {:.12})",
        report.total,
        report.per_bipartition.len(),
        report.lower_bound
    );
    Ok(outputs)
}

pub fn cumulants_cmd(args: &CumulantsArgs, dir: &Path, seed: u64) -> CmdResult {
    let n = args.n;
    let nc = args.nc;
    let max_order = args.order;
    if max_order == 0 || max_order > 5 {
        return Err(usage("--order must lie in 1..=5"));
    }
    let all = !(args.exact || args.cactus || args.mc);
    let want_exact = args.exact || all;
    let want_cactus = args.cactus || all;
    let want_mc = args.mc || all;

    let ctx = CouplingContext::new(n)?;
    let mut exact: Vec<Option<f64>> = vec![None; max_order];
    if want_exact {
        for order in 1..=max_order {
            let value = if nc == 2 && order <= 3 {
                match entpot::moments::exact_cumulant_f64(n, order) {
                    Ok(v) => Some(v),
                    Err(CoreError::SizeGuard(msg)) => {
                        if args.exact {
                            return Err(usage(msg));
                        }
                        None
                    }
                    Err(e) => return Err(e.into()),
                }
            } else if order == 1 {
                match entpot::moments::first_moment_colored_f64(n, nc) {
                    Ok(v) => Some(v),
                    Err(CoreError::SizeGuard(msg)) => {
                        if args.exact {
                            return Err(usage(msg));
                        }
                        None
                    }
                    Err(e) => return Err(e.into()),
                }
            } else if args.exact {
                return Err(usage(
                    "exact cumulants beyond order 1 are implemented for n_colors = 2 and order <= 3",
                ));
            } else {
                None
            };
            exact[order - 1] = value;
        }
    }
    let mut cactus: Vec<Option<f64>> = vec![None; max_order];
    if want_cactus {
        for order in 1..=max_order.min(3) {
            cactus[order - 1] = Some(entpot::cactus_cumulant(n, order)?);
        }
        if args.cactus && max_order > 3 {
            return Err(usage("cactus formulas exist for orders 1..=3"));
        }
    }
    let mut mc: Vec<Option<(f64, f64)>> = vec![None; max_order];
    if want_mc {
        let reports = entpot::mc_cumulants(n, nc, max_order, args.samples, seed)?;
        for r in reports {
            mc[r.order - 1] = r.mc_estimate;
        }
    }

    let opt = |v: Option<f64>| v.map(g17).unwrap_or_default();
    let rows: Vec<String> = (1..=max_order)
        .map(|order| {
            let (m, s) = mc[order - 1].map(|(a, b)| (Some(a), Some(b))).unwrap_or((None, None));
            format!(
                "{order},{},{},{},{},{},{}",
                opt(exact[order - 1]),
                opt(cactus[order - 1]),
                opt(m),
                opt(s),
                ctx.dim(),
                ctx.n_part_a()
            )
        })
        .collect();
    write_csv(&dir.join("data.csv"), "order,exact,cactus,mc_mean,mc_stderr,N,N_A", &rows)?;
    for order in 1..=max_order {
        let mut line = format!("order {order}:");
        if let Some(e) = exact[order - 1] {
            line += &format!(" exact = {e:.12}");
        }
        if let Some(c) = cactus[order - 1] {
            line += &format!(" cactus = {c:.12}");
        }
        if let Some((m, s)) = mc[order - 1] {
            line += &format!(" mc = {m:.6e} +- {s:.1e}");
        }
        println!("{line}");
    }
    Ok(vec!["data.csv".into()])
}

fn resolve_beta(n: usize, beta: Option<f64>, beta_tilde: Option<f64>) -> Result<f64, CmdError> {
    match (beta, beta_tilde) {
        (Some(b), None) => Ok(b),
        (None, Some(bt)) => Ok(bt * entpot::beta0(n)?),
        (Some(_), Some(_)) => Err(usage("give either --beta or --beta-tilde, not both")),
        (None, None) => Err(usage("one of --beta or --beta-tilde is required")),
    }
}

fn mc_config(n: usize, nc: usize, seed: u64, theta_max: f64, adapt: bool, measure_every: usize) -> MCConfig {
    let mut config = MCConfig::new(n, nc, seed);
    config.theta_max = theta_max;
    config.adapt = adapt;
    config.steps_per_measurement = measure_every;
    config
}

pub fn sample_cmd(args: &SampleArgs, dir: &Path, seed: u64) -> CmdResult {
    let beta = resolve_beta(args.n, args.beta, args.beta_tilde)?;
    let ctx = Arc::new(CouplingContext::new(args.n)?);
    let config = mc_config(args.n, args.nc, seed, args.theta_max, !args.no_adapt, args.measure_every);
    let mut chain = entpot::Chain::new(config, Arc::clone(&ctx), None)?;
    let record = chain.run(&Schedule::fixed(beta, args.sweeps))?;
    let rescaler = energy_prediction(args.n, args.nc)?;
    let rows: Vec<String> =
        record.legs.iter().enumerate().map(|(i, l)| trace_row(i, l, rescaler)).collect();
    write_csv(&dir.join("data.csv"), TRACE_HEADER, &rows)?;
    std::fs::create_dir_all(dir.join("states"))?;
    let f = std::fs::File::create(dir.join("states/final.json"))?;
    chain.state().to_json(std::io::BufWriter::new(f))?;
    let leg = &record.legs[0];
    println!(
        "beta = {beta:.6} (beta_tilde = {:.4}): <H> = {:.8} +- {:.2e}, acceptance {:.3}",
        leg.beta_tilde, leg.mean_h, leg.stderr_h, leg.acceptance
    );
    Ok(vec!["data.csv".into(), "states/final.json".into()])
}

pub fn sweep_cmd(args: &SweepArgs, dir: &Path, seed: u64) -> CmdResult {
    if args.n < 3 || args.n > 7 {
        return Err(usage("sweep supports n in 3..=7"));
    }
    if args.nc.is_empty() {
        return Err(usage("--nc needs at least one color count"));
    }
    if args.nc.iter().any(|&c| !(2..=20).contains(&c)) {
        return Err(usage("sweep supports N_c in 2..=20"));
    }
    let tilde_grid =
        beta_tilde_grid(args.fine_step, args.fine_max, args.coarse_step, args.coarse_max);
    let beta0 = entpot::beta0(args.n)?;
    let dim = 1usize << args.n;
    let proposals: f64 = args
        .nc
        .iter()
        .map(|&c| tilde_grid.len() as f64 * args.sweeps as f64 * (dim * c) as f64)
        .sum();
    if proposals > 5e9 {
        return Err(usage(format!(
            "sweep would run ~{proposals:.1e} proposals; shrink the grid, sweeps, or color list"
        )));
    }
    let ctx = Arc::new(CouplingContext::new(args.n)?);
    let tasks: Vec<(usize, usize, f64)> = args
        .nc
        .iter()
        .enumerate()
        .flat_map(|(ci, _)| {
            tilde_grid
                .iter()
                .enumerate()
                .map(move |(gi, &bt)| (ci, gi, bt))
                .collect::<Vec<_>>()
        })
        .collect();
    let results: Vec<String> = tasks
        .par_iter()
        .map(|&(ci, gi, bt)| {
            let nc = args.nc[ci];
            let task_seed = entpot::derive_seed(seed, (ci * tilde_grid.len() + gi) as u64);
            let config = mc_config(args.n, nc, task_seed, 1.0, true, 1);
            let record = run_chain(
                config,
                Arc::clone(&ctx),
                &Schedule::fixed(bt * beta0, args.sweeps),
                None,
            )
            .expect("validated configuration");
            let rescaler = energy_prediction(args.n, nc).expect("validated n");
            format!("{nc},{}", trace_row(gi, &record.legs[0], rescaler))
        })
        .collect();
    write_csv(&dir.join("data.csv"), &format!("n_colors,{TRACE_HEADER}"), &results)?;
    println!(
        "swept n = {}, N_c in {:?}: {} grid points each, {} sweeps per point",
        args.n,
        args.nc,
        tilde_grid.len(),
        args.sweeps
    );
    Ok(vec!["data.csv".into()])
}

pub fn anneal_cmd(args: &AnnealArgs, dir: &Path, seed: u64) -> CmdResult {
    let beta0 = entpot::beta0(args.n)?;
    let mut tilde_grid =
        beta_tilde_grid(args.fine_step, args.fine_max, args.coarse_step, args.coarse_max);
    if args.down {
        tilde_grid.reverse();
    }
    let betas: Vec<f64> = tilde_grid.iter().map(|bt| bt * beta0).collect();
    let config = mc_config(args.n, args.nc, seed, 1.0, true, 1);
    let ctx = Arc::new(CouplingContext::new(args.n)?);
    let record = run_chain(config, ctx, &Schedule::anneal(&betas, args.sweeps_per_leg), None)?;
    let rescaler = energy_prediction(args.n, args.nc)?;
    let rows: Vec<String> =
        record.legs.iter().enumerate().map(|(i, l)| trace_row(i, l, rescaler)).collect();
    write_csv(&dir.join("data.csv"), TRACE_HEADER, &rows)?;
    println!(
        "annealed {} legs ({} -> {} in beta_tilde), {} sweeps each",
        record.legs.len(),
        tilde_grid.first().unwrap(),
        tilde_grid.last().unwrap(),
        args.sweeps_per_leg
    );
    Ok(vec!["data.csv".into()])
}

pub fn hysteresis_cmd(args: &HysteresisArgs, dir: &Path, seed: u64) -> CmdResult {
    let config = mc_config(args.n, args.nc, seed, 1.0, true, 1);
    let ctx = Arc::new(CouplingContext::new(args.n)?);
    let (cooling, heating) =
        hysteresis(config, ctx, args.beta_max, args.delta_beta, args.steps_per_beta)?;
    let rescaler = energy_prediction(args.n, args.nc)?;
    let mut rows = Vec::new();
    for (i, l) in heating.legs.iter().enumerate() {
        rows.push(format!("heating,{}", trace_row(i, l, rescaler)));
    }
    for (i, l) in cooling.legs.iter().enumerate() {
        rows.push(format!("cooling,{}", trace_row(i, l, rescaler)));
    }
    write_csv(&dir.join("data.csv"), &format!("branch,{TRACE_HEADER}"), &rows)?;
    let mut worst: f64 = 0.0;
    for (h, c) in heating.legs.iter().zip(cooling.legs.iter().rev()) {
        let sigma = (h.stderr_h.powi(2) + c.stderr_h.powi(2)).sqrt();
        if sigma > 0.0 {
            worst = worst.max((h.mean_h - c.mean_h).abs() / sigma);
        }
    }
    println!(
        "hysteresis loop over {} beta values: max branch deviation {:.2} sigma",
        heating.legs.len(),
        worst
    );
    Ok(vec!["data.csv".into()])
}

pub fn overlap_cmd(args: &OverlapArgs, dir: &Path, seed: u64) -> CmdResult {
    let beta0 = entpot::beta0(args.n)?;
    let tilde_grid =
        beta_tilde_grid(args.fine_step, args.fine_max, args.coarse_step, args.coarse_max);
    let burn_in = args.burn_in.unwrap_or(10 * args.measurements * args.cadence);
    let config = mc_config(args.n, args.nc, seed, 1.0, true, 1);
    let ctx = Arc::new(CouplingContext::new(args.n)?);
    let mut pair = ReplicaPair::new(config, ctx)?;
    let mut rows = Vec::new();
    for &bt in &tilde_grid {
        let beta = bt * beta0;
        pair.equilibrate(beta, burn_in);
        let (q2, se) = overlap(&mut pair, beta, args.measurements, args.cadence)?;
        rows.push(format!("{},{},{},{}", g17(beta), g17(bt), g17(q2), g17(se)));
        println!("beta_tilde = {bt:.3}: <q^2> N Nc = {q2:.4} +- {se:.4}");
    }
    write_csv(&dir.join("data.csv"), "beta,beta_tilde,q2_rescaled,stderr", &rows)?;
    Ok(vec!["data.csv".into()])
}

pub fn minimize_cmd(args: &MinimizeArgs, dir: &Path, seed: u64) -> CmdResult {
    let params = entpot::MinimizeParams {
        sweeps_per_leg: args.sweeps_per_leg,
        ..Default::default()
    };
    let (e0, state) = entpot::sampler::find_minimum_with(args.n, args.nc, args.restarts, seed, &params)?;
    let rescaled = 2.0 * e0 / args.nc as f64;
    let floor = 1.0 / (1usize << (args.n / 2)) as f64;
    let rows = vec![format!(
        "{},{},{},{},{},{}",
        args.n,
        args.nc,
        args.restarts,
        g17(e0),
        g17(rescaled),
        g17(floor)
    )];
    write_csv(
        &dir.join("data.csv"),
        "n,n_colors,restarts,e0,rescaled_e0,rescaled_lower_bound",
        &rows,
    )?;
    std::fs::create_dir_all(dir.join("states"))?;
    let f = std::fs::File::create(dir.join("states/best.json"))?;
    state.to_json(std::io::BufWriter::new(f))?;
    println!("E0 = {e0:.10}, rescaled E0 = {rescaled:.4} (floor {floor:.4})");
    Ok(vec!["data.csv".into(), "states/best.json".into()])
}

pub fn scan_frustration_cmd(args: &ScanFrustrationArgs, dir: &Path, seed: u64) -> CmdResult {
    if args.nc_min > args.nc_max {
        return Err(usage("--nc-min must not exceed --nc-max"));
    }
    let points = entpot::frustration_scan(args.n, args.nc_min..=args.nc_max, args.restarts, seed)?;
    let rows: Vec<String> = points
        .iter()
        .map(|p| {
            format!(
                "{},{},{},{}",
                p.n_colors,
                g17(p.e0),
                g17(p.rescaled),
                g17(p.rescaled_lower_bound)
            )
        })
        .collect();
    write_csv(&dir.join("data.csv"), "n_colors,e0,rescaled_e0,rescaled_lower_bound", &rows)?;
    for p in &points {
        println!("N_c = {}: rescaled E0 = {:.4}", p.n_colors, p.rescaled);
    }
    Ok(vec!["data.csv".into()])
}

pub fn dyson_cmd(args: &DysonArgs, dir: &Path) -> CmdResult {
    let params = DysonParams { tol: args.tol, max_iter: args.max_iter, damping: args.damping };
    let sol = entpot::dyson_solve(args.n, args.beta_tilde, params)?;
    let rows: Vec<String> = sol
        .g
        .iter()
        .enumerate()
        .map(|(k, gk)| {
            format!("{k},{},{},{},{}", g17(*gk), g17(sol.lambda), g17(sol.residual), g17(sol.beta_tilde))
        })
        .collect();
    write_csv(&dir.join("data.csv"), "k,g_k,lambda,residual,beta_tilde", &rows)?;
    println!(
        "lambda = {:.12} (1 - beta_tilde = {:.12}), residual {:.2e}, symmetric = {}",
        sol.lambda,
        1.0 - sol.beta_tilde,
        sol.residual,
        sol.symmetric
    );
    Ok(vec!["data.csv".into()])
}

pub struct PreparedRun {
    pub dir: PathBuf,
    pub outputs: Vec<String>,
}

/// Create the run directory and execute the command inside it.
pub fn execute_in_dir(
    command: &CommandKind,
    out_root: &Path,
    seed: u64,
) -> Result<PreparedRun, CmdError> {
    let dir = create_run_dir(out_root, command.name())?;
    let outputs = match command {
        CommandKind::Coupling(a) => coupling_dump(a, &dir)?,
        CommandKind::Energy(a) => energy_cmd(a, &dir, seed)?,
        CommandKind::Cumulants(a) => cumulants_cmd(a, &dir, seed)?,
        CommandKind::Sample(a) => sample_cmd(a, &dir, seed)?,
        CommandKind::Sweep(a) => sweep_cmd(a, &dir, seed)?,
        CommandKind::Anneal(a) => anneal_cmd(a, &dir, seed)?,
        CommandKind::Hysteresis(a) => hysteresis_cmd(a, &dir, seed)?,
        CommandKind::Overlap(a) => overlap_cmd(a, &dir, seed)?,
        CommandKind::Minimize(a) => minimize_cmd(a, &dir, seed)?,
        CommandKind::ScanFrustration(a) => scan_frustration_cmd(a, &dir, seed)?,
        CommandKind::Dyson(a) => dyson_cmd(a, &dir)?,
    };
    Ok(PreparedRun { dir, outputs })
}
