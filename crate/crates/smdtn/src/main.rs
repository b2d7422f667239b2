//! `smdtn`: ingest subway lines, run one scenario, or run the full
//! router x radio batch matrix.

use clap::{Parser, Subcommand};
use smdtn::config::{load_config, RadioChoice, RouterChoice, ScenarioConfig};
use smdtn::engine;
use smdtn::error::{Result, SimError};
use smdtn::geo::{build_graph, parse_lines, RouteGraph};
use smdtn::metrics::ScenarioReport;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "smdtn",
    version,
    about = "Subway DTN alert-dissemination simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a subway-lines GeoJSON file and write the routable graph.
    Ingest {
        /// Input GeoJSON (FeatureCollection of LineString / MultiLineString).
        input: PathBuf,
        /// Output graph file.
        #[arg(short, long)]
        output: PathBuf,
        /// Station spacing along each route, meters.
        #[arg(long, default_value_t = 800.0)]
        spacing: f64,
        /// Property holding the route name.
        #[arg(long, default_value = "name")]
        name_key: String,
        /// Every k-th station is an express stop (termini always are).
        #[arg(long, default_value_t = 3)]
        express_every: usize,
    },
    /// Run one scenario and write its report files.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run {epidemic,maxprop} x {bluetooth,wifi} across seeds; write matrix.csv.
    Batch {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        /// Comma-separated seed list.
        #[arg(long, default_value = "1,2,3,4,5")]
        seeds: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn cmd_ingest(
    input: &Path,
    output: &Path,
    spacing: f64,
    name_key: &str,
    express_every: usize,
) -> Result<()> {
    let bytes = std::fs::read(input).map_err(|e| SimError::io(input.display().to_string(), e))?;
    let routes = parse_lines(&bytes, name_key)?;
    let graph = build_graph(&routes, spacing, express_every, None)?;
    graph.save(output)?;
    println!(
        "ingested {} routes, {} stations -> {}",
        graph.routes.len(),
        graph.station_count(),
        output.display()
    );
    Ok(())
}

/// The scenario config owns station placement: when the loaded graph was
/// built with different synthesis parameters, rebuild its stations. Graphs
/// carrying explicit station overrides (no recorded parameters) are kept.
fn apply_station_config(graph: &mut RouteGraph, cfg: &ScenarioConfig) {
    if let Some((spacing, k)) = graph.station_params {
        if spacing != cfg.station_spacing_m || k != cfg.express_every_k {
            graph.resynthesize_stations(cfg.station_spacing_m, cfg.express_every_k);
        }
    }
}

fn cmd_run(config: &Path, graph: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg = load_config(config, ScenarioConfig::default())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let mut graph = RouteGraph::load(graph)?;
    apply_station_config(&mut graph, &cfg);
    let report = engine::run(&cfg, &graph)?;
    report.emit(out)?;
    print!("{}", report.summary_text());
    Ok(())
}

/// The four comparison cells in fixed output order.
const CELLS: [(RouterChoice, RadioChoice, &str); 4] = [
    (RouterChoice::Epidemic, RadioChoice::Bluetooth, "EP-BT"),
    (RouterChoice::MaxProp, RadioChoice::Bluetooth, "MP-BT"),
    (RouterChoice::Epidemic, RadioChoice::Wifi, "EP-WIFI"),
    (RouterChoice::MaxProp, RadioChoice::Wifi, "MP-WIFI"),
];

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn csv_num(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |x| x.to_string())
}

fn cmd_batch(config: &Path, graph: &Path, seeds: &str, out: &Path) -> Result<()> {
    let base = load_config(config, ScenarioConfig::default())?;
    let mut graph = RouteGraph::load(graph)?;
    apply_station_config(&mut graph, &base);
    let seeds: Vec<u64> = seeds
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| SimError::InvalidConfig(format!("bad seed `{s}` in --seeds")))
        })
        .collect::<Result<_>>()?;
    if seeds.is_empty() {
        return Err(SimError::InvalidConfig(
            "--seeds must list at least one seed".into(),
        ));
    }

    // cells x seeds as independent runs; results land in a fixed grid so the
    // output does not depend on completion order
    let mut results: Vec<Vec<Option<Result<ScenarioReport>>>> = (0..CELLS.len())
        .map(|_| (0..seeds.len()).map(|_| None).collect())
        .collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (ci, (router, radio, _)) in CELLS.iter().enumerate() {
            for (si, &seed) in seeds.iter().enumerate() {
                let mut cfg = base.clone();
                cfg.router = *router;
                cfg.radio = *radio;
                cfg.seed = seed;
                let graph = &graph;
                handles.push((ci, si, scope.spawn(move || engine::run(&cfg, graph))));
            }
        }
        for (ci, si, h) in handles {
            results[ci][si] = Some(h.join().expect("run thread panicked"));
        }
    });

    let mut csv =
        String::from("scenario,seeds,delivery_rate,latency_avg_sec,overhead_ratio,avg_hopcount\n");
    for (ci, (_, _, label)) in CELLS.iter().enumerate() {
        let mut rates = Vec::new();
        let mut latencies = Vec::new();
        let mut overheads = Vec::new();
        let mut hopcounts = Vec::new();
        for (si, slot) in results[ci].iter_mut().enumerate() {
            let report = slot.take().expect("grid filled").inspect_err(|_| {
                eprintln!("cell {label} seed {} failed", seeds[si]);
            })?;
            rates.extend(report.delivery_rate);
            latencies.extend(report.latency_avg);
            overheads.extend(report.overhead_ratio);
            hopcounts.extend(report.avg_hopcount_delivered);
            println!(
                "{label} seed {}: delivery {}, completed hops {}",
                seeds[si],
                csv_num(report.delivery_rate),
                report.hops_completed
            );
        }
        csv.push_str(&format!(
            "{label},{},{},{},{},{}\n",
            seeds.len(),
            csv_num(mean(&rates)),
            csv_num(mean(&latencies)),
            csv_num(mean(&overheads)),
            csv_num(mean(&hopcounts)),
        ));
    }
    std::fs::create_dir_all(out).map_err(|e| SimError::io(out.display().to_string(), e))?;
    let path = out.join("matrix.csv");
    std::fs::write(&path, csv).map_err(|e| SimError::io(path.display().to_string(), e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest {
            input,
            output,
            spacing,
            name_key,
            express_every,
        } => cmd_ingest(&input, &output, spacing, &name_key, express_every),
        Command::Run {
            config,
            graph,
            seed,
            out,
        } => cmd_run(&config, &graph, seed, &out),
        Command::Batch {
            config,
            graph,
            seeds,
            out,
        } => cmd_batch(&config, &graph, &seeds, &out),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        let mut cause = std::error::Error::source(&e);
        while let Some(c) = cause {
            eprintln!("  caused by: {c}");
            cause = c.source();
        }
        std::process::exit(e.exit_code());
    }
}
