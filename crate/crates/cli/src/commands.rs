use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use spectraclass::classify::{classify_batch, write_batch_csv, HardenOptions, SpectrumSource};
use spectraclass::pixmap::{render_labels, render_membership, Palette};
use spectraclass::rulebase::{builtin_basalt, parse_rulebase, parse_rulebase_unchecked, validate, RuleBase};
use spectraclass::spatial::{read_grid_csv, Topology};
use spectraclass::stats::{build_statdb, class_vs_ensemble_report, render_histogram, write_report_csv, MeanMode};
use spectraclass::{fmt::sig6, Classifier, Label, Spectrum};

use crate::args::{ClassifyArgs, GroupBy, MapArgs, MeanArg, RuleArgs, StatsArgs, TopologyArg, ValidateArgs};
use crate::inputs;

pub const RULES_ENV: &str = "SPECTRACLASS_RULES";
pub const BUILTIN_BASALT: &str = "builtin:basalt";

pub const EXIT_OK: u8 = 0;
pub const EXIT_FATAL: u8 = 1;
pub const EXIT_PARTIAL: u8 = 2;

/// A fatal command failure; the message goes to stderr and the process
/// exits with status 1.
#[derive(Debug)]
pub struct Fatal(pub String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

type CmdResult = Result<u8, Fatal>;

fn rules_source(args: &RuleArgs) -> String {
    args.rules
        .clone()
        .or_else(|| std::env::var(RULES_ENV).ok().filter(|s| !s.is_empty()))
        .unwrap_or_else(|| BUILTIN_BASALT.to_string())
}

fn read_rules_text(source: &str) -> Result<Option<String>, Fatal> {
    if source == BUILTIN_BASALT {
        return Ok(None);
    }
    fs::read_to_string(source)
        .map(Some)
        .map_err(|e| Fatal(format!("cannot read rule base {source}: {e}")))
}

/// Loads the rule base and applies command-line overrides.
fn load_rules(args: &RuleArgs) -> Result<RuleBase, Fatal> {
    let source = rules_source(args);
    let mut rb = match read_rules_text(&source)? {
        None => builtin_basalt(),
        Some(text) => parse_rulebase(&text).map_err(|e| Fatal(format!("{source}: {e}")))?,
    };
    if let Some(eps) = args.epsilon {
        rb.options.epsilon = eps;
    }
    if let Some(nu) = args.nu {
        rb.options.nu = nu;
    }
    if let Some(d) = validate(&rb).into_iter().find(|d| d.is_error()) {
        return Err(Fatal(format!("{source}: {d}")));
    }
    Ok(rb)
}

fn create_out(path: &Path) -> Result<BufWriter<File>, Fatal> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Fatal(format!("cannot create {}: {e}", path.display())))
}

pub fn classify(args: &ClassifyArgs) -> CmdResult {
    if args.workers == 0 {
        return Err(Fatal("--workers must be at least 1".into()));
    }
    let rb = load_rules(&args.rules)?;
    let files = inputs::expand(&args.inputs)?;
    if files.is_empty() {
        return Err(Fatal("no input spectra found".into()));
    }
    let sources: Vec<SpectrumSource> = files.into_iter().map(SpectrumSource::File).collect();
    let opts = HardenOptions {
        nu: rb.options.nu,
        ambiguity_threshold: args.ambiguity,
    };
    let records = classify_batch(&sources, &rb, args.workers, &opts)?;

    let codes = rb.class_codes();
    match &args.out {
        Some(path) => {
            let mut w = create_out(path)?;
            write_batch_csv(&mut w, &codes, &records)?;
            w.flush()?;
        }
        None => write_batch_csv(io::stdout().lock(), &codes, &records)?,
    }

    let mut counts: Vec<(String, usize)> = codes.iter().map(|c| (c.to_string(), 0)).collect();
    counts.push(("UNK".into(), 0));
    let mut errors = 0;
    for rec in &records {
        match &rec.outcome {
            Ok(c) => {
                let label = c.classification.label.as_str();
                if let Some(slot) = counts.iter_mut().find(|(k, _)| k == label) {
                    slot.1 += 1;
                }
            }
            Err(msg) => {
                errors += 1;
                eprintln!("error: {}: {msg}", rec.source);
            }
        }
    }
    let summary: Vec<String> = counts.iter().map(|(k, n)| format!("{k} {n}")).collect();
    eprintln!(
        "classified {} of {} spectra: {}; errors {errors}",
        records.len() - errors,
        records.len(),
        summary.join(", ")
    );
    Ok(if errors > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

fn group_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn stats(args: &StatsArgs) -> CmdResult {
    if args.workers == 0 {
        return Err(Fatal("--workers must be at least 1".into()));
    }
    let rb = load_rules(&args.rules)?;
    let classifier = Classifier::new(&rb)?;
    let eps = rb.options.epsilon;
    let mut failures = 0usize;

    // (path, group) pairs in deterministic order
    let mut items: Vec<(PathBuf, Option<String>)> = Vec::new();
    for arg in &args.inputs {
        let path = Path::new(arg);
        if path.is_dir() {
            let files = inputs::walk(path)?;
            if files.is_empty() && args.group_by == GroupBy::Directory {
                return Err(Fatal(format!("group {} is empty", group_name(path))));
            }
            let g = group_name(path);
            items.extend(files.into_iter().map(|f| (f, Some(g.clone()))));
        } else {
            for f in inputs::expand(std::slice::from_ref(arg))? {
                let g = f.parent().map(group_name).unwrap_or_else(|| ".".into());
                items.push((f, Some(g)));
            }
        }
    }
    if items.is_empty() {
        return Err(Fatal("no input spectra found".into()));
    }

    let mut ensemble: Vec<Spectrum> = Vec::new();
    let mut groups: BTreeMap<String, Vec<Spectrum>> = BTreeMap::new();
    let mut group_order: Vec<String> = Vec::new();
    let sources: Vec<SpectrumSource> = items.iter().map(|(p, _)| SpectrumSource::File(p.clone())).collect();

    for ((path, dir_group), src) in items.iter().zip(&sources) {
        let normalized = src
            .load()
            .map_err(|e| e.to_string())
            .and_then(|s| classifier.normalize(&s).map_err(|e| e.to_string()));
        let spectrum = match normalized {
            Ok(s) => s,
            Err(msg) => {
                eprintln!("error: {}: {msg}", path.display());
                failures += 1;
                continue;
            }
        };
        let group = match args.group_by {
            GroupBy::Directory => dir_group.clone(),
            GroupBy::Label => {
                let mv = classifier.memberships(&spectrum)?;
                let c = spectraclass::harden(&mv, rb.options.nu)?;
                match c.label {
                    Label::Class(code) => Some(code),
                    Label::Unknown => None,
                }
            }
        };
        if let Some(g) = group {
            if !group_order.contains(&g) {
                group_order.push(g.clone());
            }
            groups.entry(g).or_default().push(spectrum.clone());
        }
        ensemble.push(spectrum);
    }
    if args.group_by == GroupBy::Label {
        // rule-base order, then anything else
        let codes = rb.class_codes();
        group_order.sort_by_key(|g| codes.iter().position(|c| c == g).unwrap_or(usize::MAX));
    }
    if ensemble.is_empty() {
        return Err(Fatal("no readable spectra".into()));
    }
    if groups.is_empty() {
        return Err(Fatal("no non-empty groups".into()));
    }

    let mode = match args.mean {
        MeanArg::Present => MeanMode::PresentMean,
        MeanArg::ZeroInclusive => MeanMode::ZeroInclusiveMean,
    };
    let ensemble_db = build_statdb(&ensemble, eps)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
    }
    for g in &group_order {
        let members = &groups[g];
        let db = build_statdb(members, eps)?;
        let rows = class_vs_ensemble_report(&db, &ensemble_db, mode)?;
        match &args.out {
            Some(dir) => {
                let mut w = create_out(&dir.join(format!("report_{g}.csv")))?;
                write_report_csv(&mut w, &rows)?;
                w.flush()?;
            }
            None => {
                let mut out = io::stdout().lock();
                writeln!(out, "# group: {g} ({} spectra)", members.len())?;
                write_report_csv(&mut out, &rows)?;
            }
        }
        let title = format!(
            "{g}: {} spectra vs ensemble of {} (ratio of means)",
            members.len(),
            ensemble.len()
        );
        eprint!("{}", render_histogram(&title, &rows, 40));
    }
    Ok(if failures > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

pub fn map(args: &MapArgs) -> CmdResult {
    let rb = load_rules(&args.rules)?;
    let text = fs::read_to_string(&args.input)
        .map_err(|e| Fatal(format!("cannot read {}: {e}", args.input.display())))?;
    let topology = args.topology.map(|t| match t {
        TopologyArg::Rect => Topology::Rectangular,
        TopologyArg::Hex => Topology::Hexagonal,
    });
    let grid = read_grid_csv(&text, topology).map_err(|e| Fatal(format!("{}: {e}", args.input.display())))?;
    let palette = match &args.palette {
        Some(p) => Palette::parse(&fs::read_to_string(p)?)?,
        None => Palette::basalt(),
    };
    let nu = rb.options.nu;

    let pre = grid.hard_map(nu);
    let post = grid.reclassify_map(nu, args.floor);
    fs::create_dir_all(&args.out)?;

    let write_file = |name: &str, bytes: &[u8]| -> Result<(), Fatal> {
        let path = args.out.join(name);
        fs::write(&path, bytes).map_err(|e| Fatal(format!("cannot write {}: {e}", path.display())))
    };
    for (stem, map) in [("pre", &pre), ("post", &post)] {
        write_file(&format!("{stem}.ppm"), &render_labels(map, &palette).to_ppm_bytes())?;
        let mut buf = Vec::new();
        map.write_csv(&mut buf)?;
        write_file(&format!("{stem}.csv"), &buf)?;
    }
    for class in grid.classes() {
        write_file(&format!("mu_{class}.ppm"), &render_membership(&grid, class).to_ppm_bytes())?;
        let mut csv = String::from("x,y,mu\n");
        for i in 0..grid.len() {
            let (x, y) = grid.position(i);
            let v = grid.spot(i).and_then(|m| m.get(class)).unwrap_or(0.0);
            csv.push_str(&format!("{},{},{}\n", sig6(x), sig6(y), sig6(v)));
        }
        write_file(&format!("mu_{class}.csv"), csv.as_bytes())?;
    }
    let reassigned = post.spots.iter().filter(|s| s.neighbor_assigned).count();
    eprintln!(
        "{} {}x{} grid: {} UNK before smoothing, {} after; {reassigned} spots reassigned from neighbors",
        grid.topology(),
        grid.rows(),
        grid.cols(),
        pre.unknown_count(),
        post.unknown_count()
    );
    Ok(EXIT_OK)
}

pub fn validate_rules(args: &ValidateArgs) -> CmdResult {
    let source = rules_source(&args.rules);
    let mut rb = match read_rules_text(&source)? {
        None => builtin_basalt(),
        Some(text) => parse_rulebase_unchecked(&text).map_err(|e| Fatal(format!("{source}: {e}")))?,
    };
    if let Some(eps) = args.rules.epsilon {
        rb.options.epsilon = eps;
    }
    if let Some(nu) = args.rules.nu {
        rb.options.nu = nu;
    }
    let diags = validate(&rb);
    let mut out = io::stdout().lock();
    for d in &diags {
        writeln!(out, "{source}: {d}")?;
    }
    let errors = diags.iter().filter(|d| d.is_error()).count();
    writeln!(
        out,
        "{source}: rule base `{}` with {} classes: {errors} errors, {} warnings",
        rb.name,
        rb.classes.len(),
        diags.len() - errors
    )?;
    Ok(if errors > 0 { EXIT_FATAL } else { EXIT_OK })
}
