use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use log::info;
use potts_core::admm::{Admm, CgProx, DataProx, FrequencyProx, RadonFilterProx, SolverChoice};
use potts_core::metrics::{psnr, rand_index, Partition};
use potts_core::neighborhoods::{build_system, derive_weights, isotropy_ratio, Displacement, NeighborhoodSystem};
use potts_core::operators::{ConvolutionKernel, KernelKind};
use potts_core::phantoms::{add_noise, geometric_shapes, shepp_logan, Phantom, NOISE_GENERATOR};
use potts_core::potts1d::solve_potts_1d;
use potts_core::tikhonov::{solve_cg, FrequencySolver, RadonFilterSolver, TikhonovProblem};
use potts_core::{Image, Signal1D};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{build_operator, OperatorSpec, RunConfig};
use crate::formats::{
    file_hash, hash_values, read_data, read_image, read_labels_csv, sha256_hex, write_data,
    write_image_csv, write_json, write_labels_csv, write_labels_png, write_png, DataSidecar, Geometry,
};
use crate::{
    FbpArgs, ForwardArgs, KernelArg, MetricsArgs, NbhdArgs, OperatorArg, OperatorArgs, PhantomArgs, PhantomKind,
    Potts1dArgs, ReconstructArgs, SolveArgs, TikhonovArgs, VariantArg,
};

fn out_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn make_phantom(kind: PhantomKind, size: usize, variant: VariantArg) -> Result<Phantom> {
    Ok(match kind {
        PhantomKind::SheppLogan => shepp_logan(size, variant.into())?,
        PhantomKind::Geometric => geometric_shapes(size)?,
    })
}

fn provenance(command: &str, config: Value, inputs: Value, extra: Value) -> Value {
    let config_hash = sha256_hex(config.to_string().as_bytes());
    json!({
        "tool": "potts",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "config_hash": config_hash,
        "inputs": inputs,
        "threads": rayon::current_num_threads(),
        "noise_generator": NOISE_GENERATOR,
        "extra": extra,
    })
}

pub fn phantom(a: &PhantomArgs) -> Result<()> {
    out_dir(&a.out)?;
    let p = make_phantom(a.kind, a.size, a.variant)?;
    write_image_csv(&a.out.join("phantom.csv"), &p.image)?;
    write_png(&a.out.join("phantom.png"), &p.image)?;
    write_labels_csv(&a.out.join("labels.csv"), &p.ground_truth)?;
    write_labels_png(&a.out.join("labels.png"), &p.ground_truth)?;
    let config = json!({
        "kind": format!("{:?}", a.kind),
        "size": a.size,
        "variant": format!("{:?}", a.variant),
    });
    let extra = json!({ "segments": p.ground_truth.count() });
    write_json(&a.out.join("provenance.json"), &provenance("phantom", config, json!({}), extra))
}

fn apply_operator_flags(spec: &mut OperatorSpec, f: &OperatorArgs) -> Result<()> {
    if let Some(kind) = f.operator {
        *spec = match kind {
            OperatorArg::Radon => OperatorSpec::Radon {
                angles: 7,
                detectors: None,
            },
            OperatorArg::Spherical => OperatorSpec::Spherical { angles: 7, radii: 256 },
            OperatorArg::Blur => OperatorSpec::Blur {
                kernel: KernelKind::Gaussian { sigma: 1.0 },
            },
            OperatorArg::Identity => OperatorSpec::Identity,
        };
    }
    match spec {
        OperatorSpec::Radon { angles, detectors } => {
            if let Some(n) = f.angles {
                *angles = n;
            }
            if f.detectors.is_some() {
                *detectors = f.detectors;
            }
        }
        OperatorSpec::Spherical { angles, radii } => {
            if let Some(n) = f.angles {
                *angles = n;
            }
            if let Some(n) = f.radii {
                *radii = n;
            }
        }
        OperatorSpec::Blur { kernel } => {
            let which = f.kernel.unwrap_or(match kernel {
                KernelKind::Motion { .. } => KernelArg::Motion,
                _ => KernelArg::Gaussian,
            });
            *kernel = match which {
                KernelArg::Gaussian => KernelKind::Gaussian {
                    sigma: f.sigma.unwrap_or(match kernel {
                        KernelKind::Gaussian { sigma } => *sigma,
                        _ => 1.0,
                    }),
                },
                KernelArg::Motion => KernelKind::Motion {
                    length: f.length.unwrap_or(match kernel {
                        KernelKind::Motion { length } => *length,
                        _ => 15,
                    }),
                },
            };
        }
        OperatorSpec::Identity => {}
    }
    Ok(())
}

pub fn forward(a: &ForwardArgs) -> Result<()> {
    let mut config = RunConfig::load(a.config.as_deref())?;
    apply_operator_flags(&mut config.operator, &a.operator)?;
    if let Some(level) = a.noise {
        config.noise.level = level;
    }
    if let Some(seed) = a.seed {
        config.noise.seed = seed;
    }
    config.validate_noise()?;

    let (image, inputs) = match (&a.input, a.phantom) {
        (Some(path), _) => (read_image(path)?, json!({ path.display().to_string(): file_hash(path)? })),
        (None, Some(kind)) => (make_phantom(kind, a.size, a.variant)?.image, json!({})),
        (None, None) => bail!("pass --input or --phantom"),
    };
    let geometry = config.operator.geometry(image.shape())?;
    let op = build_operator(&geometry, image.shape())?;
    let clean = op.apply(&image)?;
    let data = add_noise(&clean, config.noise.level, config.noise.seed)?;
    let sigma = config.noise.level * clean.max_abs();

    out_dir(&a.out)?;
    let sidecar = DataSidecar {
        image_shape: image.shape(),
        data_shape: data.shape(),
        geometry,
    };
    write_data(&a.out.join("data.csv"), &data, &sidecar)?;
    if a.input.is_none() {
        write_image_csv(&a.out.join("truth.csv"), &image)?;
    }
    let extra = json!({
        "seed": config.noise.seed,
        "sigma": sigma,
        "phantom": a.phantom.map(|k| format!("{k:?}")),
        "size": a.size,
        "variant": format!("{:?}", a.variant),
        "data_hash": hash_values(data.data()),
    });
    let prov = provenance("forward", serde_json::to_value(&config)?, inputs, extra);
    write_json(&a.out.join("provenance.json"), &prov)
}

pub fn fbp(a: &FbpArgs) -> Result<()> {
    let (data, sidecar) = read_data(&a.data)?;
    let Geometry::Radon(geometry) = sidecar.geometry else {
        bail!("filtered backprojection needs Radon data");
    };
    let solver = RadonFilterSolver::new(geometry, sidecar.image_shape)?;
    let image = solver.fbp(&data)?;
    out_dir(&a.out)?;
    write_image_csv(&a.out.join("fbp.csv"), &image)?;
    write_png(&a.out.join("fbp.png"), &image)?;
    let inputs = json!({ a.data.display().to_string(): file_hash(&a.data)? });
    write_json(&a.out.join("provenance.json"), &provenance("fbp", json!({}), inputs, json!({})))
}

fn apply_solve_flags(config: &mut RunConfig, f: &SolveArgs) {
    let p = &mut config.potts;
    if let Some(v) = f.gamma {
        p.gamma = v;
    }
    if let Some(v) = f.neighborhood {
        p.neighborhood = v;
    }
    if let Some(v) = f.stop_tolerance {
        p.stop_tolerance = v;
    }
    if let Some(v) = f.max_iterations {
        p.max_iterations = v;
    }
    if f.no_certificate {
        p.check_certificate = false;
    }
    let s = &mut config.schedule;
    if let Some(v) = f.mu0 {
        s.mu0 = v;
    }
    if let Some(v) = f.tau {
        s.tau = v;
    }
    if let Some(v) = f.nu_mode {
        s.nu_mode = v.into();
    }
    let solver = &mut config.solver;
    if let Some(v) = f.solver {
        solver.kind = v.into();
    }
    if let Some(v) = f.cg_tolerance {
        solver.cg_tolerance = v;
    }
    if let Some(v) = f.cg_max_iterations {
        solver.cg_max_iterations = v;
    }
}

/// The fields of a reconstruction summary that are reproducible; hashed.
#[derive(Serialize)]
struct Reproducible {
    iterations: usize,
    converged: bool,
    stop_ratio: f64,
    relative_split_residual: f64,
    multiplier_norms: Vec<f64>,
    objective: f64,
    segments: usize,
    reconstruction_hash: String,
    labels_hash: String,
    config_hash: String,
}

pub fn reconstruct(a: &ReconstructArgs) -> Result<()> {
    let mut config = RunConfig::load(a.config.as_deref())?;
    apply_solve_flags(&mut config, &a.solve);
    let potts = config.potts_config()?;
    let cg = config.cg_config()?;
    let (data, sidecar) = read_data(&a.data)?;
    let shape = sidecar.image_shape;
    let op = build_operator(&sidecar.geometry, shape)?;

    let cg_prox;
    let freq_prox;
    let radon_prox;
    let prox: &dyn DataProx = match (config.solver.kind, &sidecar.geometry) {
        (SolverChoice::Cg, _) => {
            cg_prox = CgProx::new(op.as_ref(), &data, cg);
            &cg_prox
        }
        (SolverChoice::Frequency, Geometry::Blur { kernel }) => {
            freq_prox = FrequencyProx::new(&ConvolutionKernel::new(*kernel)?, shape, &data)?;
            &freq_prox
        }
        (SolverChoice::Frequency, Geometry::Identity) => {
            freq_prox = FrequencyProx::new(&ConvolutionKernel::new(KernelKind::Delta)?, shape, &data)?;
            &freq_prox
        }
        (SolverChoice::RadonFilter, Geometry::Radon(g)) => {
            radon_prox = RadonFilterProx::new(g.clone(), shape, &data)?;
            &radon_prox
        }
        (kind, g) => bail!("solver {kind:?} does not apply to {g:?} data"),
    };

    out_dir(&a.out)?;
    let config_value = serde_json::to_value(&config)?;
    let config_hash = sha256_hex(config_value.to_string().as_bytes());
    let inputs = json!({ a.data.display().to_string(): file_hash(&a.data)? });
    write_json(
        &a.out.join("provenance.json"),
        &provenance("reconstruct", config_value, inputs, json!({})),
    )?;

    let diagnostics_path = a.out.join("diagnostics.jsonl");
    let mut diagnostics = BufWriter::new(File::create(&diagnostics_path)?);
    let mut write_error = None;
    let started = Instant::now();
    let admm = Admm::new(op.as_ref(), &data, &potts, config.schedule, prox)?;
    let result = admm.run_with(|record| {
        info!("iteration {} stop ratio {:.3e}", record.iteration, record.stop_ratio);
        let line = serde_json::to_string(record).map_err(anyhow::Error::from);
        let written = line.and_then(|l| {
            writeln!(diagnostics, "{l}")?;
            diagnostics.flush().map_err(anyhow::Error::from)
        });
        if let Err(e) = written {
            write_error.get_or_insert(e);
        }
    });
    drop(diagnostics);
    if let Some(e) = write_error {
        return Err(e.context(format!("writing {}", diagnostics_path.display())));
    }
    let outcome = result.with_context(|| format!("reconstruction aborted; see {}", diagnostics_path.display()))?;
    let wall_time = started.elapsed().as_secs_f64();

    write_image_csv(&a.out.join("reconstruction.csv"), &outcome.v)?;
    if matches!(outcome.v.channels(), 1 | 3) {
        write_png(&a.out.join("reconstruction.png"), &outcome.v)?;
    }
    write_labels_csv(&a.out.join("labels.csv"), &outcome.labels)?;
    write_labels_png(&a.out.join("labels.png"), &outcome.labels)?;

    let last = outcome.records.last().context("no iterations were run")?;
    let labels_f64: Vec<f64> = outcome.labels.labels().iter().map(|&l| l as f64).collect();
    let reproducible = Reproducible {
        iterations: outcome.iterations,
        converged: outcome.converged,
        stop_ratio: last.stop_ratio,
        relative_split_residual: last.relative_split_residual,
        multiplier_norms: last.multiplier_norms.clone(),
        objective: last.objective,
        segments: outcome.labels.count(),
        reconstruction_hash: hash_values(outcome.v.data()),
        labels_hash: hash_values(&labels_f64),
        config_hash,
    };
    let hash = sha256_hex(serde_json::to_string(&reproducible)?.as_bytes());
    let mut summary = serde_json::to_value(&reproducible)?;
    summary["summary_hash"] = json!(hash);
    summary["wall_time_s"] = json!(wall_time);
    if let Some(path) = &a.truth_labels {
        let (truth, w, h) = read_labels_csv(path)?;
        if w * h != outcome.labels.labels().len() {
            bail!("ground-truth labels are {w}x{h}, reconstruction is {}x{}", shape.width, shape.height);
        }
        let ri = rand_index(&Partition::new(truth), &Partition::from(&outcome.labels))?;
        summary["rand_index"] = json!(ri);
    }
    if let Some(path) = &a.truth_image {
        summary["psnr"] = finite_or_string(psnr(&outcome.v, &read_image(path)?)?);
    }
    write_json(&a.out.join("summary.json"), &summary)?;
    if !outcome.converged {
        log::warn!("stopping rule not met after {} iterations", outcome.iterations);
    }
    Ok(())
}

fn finite_or_string(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

pub fn potts1d(a: &Potts1dArgs) -> Result<()> {
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let mut samples = Vec::new();
    let mut channels = None;
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("{}:{}: bad number", a.input.display(), i + 1))?;
        if *channels.get_or_insert(row.len()) != row.len() {
            bail!("{}:{}: inconsistent channel count", a.input.display(), i + 1);
        }
        samples.extend(row);
    }
    let signal = Signal1D::new(channels.unwrap_or(1), samples)?;
    let solution = solve_potts_1d(&signal, a.gamma)?;
    if let Some(out) = &a.out {
        let fitted = solution.reconstruct();
        let mut text = String::new();
        for i in 0..fitted.len() {
            let row: Vec<String> = fitted.sample(i).iter().map(|&v| crate::formats::format_value(v)).collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    }
    let report = json!({
        "energy": solution.energy,
        "jump_positions": solution.jump_positions,
        "segment_values": solution.segment_values,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn parse_displacements(text: &str) -> Result<Vec<Displacement>> {
    text.split(';')
        .map(|pair| {
            let parts: Vec<&str> = pair.split(',').map(str::trim).collect();
            match parts.as_slice() {
                [x, y] => Ok([x.parse()?, y.parse()?]),
                _ => bail!("displacement {pair:?} is not of the form x,y"),
            }
        })
        .collect()
}

pub fn nbhd(a: &NbhdArgs) -> Result<()> {
    let (system, closed): (NeighborhoodSystem, Option<Vec<f64>>) = match (&a.displacements, a.level) {
        (Some(text), _) => (NeighborhoodSystem::with_derived_weights(parse_displacements(text)?)?, None),
        (None, level) => {
            let system = build_system(level.unwrap_or(2))?;
            let closed = system.weights().to_vec();
            let derived = derive_weights(system.displacements())?;
            (NeighborhoodSystem::new(system.displacements().to_vec(), derived)?, Some(closed))
        }
    };
    let report = json!({
        "displacements": system.displacements(),
        "weights": system.weights(),
        "closed_form_weights": closed,
        "isotropy_ratio": isotropy_ratio(&system, a.samples)?,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

pub fn tikhonov(a: &TikhonovArgs) -> Result<()> {
    let (data, sidecar) = read_data(&a.data)?;
    let shape = sidecar.image_shape;
    let op = build_operator(&sidecar.geometry, shape)?;
    let anchor = match &a.anchor {
        Some(path) => read_image(path)?,
        None => Image::zeros(shape),
    };
    let mut config = RunConfig::default();
    if let Some(v) = a.cg_tolerance {
        config.solver.cg_tolerance = v;
    }
    if let Some(v) = a.cg_max_iterations {
        config.solver.cg_max_iterations = v;
    }
    let problem = TikhonovProblem::new(op.as_ref(), &data, &anchor, a.weight)?;
    let (solution, iterations) = match (SolverChoice::from(a.solver), &sidecar.geometry) {
        (SolverChoice::Cg, _) => {
            let out = solve_cg(&problem, &config.cg_config()?, None)?;
            (out.solution, Some(out.iterations))
        }
        (SolverChoice::Frequency, Geometry::Blur { kernel }) => (
            FrequencySolver::new(&ConvolutionKernel::new(*kernel)?, shape)?.solve(&data, &anchor, a.weight)?,
            None,
        ),
        (SolverChoice::RadonFilter, Geometry::Radon(g)) => {
            (RadonFilterSolver::new(g.clone(), shape)?.solve(&data, &anchor, a.weight)?, None)
        }
        (kind, g) => bail!("solver {kind:?} does not apply to {g:?} data"),
    };
    out_dir(&a.out)?;
    write_image_csv(&a.out.join("solution.csv"), &solution)?;
    let report = json!({
        "relative_residual": problem.relative_residual(&solution)?,
        "objective": problem.objective(&solution)?,
        "iterations": iterations,
    });
    write_json(&a.out.join("report.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

pub fn metrics(a: &MetricsArgs) -> Result<()> {
    if a.labels.is_none() && a.images.is_none() {
        bail!("pass --labels and/or --images");
    }
    let mut report = json!({ "rand_index": null, "psnr": null });
    if let Some(paths) = &a.labels {
        let (p, pw, ph) = read_labels_csv(&paths[0])?;
        let (q, qw, qh) = read_labels_csv(&paths[1])?;
        if (pw, ph) != (qw, qh) {
            bail!("label maps are {pw}x{ph} and {qw}x{qh}");
        }
        report["rand_index"] = json!(rand_index(&Partition::new(p), &Partition::new(q))?);
    }
    if let Some(paths) = &a.images {
        let u = read_image(&paths[0])?;
        let g = read_image(&paths[1])?;
        if u.shape() != g.shape() {
            bail!("images have shapes {:?} and {:?}", u.shape(), g.shape());
        }
        report["psnr"] = finite_or_string(psnr(&u, &g)?);
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
