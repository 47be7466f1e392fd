use std::path::Path;

use featremesh::fieldgen::{
    correspondence_map, curves_from_abc_yaml, distance_direction_fields, marching_cubes,
    random_rotation, scale_for_sampling, sdf_grid, surface_improvement_field, FeatureCurveSet,
    FieldSet, MapDirection, NcSampler, ReferenceSurface, SamplePattern, SdfReport,
};
use featremesh::mesh::obj::{read_obj, write_obj};
use featremesh::mesh::{simplify_short_edges, SimplifyReport, TriMesh};
use featremesh::metrics::{
    direction_recall_fpr, field_recall_fpr, precision_recall, rmse, MetricReport,
};
use featremesh::patchwork::{extract_patches, select_interior_features, write_patch_dataset};
use featremesh::providers::{FieldProvider, FileProvider, HeuristicProvider, OracleProvider};
use featremesh::remesh::{run_pipeline_observed, StageReport};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{
    CliError, EvalArgs, FieldsExportArgs, FieldsInspectArgs, GenDataArgs, ProviderKind, RemeshArgs,
    RunConfig,
};

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn mark_flags(cfg: &mut RunConfig, any: bool) {
    if any && cfg.sources.last().map(String::as_str) != Some("flags") {
        cfg.sources.push("flags".into());
    }
}

fn lambda_or_median(lambda: Option<f64>, mesh: &TriMesh) -> Result<f64, CliError> {
    match lambda {
        Some(l) if l > 0.0 && l.is_finite() => Ok(l),
        Some(l) => Err(CliError::Usage(format!(
            "--lambda must be positive, got {l}"
        ))),
        None => mesh
            .median_edge_length()
            .filter(|&l| l > 0.0)
            .ok_or_else(|| {
                CliError::Input("cannot estimate lambda from a mesh without edges".into())
            }),
    }
}

fn load_curves(path: &Path) -> Result<FeatureCurveSet, CliError> {
    Ok(FeatureCurveSet::load(path)?.sharp_only())
}

#[derive(Serialize)]
struct GenInfo<'a> {
    seed: u64,
    lambda: f64,
    beta: f64,
    characteristic_size: f64,
    epsilon: f64,
    rotation: Option<[[f64; 3]; 3]>,
    sdf: SdfReport,
    mc_vertices: usize,
    mc_faces: usize,
    coarse_vertices: usize,
    coarse_faces: usize,
    simplify: Option<SimplifyReport>,
    patches: Option<usize>,
    config: &'a RunConfig,
}

pub fn gen_data(a: &GenDataArgs, mut cfg: RunConfig) -> Result<(), CliError> {
    let mut flagged = false;
    if let Some(l) = a.lambda {
        cfg.scaling.lambda = l;
        flagged = true;
    }
    if let Some(n) = a.samples {
        cfg.scaling.samples = n;
        flagged = true;
    }
    if let Some(m) = a.max_grid {
        cfg.scaling.max_grid = m;
        flagged = true;
    }
    if a.no_rotate {
        cfg.data.rotate = false;
        flagged = true;
    }
    if let Some(f) = a.simplify {
        cfg.data.simplify = Some(f);
        flagged = true;
    }
    if a.no_simplify {
        cfg.data.simplify = None;
        flagged = true;
    }
    if a.patches {
        cfg.data.patches = true;
        flagged = true;
    }
    if let Some(f) = a.format {
        cfg.data.format = f.into();
        flagged = true;
    }
    mark_flags(&mut cfg, flagged);
    cfg.validate()?;

    let mesh = read_obj(&a.mesh)?;
    let curves = match (&a.curves, &a.abc_features) {
        (Some(p), _) => load_curves(p)?,
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            curves_from_abc_yaml(&text, &mesh)?.sharp_only()
        }
        (None, None) => {
            return Err(CliError::Usage(
                "one of --curves or --abc-features is required".into(),
            ))
        }
    };
    let scaled = scale_for_sampling(&mesh, &curves, &cfg.scaling)?;
    let lambda = cfg.scaling.lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rotation = cfg.data.rotate.then(|| random_rotation(&mut rng));
    let (gt, gt_curves) = match &rotation {
        Some(r) => (scaled.mesh.transformed(r), scaled.curves.transformed(r)),
        None => (scaled.mesh.clone(), scaled.curves.clone()),
    };
    let (grid, sdf_report) = sdf_grid(&gt, lambda, cfg.data.padding, None, cfg.scaling.max_grid)?;
    if sdf_report.ambiguous_fraction > 0.01 {
        log::warn!(
            "{:.2}% of grid signs are ambiguous; the input may not be watertight",
            100.0 * sdf_report.ambiguous_fraction
        );
    }
    let mut mc = marching_cubes(&grid, 0.0);
    mc.remove_unreferenced_vertices();
    if mc.faces.is_empty() {
        return Err(CliError::Input(
            "the iso-surface of the input is empty".into(),
        ));
    }
    let (coarse, simplify) = match cfg.data.simplify {
        Some(f) => {
            let (m, r) = simplify_short_edges(&mc, f, &cfg.remesh.guard, None)?;
            (m, Some(r))
        }
        None => (mc.clone(), None),
    };

    let reference = ReferenceSurface::new(gt.clone());
    let sampler = NcSampler::for_mesh(&coarse, cfg.data.samples_per_face);
    let to_gt = correspondence_map(
        &coarse,
        &reference,
        SamplePattern::Stratified(sampler),
        MapDirection::CoarseToGt,
    );
    let density = cfg.data.gt_samples_per_face * coarse.faces.len() as f64 / gt.total_area();
    let to_coarse = correspondence_map(
        &gt,
        &ReferenceSurface::new(coarse.clone()),
        SamplePattern::Random {
            density,
            seed: cfg.seed,
        },
        MapDirection::GtToCoarse,
    );
    let epsilon = cfg.remesh.epsilon * lambda;
    let features = distance_direction_fields(&coarse.vertices, &gt_curves, epsilon);
    let improvement = surface_improvement_field(&coarse, &reference, &sampler, &cfg.remesh.guard)?;

    let out = &a.out;
    create_dir(out)?;
    write_obj(&gt, out.join("gt.obj"))?;
    gt_curves.save(out.join("curves.json"))?;
    grid.save(out.join("sdf.bin"))?;
    write_obj(&mc, out.join("coarse_mc.obj"))?;
    write_obj(&coarse, out.join("coarse.obj"))?;
    to_gt.save_csv(out.join("corr_coarse_to_gt.csv"))?;
    to_coarse.save_csv(out.join("corr_gt_to_coarse.csv"))?;
    FieldSet::from_features(&features, Some(improvement)).write_dir(
        out.join("fields"),
        &coarse,
        cfg.data.format,
    )?;

    let mut patch_count = None;
    if cfg.data.patches {
        let patches = extract_patches(&coarse, &cfg.remesh.patches, lambda, &mut rng)?;
        let mut records = Vec::with_capacity(patches.len());
        for p in patches {
            let interior = select_interior_features(&p, &gt_curves, lambda);
            let f = distance_direction_fields(&p.mesh.vertices, &interior, epsilon);
            let s = surface_improvement_field(&p.mesh, &reference, &sampler, &cfg.remesh.guard)?;
            records.push((p, FieldSet::from_features(&f, Some(s))));
        }
        patch_count = Some(records.len());
        write_patch_dataset(out.join("patches"), &records, lambda, cfg.data.format)?;
    }

    let info = GenInfo {
        seed: cfg.seed,
        lambda,
        beta: scaled.beta,
        characteristic_size: scaled.characteristic_size,
        epsilon,
        rotation: rotation.map(|r| [0, 1, 2].map(|i| [0, 1, 2].map(|j| r[(i, j)]))),
        sdf: sdf_report,
        mc_vertices: mc.vertices.len(),
        mc_faces: mc.faces.len(),
        coarse_vertices: coarse.vertices.len(),
        coarse_faces: coarse.faces.len(),
        simplify,
        patches: patch_count,
        config: &cfg,
    };
    write_json(&out.join("info.json"), &info)?;
    log::info!(
        "coarse mesh: {} vertices, {} faces at lambda {lambda}",
        coarse.vertices.len(),
        coarse.faces.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct RemeshOutput<'a> {
    config: &'a RunConfig,
    stages: &'a StageReport,
}

pub fn remesh(a: &RemeshArgs, mut cfg: RunConfig) -> Result<(), CliError> {
    let r = &mut cfg.remesh;
    let mut flagged = false;
    if let Some(v) = a.alpha_prox {
        r.alpha_prox = v;
        flagged = true;
    }
    if let Some(v) = a.flip_threshold {
        r.flip_threshold = v;
        flagged = true;
    }
    if let Some(v) = a.flip_sets {
        r.max_flip_sets = v;
        flagged = true;
    }
    if let Some(v) = a.simplify {
        r.simplify = Some(v);
        flagged = true;
    }
    if a.no_postprocess {
        r.postprocess = false;
        flagged = true;
    }
    if a.timings {
        r.record_timings = true;
        flagged = true;
    }
    mark_flags(&mut cfg, flagged);
    cfg.validate()?;

    let coarse = read_obj(&a.input)?;
    let lambda = lambda_or_median(a.lambda, &coarse)?;
    let provider: Box<dyn FieldProvider> = match a.provider {
        ProviderKind::Oracle => {
            let (Some(gt), Some(curves)) = (&a.gt, &a.curves) else {
                return Err(CliError::Usage(
                    "the oracle provider needs --gt and --curves".into(),
                ));
            };
            Box::new(OracleProvider::new(
                read_obj(gt)?,
                &load_curves(curves)?,
                NcSampler::for_mesh(&coarse, cfg.data.samples_per_face),
            ))
        }
        ProviderKind::Heuristic => Box::new(HeuristicProvider::default()),
        ProviderKind::Files => {
            let Some(dir) = &a.fields else {
                return Err(CliError::Usage("the files provider needs --fields".into()));
            };
            if !dir.is_dir() {
                return Err(CliError::Input(format!(
                    "{}: field directory not found",
                    dir.display()
                )));
            }
            let p = FileProvider::load(dir)?;
            if p.mesh_vertices() != coarse.vertices.len() {
                return Err(CliError::Input(format!(
                    "{}: fields describe {} vertices but the input has {}",
                    dir.display(),
                    p.mesh_vertices(),
                    coarse.vertices.len()
                )));
            }
            Box::new(p)
        }
    };
    if let Some(d) = &a.dump_stages {
        create_dir(d)?;
    }
    let mut dump = |stage: &str, m: &TriMesh| match &a.dump_stages {
        Some(d) => write_obj(m, d.join(format!("{stage}.obj"))),
        None => Ok(()),
    };
    let (refined, report) = run_pipeline_observed(
        &coarse,
        provider.as_ref(),
        &cfg.remesh,
        lambda,
        Some(&mut dump),
    )?;
    write_obj(&refined, &a.out)?;
    let report_path = a
        .report
        .clone()
        .unwrap_or_else(|| a.out.with_extension("report.json"));
    write_json(
        &report_path,
        &RemeshOutput {
            config: &cfg,
            stages: &report,
        },
    )?;
    log::info!(
        "snapped {} vertices, flipped {} edges, postprocessed {}",
        report.snap.map_or(0, |s| s.moved),
        report.flips,
        report.postprocess_flips
    );
    Ok(())
}

pub fn eval(a: &EvalArgs, mut cfg: RunConfig) -> Result<(), CliError> {
    if let Some(n) = a.samples {
        cfg.metrics.samples = n;
        mark_flags(&mut cfg, true);
    }
    cfg.validate()?;
    let recon = read_obj(&a.recon)?;
    let gt = read_obj(&a.gt)?;
    let curves = load_curves(&a.curves)?;
    let lambda = lambda_or_median(a.lambda, &recon)?;
    let scores = precision_recall(&recon, &gt, &curves, &cfg.metrics, lambda)?;
    let mut report = MetricReport::new(lambda, cfg.metrics);
    report.add_scores(&a.name, &scores);
    if let (Some(pred), Some(truth)) = (&a.pred_fields, &a.true_fields) {
        let (pm, p) = FieldSet::read_dir(pred)?;
        let (tm, t) = FieldSet::read_dir(truth)?;
        if pm.vertices.len() != tm.vertices.len() || pm.faces != tm.faces {
            return Err(CliError::Input(
                "predicted and true fields describe different meshes".into(),
            ));
        }
        if let (Some(pd), Some(td)) = (&p.distance, &t.distance) {
            let c = field_recall_fpr(pd, td, cfg.metrics.distance_t * lambda)?;
            report.push(&a.name, "Recall_d", "inf", c.recall, c.no_positives);
            report.push(&a.name, "FPR_d", "inf", c.fpr, c.no_negatives);
            report.push(&a.name, "RMSE_d", "inf", rmse(pd, td)?, false);
        }
        if let (Some(pr), Some(tr)) = (&p.direction, &t.direction) {
            let c = direction_recall_fpr(pr, tr, cfg.metrics.angle_t_deg.to_radians())?;
            report.push(&a.name, "Recall_r", "inf", c.recall, c.empty);
            report.push(&a.name, "FPR_r", "inf", c.fpr, c.empty);
        }
        if let (Some(ps), Some(ts)) = (&p.improvement, &t.improvement) {
            if ps.edges == ts.edges {
                report.push(
                    &a.name,
                    "RMSE_s",
                    "inf",
                    rmse(&ps.values, &ts.values)?,
                    false,
                );
            }
        }
    }
    report.save(&a.out)?;
    log::info!(
        "F_N band {:.4}, F band {:.4}",
        scores.band.normal_f,
        scores.band.f
    );
    Ok(())
}

pub fn fields_export(a: &FieldsExportArgs, mut cfg: RunConfig) -> Result<(), CliError> {
    if let Some(f) = a.format {
        cfg.data.format = f.into();
    }
    if !(a.lambda > 0.0 && a.lambda.is_finite()) {
        return Err(CliError::Usage(format!(
            "--lambda must be positive, got {}",
            a.lambda
        )));
    }
    cfg.validate()?;
    let mesh = read_obj(&a.mesh)?;
    let gt = read_obj(&a.gt)?;
    let curves = load_curves(&a.curves)?;
    let epsilon = cfg.remesh.epsilon * a.lambda;
    let features = distance_direction_fields(&mesh.vertices, &curves, epsilon);
    let improvement = if a.no_improvement {
        None
    } else {
        let sampler = NcSampler::for_mesh(&mesh, cfg.data.samples_per_face);
        Some(surface_improvement_field(
            &mesh,
            &ReferenceSurface::new(gt),
            &sampler,
            &cfg.remesh.guard,
        )?)
    };
    FieldSet::from_features(&features, improvement).write_dir(&a.out, &mesh, cfg.data.format)?;
    Ok(())
}

#[derive(Serialize)]
struct Summary {
    min: f64,
    max: f64,
    mean: f64,
}

fn summarize(v: &[f64]) -> Option<Summary> {
    if v.is_empty() {
        return None;
    }
    Some(Summary {
        min: v.iter().copied().fold(f64::INFINITY, f64::min),
        max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: v.iter().sum::<f64>() / v.len() as f64,
    })
}

#[derive(Serialize)]
struct Inspection {
    vertices: usize,
    faces: usize,
    epsilon: f64,
    distance: Option<Summary>,
    distance_below_epsilon: Option<usize>,
    nonzero_directions: Option<usize>,
    improvement: Option<Summary>,
    positive_improvements: Option<usize>,
}

pub fn fields_inspect(a: &FieldsInspectArgs) -> Result<(), CliError> {
    let (mesh, f) = FieldSet::read_dir(&a.dir)?;
    let summary = Inspection {
        vertices: mesh.vertices.len(),
        faces: mesh.faces.len(),
        epsilon: f.epsilon,
        distance: f.distance.as_deref().and_then(summarize),
        distance_below_epsilon: f
            .distance
            .as_ref()
            .map(|d| d.iter().filter(|&&x| x < f.epsilon).count()),
        nonzero_directions: f.direction.as_ref().map(|r| {
            r.iter()
                .filter(|v| **v != featremesh::geom::Vec3::zeros())
                .count()
        }),
        improvement: f.improvement.as_ref().and_then(|s| summarize(&s.values)),
        positive_improvements: f
            .improvement
            .as_ref()
            .map(|s| s.values.iter().filter(|&&x| x > 0.0).count()),
    };
    let text =
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::Internal(e.to_string()))?;
    println!("{text}");
    Ok(())
}
