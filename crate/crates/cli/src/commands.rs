use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use tricube::decoder::decode;
use tricube::encoder::{encode, make_swm, Heatmap};
use tricube::eval::{coco_summary, voc_summary, ImageEval, Interpolation};
use tricube::io::{
    format_detections, load_thm1, load_twt1, parse_detections, parse_dota, save_thm1, save_twt1, serialize_dota,
    CategoryTable, SceneFile, SynthConfig,
};
use tricube::kernel::KernelSpec;
use tricube::loss::{fpem_sample, masked_mse};
use tricube::refine::{cascade_forward, MacConfig, DEFAULT_ANGLES};
use tricube::roundtrip::{run_scene, summarize, RoundtripConfig, RoundtripReport, HISTOGRAM_EDGES};

use crate::args::{AnnotationArgs, Cli, Command, Interp, Style};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Encode { ann, out, kernel, gamma } => {
            let (scene, _) = load_scene(ann)?;
            let spec = KernelSpec {
                gamma: *gamma,
                ..KernelSpec::for_family((*kernel).into())
            };
            let h = encode(&scene, &spec)?;
            save_thm1(out, h.as_raster()).with_context(|| format!("writing {}", out.display()))
        }
        Command::Swm { ann, out } => {
            let (scene, _) = load_scene(ann)?;
            let m = make_swm(&scene)?;
            save_thm1(out, m.raster()).with_context(|| format!("writing {}", out.display()))
        }
        Command::Decode {
            heatmap,
            tau,
            gamma,
            min_area,
            out,
            categories,
            downsample,
            per_class,
        } => {
            let h = load_heatmap(heatmap)?;
            let table = match categories {
                Some(p) => read_categories(p)?,
                None => CategoryTable::new((0..h.channels()).map(|c| format!("class{c}")).collect())?,
            };
            ensure!(
                table.len() >= h.channels(),
                "heatmap has {} channels but only {} categories",
                h.channels(),
                table.len()
            );
            ensure!(*downsample >= 1, "downsample must be >= 1");
            let dets = decode(&h, *tau, *gamma, *min_area)?;
            let scale = *downsample as f64;
            if *per_class {
                fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
                for (c, name) in table.names().iter().enumerate().take(h.channels()) {
                    let mine: Vec<_> = dets.iter().filter(|d| d.class_id == c).copied().collect();
                    write_text(&out.join(format!("{name}.txt")), &format_detections(&mine, &table, scale)?)?;
                }
                Ok(())
            } else {
                write_text(out, &format_detections(&dets, &table, scale)?)
            }
        }
        Command::Roundtrip {
            scenes,
            tau,
            gamma,
            kernel,
            boxes,
            json,
        } => {
            let mut cfg = RoundtripConfig {
                seed: cli.seed,
                scenes: *scenes,
                tau: *tau,
                kernel: KernelSpec {
                    gamma: *gamma,
                    ..KernelSpec::for_family((*kernel).into())
                },
                ..RoundtripConfig::default()
            };
            cfg.synth.box_count = *boxes;
            cfg.kernel.validate()?;
            let outcomes = (0..cfg.scenes)
                .into_par_iter()
                .map(|i| run_scene(i, &cfg).with_context(|| format!("scene {i} (seed {})", cfg.scene_seed(i))))
                .collect::<Result<Vec<_>>>()?;
            let report = summarize(&outcomes);
            if *json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", roundtrip_text(&report));
            }
            Ok(())
        }
        Command::Loss { pred, gt, ann, ratio } => {
            let (scene, _) = load_scene(ann)?;
            let pred = load_heatmap(pred)?;
            let gt = load_heatmap(gt)?;
            let mask = make_swm(&scene)?;
            let sample = fpem_sample(&pred, &gt, *ratio)?;
            let l = masked_mse(&pred, &gt, &mask, &sample)?;
            println!("loss {l}");
            println!("positives {}", sample.positives.len());
            println!("false_positives {}", sample.false_positive_total);
            println!("sampled_false_positives {}", sample.sampled_false_positives.len());
            println!("sampled_total {}", sample.len());
            Ok(())
        }
        Command::Refine {
            input,
            weights,
            classes,
            save_weights,
            steps,
            out_prefix,
        } => {
            ensure!(*steps >= 1, "steps must be >= 1");
            let x = load_thm1(input).with_context(|| format!("reading {}", input.display()))?;
            let cfg = match weights {
                Some(p) => load_twt1(p).with_context(|| format!("reading {}", p.display()))?,
                None => {
                    let angles: &[f64] = if x.channels() % DEFAULT_ANGLES.len() == 0 { &DEFAULT_ANGLES } else { &[0.0] };
                    MacConfig::random(x.channels(), *classes, angles, cli.seed)?
                }
            };
            if let Some(p) = save_weights {
                save_twt1(p, &cfg).with_context(|| format!("writing {}", p.display()))?;
            }
            for (i, h) in cascade_forward(&x, &cfg, *steps)?.iter().enumerate() {
                let path = PathBuf::from(format!("{out_prefix}{}.thm1", i + 1));
                save_thm1(&path, h.as_raster()).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
        Command::Eval {
            dets,
            gt,
            categories,
            style,
            budget,
            iou,
            interp,
            json,
        } => eval(dets, gt, categories.as_deref(), *style, *budget, *iou, *interp, *json),
        Command::Overlay {
            image,
            dets,
            categories,
            out,
        } => {
            let text = read_text(dets)?;
            let table = match categories {
                Some(p) => read_categories(p)?,
                None => infer_categories([text.as_str()], 0)?,
            };
            let dets = parse_detections(&text, &table).with_context(|| format!("in {}", dets.display()))?;
            crate::overlay::draw(image, &dets, out)
        }
        Command::Synth {
            out,
            size,
            boxes,
            sides,
            max_iou,
            classes,
        } => {
            let cfg = SynthConfig {
                image_width: size.0,
                image_height: size.1,
                num_classes: *classes,
                box_count: *boxes,
                side_range: (sides.0 as f64, sides.1 as f64),
                max_pair_iou: *max_iou,
                ..SynthConfig::default()
            };
            let scene = tricube::io::synth_scene(cli.seed, &cfg)?;
            let table = CategoryTable::new((0..*classes).map(|c| format!("class{c}")).collect())?;
            write_text(out, &serialize_dota(&SceneFile::from_scene(&scene), &table)?)
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_categories(path: &Path) -> Result<CategoryTable> {
    CategoryTable::from_text(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

/// Category names in order of first appearance. `field` is the token index
/// of the name: 8 in annotation lines, 0 in detection lines.
fn infer_categories<'a>(texts: impl IntoIterator<Item = &'a str>, field: usize) -> Result<CategoryTable> {
    let mut names: Vec<String> = Vec::new();
    for text in texts {
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.contains(':') {
                continue;
            }
            if let Some(name) = line.split_whitespace().nth(field) {
                names.push(name.to_string());
            }
        }
    }
    names.sort();
    names.dedup();
    // `classN` names (as written by `synth` and `decode`) keep channel N.
    let numbered: Option<Vec<usize>> = names.iter().map(|n| class_number(n)).collect();
    if let Some(ids) = numbered {
        let count = ids.iter().max().map_or(1, |m| m + 1);
        names = (0..count).map(|c| format!("class{c}")).collect();
    }
    Ok(CategoryTable::new(names)?)
}

fn class_number(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("class")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || (digits.len() > 1 && digits.starts_with('0')) {
        return None;
    }
    digits.parse().ok()
}

fn load_scene(args: &AnnotationArgs) -> Result<(tricube::GroundTruthScene, CategoryTable)> {
    let text = read_text(&args.ann)?;
    let table = match &args.categories {
        Some(p) => read_categories(p)?,
        None => infer_categories([text.as_str()], 8)?,
    };
    let mut file = parse_dota(&text, &table).with_context(|| format!("in {}", args.ann.display()))?;
    if let Some(size) = args.size {
        file.image_size = Some(size);
    }
    let scene = file.to_scene(args.downsample, table.len())?;
    Ok((scene, table))
}

fn load_heatmap(path: &Path) -> Result<Heatmap> {
    let r = load_thm1(path).with_context(|| format!("reading {}", path.display()))?;
    Heatmap::new(r).with_context(|| format!("in {}", path.display()))
}

fn roundtrip_text(r: &RoundtripReport) -> String {
    let mut s = String::new();
    writeln!(s, "scenes {}  boxes {}  detections {}", r.scenes, r.boxes, r.detections).unwrap();
    writeln!(s, "best-iou histogram:").unwrap();
    let mut lo = 0.0;
    for (edge, count) in HISTOGRAM_EDGES.iter().zip(&r.histogram) {
        let hi = if edge.is_finite() { format!("{edge:.2})") } else { "1.00]".to_string() };
        writeln!(s, "  [{lo:.2}, {hi:<6} {count}").unwrap();
        lo = *edge;
    }
    match r.recovery_rate {
        Some(rate) => writeln!(s, "recovered at iou>=0.90: {}/{} ({:.2}%)", r.recovered, r.boxes, 100.0 * rate),
        None => writeln!(s, "recovered at iou>=0.90: n/a (no boxes)"),
    }
    .unwrap();
    match r.map50 {
        Some(m) => writeln!(s, "map@0.5: {m:.6}"),
        None => writeln!(s, "map@0.5: n/a (no ground truth)"),
    }
    .unwrap();
    s
}

fn txt_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "txt"));
    files.sort();
    Ok(files)
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    categories: &'a [String],
    images: usize,
    #[serde(flatten)]
    result: T,
}

#[allow(clippy::too_many_arguments)]
fn eval(
    dets_dir: &Path,
    gt_dir: &Path,
    categories: Option<&Path>,
    style: Style,
    budget: usize,
    iou: f64,
    interp: Interp,
    json: bool,
) -> Result<()> {
    ensure!((0.0..=1.0).contains(&iou) && iou > 0.0, "iou threshold must lie in (0, 1]");
    let gt_files = txt_files(gt_dir)?;
    if gt_files.is_empty() {
        bail!("no .txt ground-truth files in {}", gt_dir.display());
    }
    let gt_texts = gt_files.par_iter().map(|p| read_text(p)).collect::<Result<Vec<_>>>()?;
    let table = match categories {
        Some(p) => read_categories(p)?,
        None => infer_categories(gt_texts.iter().map(String::as_str), 8)?,
    };
    let images = gt_files
        .par_iter()
        .zip(&gt_texts)
        .map(|(path, text)| {
            let gts = parse_dota(text, &table)
                .with_context(|| format!("in {}", path.display()))?
                .ground_truth();
            let det_path = dets_dir.join(path.file_name().unwrap());
            let dets = if det_path.exists() {
                parse_detections(&read_text(&det_path)?, &table).with_context(|| format!("in {}", det_path.display()))?
            } else {
                Vec::new()
            };
            Ok(ImageEval { dets, gts })
        })
        .collect::<Result<Vec<_>>>()?;
    let names = table.names();
    let out = match style {
        Style::Voc => {
            let interp = match interp {
                Interp::All => Interpolation::AllPoints,
                Interp::Eleven => Interpolation::ElevenPoint,
            };
            let r = voc_summary(&images, table.len(), iou, interp);
            if json {
                serde_json::to_string_pretty(&Report { categories: names, images: images.len(), result: &r })?
            } else {
                let mut s = format!("images {}  iou {}  interpolation {:?}\n", images.len(), iou, interp);
                for ((name, ap), n) in names.iter().zip(&r.per_class_ap).zip(&r.gt_counts) {
                    writeln!(s, "  {name:<20} gt {n:>6}  ap {}", fmt_opt(*ap)).unwrap();
                }
                writeln!(s, "map {}", fmt_opt(r.map)).unwrap();
                s
            }
        }
        Style::Coco => {
            let r = coco_summary(&images, table.len(), budget);
            if json {
                serde_json::to_string_pretty(&Report { categories: names, images: images.len(), result: &r })?
            } else {
                let mut s = format!("images {}  budget {}\n", images.len(), budget);
                for ((name, ap), n) in names.iter().zip(&r.per_class_ap).zip(&r.gt_counts) {
                    writeln!(s, "  {name:<20} gt {n:>6}  ap {}", fmt_opt(*ap)).unwrap();
                }
                for (label, v) in [
                    ("ap", r.map),
                    ("ap50", r.ap50),
                    ("ap75", r.ap75),
                    ("ap_small", r.ap_small),
                    ("ap_medium", r.ap_medium),
                    ("ap_large", r.ap_large),
                    ("ar", r.ar),
                ] {
                    writeln!(s, "{label:<10} {}", fmt_opt(v)).unwrap();
                }
                s
            }
        }
    };
    println!("{}", out.trim_end());
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"))
}
