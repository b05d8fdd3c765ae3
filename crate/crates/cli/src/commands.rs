use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use hazekit::airlight::{draw_search_path, quad_tree_search, Airlight};
use hazekit::config::PipelineConfig;
use hazekit::dataset::{list_pairs, prepare_dataset, PrepareOptions};
use hazekit::image::{load_depth, load_image, save_image, DepthMap, PlanarImage};
use hazekit::learned::{load_model, save_model, train::train_with_progress, BilateralGridModel};
use hazekit::losses::{total_loss, GaussianKernel};
use hazekit::metrics::{psnr, ssim};
use hazekit::noise::{run_noise_experiment, NoiseExperiment};
use hazekit::pipeline::{dehaze, Estimator};
use hazekit::recovery::noise_amplification_map;
use hazekit::synthesis::{add_noise, apply_haze, generate_scene, sample_conditions, t_from_depth};
use hazekit::wgif::decompose;
use hazekit::{Error, Result};

use crate::args::{Command, EstimatorArgs, EstimatorKind};
use crate::jobs::par_map;

const IMAGE_EXTENSIONS: &[&str] = &["png", "ppm", "pgm", "pnm"];

pub fn run(command: Command, cfg: &PipelineConfig, jobs: usize) -> Result<()> {
    match command {
        Command::Dehaze {
            inputs,
            output,
            out_dir,
            estimator,
            dump_t,
            dump_gain,
        } => {
            if inputs.len() > 1 && (output.is_some() || dump_t.is_some() || dump_gain.is_some()) {
                return Err(arg("-o, --dump-t and --dump-gain take a single input; use --out-dir"));
            }
            let model = load_estimator_model(&estimator)?;
            let opts = cfg.dehaze_options(estimator.classic);
            if let Some(d) = &out_dir {
                fs::create_dir_all(d).map_err(|e| io(d, e))?;
            }
            let results = par_map(&inputs, jobs, |input| -> Result<()> {
                let hazy = load_image(input)?;
                let out = dehaze(&hazy, estimator_for(&model), &opts)?;
                let target = match (&output, &out_dir) {
                    (Some(o), _) => o.clone(),
                    (None, Some(d)) => d.join(format!("{}.png", stem(input)?)),
                    (None, None) => input.with_file_name(format!("{}_dehazed.png", stem(input)?)),
                };
                save_image(&out.recovered, &target)?;
                if let Some(p) = &dump_t {
                    save_image(&out.transmission.to_image(), p)?;
                }
                if let Some(p) = &dump_gain {
                    save_image(&noise_amplification_map(&out.transmission, cfg.t0)?, p)?;
                }
                Ok(())
            });
            results.into_iter().collect()
        }
        Command::Decompose { inputs, out_dir } => {
            fs::create_dir_all(&out_dir).map_err(|e| io(&out_dir, e))?;
            let params = cfg.wgif();
            par_map(&inputs, jobs, |input| -> Result<()> {
                let layers = decompose(&load_image(input)?, &params)?;
                let s = stem(input)?;
                save_image(&layers.base, out_dir.join(format!("{s}_base.png")))?;
                let detail = layers.detail.map(|d| 0.5 + d / 2.0);
                save_image(&detail, out_dir.join(format!("{s}_detail.png")))
            })
            .into_iter()
            .collect()
        }
        Command::Airlight { input, debug } => {
            let img = load_image(&input)?;
            let base = decompose(&img, &cfg.wgif())?.base;
            let search = quad_tree_search(&base, &cfg.airlight())?;
            let [r, g, b] = search.airlight.rgb;
            println!("A = ({r:.4}, {g:.4}, {b:.4})");
            if let Some(p) = debug {
                save_image(&draw_search_path(&img, &search), p)?;
            }
            Ok(())
        }
        Command::Synthesize {
            clean,
            depth,
            generate,
            size,
            beta,
            airlight,
            noise_sigma,
            out,
        } => {
            let airlight = airlight.as_deref().map(parse_airlight).transpose()?;
            if let Some(b) = beta {
                if !(b > 0.0 && b.is_finite()) {
                    return Err(arg(format!("--beta must be > 0, got {b}")));
                }
            }
            for side in ["hazy", "clean"] {
                let d = out.join(side);
                fs::create_dir_all(&d).map_err(|e| io(&d, e))?;
            }
            let job = SynthJob {
                beta,
                airlight,
                noise_sigma,
                seed: cfg.seed,
                out: &out,
            };
            match (clean, depth, generate) {
                (Some(clean), Some(depth), None) => {
                    let items = list_images(&clean)?;
                    let items: Vec<(usize, String, PathBuf)> =
                        items.into_iter().enumerate().map(|(i, (s, p))| (i, s, p)).collect();
                    par_map(&items, jobs, |(i, s, p)| job.from_clean_file(*i as u64, s, p, &depth))
                        .into_iter()
                        .collect()
                }
                (None, None, Some(n)) => {
                    let items: Vec<usize> = (0..n).collect();
                    par_map(&items, jobs, |&i| job.procedural(i as u64, size))
                        .into_iter()
                        .collect()
                }
                _ => Err(arg("give --clean with --depth, or --generate N")),
            }
        }
        Command::Train {
            data,
            out,
            init,
            trace,
            log_every,
        } => {
            let (pairs, unmatched) = hazekit::dataset::load_pairs(&data)?;
            warn_unmatched(&unmatched);
            let model = match init {
                Some(p) => load_model(p)?,
                None => BilateralGridModel::init(cfg.model_config(), cfg.seed)?,
            };
            let train_cfg = cfg.train_config();
            let (model, records) = train_with_progress(model, &pairs, &train_cfg, |r| {
                if log_every > 0 && r.step % log_every == 0 {
                    eprintln!(
                        "step {:>6}  loss {:.6}  L_r {:.6}  L_c {:.6}",
                        r.step, r.loss, r.restoration, r.color
                    );
                }
            })?;
            save_model(&model, &out)?;
            if let Some(p) = trace {
                let mut csv = String::from("step,loss,restoration,color\n");
                for r in &records {
                    csv.push_str(&format!("{},{},{},{}\n", r.step, r.loss, r.restoration, r.color));
                }
                fs::write(&p, csv).map_err(|e| io(&p, e))?;
            }
            Ok(())
        }
        Command::Evaluate {
            pairs,
            as_is,
            loss,
            output,
            estimator,
        } => {
            if let Some(paths) = loss {
                let pred = load_image(&paths[0])?;
                let truth = load_image(&paths[1])?;
                let l = total_loss(&pred, &truth, cfg.wc, &GaussianKernel::default())?;
                println!("L_r = {}", l.restoration);
                println!("L_c = {}", l.color);
                println!("L = {}", l.value);
                return Ok(());
            }
            let root = pairs.expect("clap requires --pairs without --loss");
            let listing = list_pairs(&root)?;
            warn_unmatched(&listing.unmatched);
            let model = if as_is { None } else { load_estimator_model(&estimator)? };
            let opts = cfg.dehaze_options(estimator.classic);
            let rows = par_map(&listing.matched, jobs, |(name, h, c)| -> Result<String> {
                let hazy = load_image(h)?;
                let clean = load_image(c)?;
                let pred = if as_is {
                    hazy
                } else {
                    dehaze(&hazy, estimator_for(&model), &opts)?.recovered
                };
                Ok(format!("{name},{:.6},{:.4}\n", ssim(&pred, &clean)?, psnr(&pred, &clean)?))
            });
            let mut csv = String::from("name,ssim,psnr\n");
            for row in rows {
                csv.push_str(&row?);
            }
            write_output(output.as_deref(), &csv)
        }
        Command::NoiseAnalyze { size, sigma, trials, t } => {
            let exp = NoiseExperiment {
                size,
                sigma,
                seeds: trials,
                transmissions: t,
                wgif: cfg.wgif(),
                recovery: cfg.recovery(),
                ..Default::default()
            };
            let mut csv = String::from("t,predicted_classic,classic_variance,fused_variance,ratio\n");
            for r in run_noise_experiment(&exp)? {
                csv.push_str(&format!(
                    "{},{:.6e},{:.6e},{:.6e},{:.4}\n",
                    r.t,
                    r.predicted_classic,
                    r.classic_variance,
                    r.fused_variance,
                    r.ratio()
                ));
            }
            write_output(None, &csv)
        }
        Command::Prepare {
            src,
            dst,
            crop,
            down,
            mirror,
        } => {
            let report = prepare_dataset(&src, &dst, &PrepareOptions { crop, down, mirror })?;
            warn_unmatched(&report.skipped);
            eprintln!("wrote {} pairs to {}", report.written.len(), dst.display());
            Ok(())
        }
    }
}

struct SynthJob<'a> {
    beta: Option<f64>,
    airlight: Option<Airlight>,
    noise_sigma: f64,
    seed: u64,
    out: &'a Path,
}

impl SynthJob<'_> {
    fn conditions(&self, index: u64) -> (f64, Airlight) {
        let (b, a) = sample_conditions(self.seed.wrapping_add(index));
        (self.beta.unwrap_or(b), self.airlight.unwrap_or(a))
    }

    fn write(&self, name: &str, index: u64, clean: &PlanarImage, hazy: &PlanarImage) -> Result<()> {
        let hazy = add_noise(hazy, self.noise_sigma, self.seed.wrapping_add(index))?;
        save_image(&hazy, self.out.join("hazy").join(format!("{name}.png")))?;
        save_image(clean, self.out.join("clean").join(format!("{name}.png")))
    }

    fn from_clean_file(&self, index: u64, name: &str, clean_path: &Path, depth_dir: &Path) -> Result<()> {
        let clean = load_image(clean_path)?;
        if clean.channels() != 3 {
            return Err(Error::Shape(format!("{}: expected an RGB image", clean_path.display())));
        }
        let depth = find_depth(depth_dir, name)?;
        let depth = if (depth.width(), depth.height()) == (clean.width(), clean.height()) {
            depth
        } else {
            depth.resized(clean.width(), clean.height())?
        };
        let (beta, airlight) = self.conditions(index);
        let t = t_from_depth(&depth.normalized(), beta)?;
        let hazy = apply_haze(&clean, &t, &airlight)?;
        self.write(name, index, &clean, &hazy)
    }

    fn procedural(&self, index: u64, size: usize) -> Result<()> {
        let (beta, airlight) = self.conditions(index);
        let scene = generate_scene(size, size, self.seed.wrapping_add(index), Some(beta), Some(airlight))?;
        self.write(&format!("{index:05}"), index, &scene.clean, &scene.hazy)
    }
}

fn find_depth(dir: &Path, name: &str) -> Result<DepthMap> {
    for ext in ["png", "pfm", "pgm"] {
        let p = dir.join(format!("{name}.{ext}"));
        if p.exists() {
            return load_depth(p);
        }
    }
    Err(Error::Argument(format!("no depth map for {name:?} in {}", dir.display())))
}

fn list_images(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io(dir, e))? {
        let path = entry.map_err(|e| io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            out.push((stem(&path)?, path));
        }
    }
    out.sort();
    Ok(out)
}

fn load_estimator_model(args: &EstimatorArgs) -> Result<Option<BilateralGridModel>> {
    match (args.estimator, &args.model) {
        (EstimatorKind::Prior, _) => Ok(None),
        (EstimatorKind::Learned, Some(p)) => Ok(Some(load_model(p)?)),
        (EstimatorKind::Learned, None) => Err(arg("--estimator learned needs --model")),
    }
}

fn estimator_for(model: &Option<BilateralGridModel>) -> Estimator<'_> {
    match model {
        Some(m) => Estimator::Learned(m),
        None => Estimator::Prior,
    }
}

fn parse_airlight(s: &str) -> Result<Airlight> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| arg(format!("bad --airlight {s:?}")))?;
    match vals[..] {
        [v] => Airlight::gray(v),
        [r, g, b] => Airlight::new([r, g, b]),
        _ => Err(arg(format!("--airlight takes 1 or 3 values, got {s:?}"))),
    }
}

fn stem(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .ok_or_else(|| arg(format!("no file name in {}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io(p, e)),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| io("<stdout>", e)),
    }
}

fn warn_unmatched(stems: &[String]) {
    if !stems.is_empty() {
        eprintln!("warning: skipping unmatched stems: {}", stems.join(", "));
    }
}

fn arg(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

fn io(path: impl AsRef<Path>, e: std::io::Error) -> Error {
    Error::Io {
        path: path.as_ref().to_path_buf(),
        source: e,
    }
}
