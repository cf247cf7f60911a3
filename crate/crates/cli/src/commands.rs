//! Subcommand implementations.

use std::fs;
use std::time::Instant;

use anyhow::Context;

use fapre_core::{
    build_dataset, derive_seed, gaussian_mi, identity_precoder, infer_precoder, load_dataset,
    mi_finite_alphabet, mi_with_draws, optimize_precoder, split_train_test, train_sgd,
    vectorize_precoder, wf_precoder, ChannelMatrix, Constellation, LayerSpec, MlpModel,
    NoiseSampler, OptimConfig, Precoder, TrainConfig,
};

use crate::literal::{parse_grid, parse_matrix};
use crate::{resolve_seed, BenchArgs, CliError, CliResult, EvalMiArgs, GenDataArgs, SweepArgs,
            TrainArgs};

pub fn gen_data(args: GenDataArgs) -> CliResult<()> {
    let seed = resolve_seed(args.seed)?;
    let grid = parse_grid(&args.snr_grid).map_err(CliError::Usage)?;
    let constellation = args.modulation.constellation();
    let cfg = OptimConfig {
        noise_samples: args.tn,
        ..OptimConfig::default()
    };
    let header = build_dataset(
        args.count,
        args.m,
        args.n,
        &constellation,
        &grid,
        &cfg,
        seed,
        &args.out,
    )
    .with_context(|| format!("writing dataset to {}", args.out.display()))?;
    println!(
        "wrote {} records ({}x{} {}) to {}",
        header.count,
        header.n,
        header.m,
        header.constellation,
        args.out.display()
    );
    Ok(())
}

/// Training pairs: vectorized WF precoder in, vectorized optimal precoder
/// (scaled by 1/sqrt(M) into the tanh range) out. Failed records are skipped.
fn training_pairs(
    samples: &[fapre_core::ChannelSample],
    m: usize,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let scale = 1.0 / (m as f64).sqrt();
    samples
        .iter()
        .filter(|s| !s.failed)
        .map(|s| {
            let input = vectorize_precoder(&s.g_wf);
            let target: Vec<f64> = vectorize_precoder(&s.g_opt)
                .into_iter()
                .map(|x| x * scale)
                .collect();
            (input, target)
        })
        .collect()
}

fn mean_sample_loss(model: &MlpModel, pairs: &[(Vec<f64>, Vec<f64>)]) -> CliResult<f64> {
    if pairs.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!("no samples to evaluate")));
    }
    let mut acc = 0.0;
    for (input, target) in pairs {
        let out = model.forward(input).map_err(anyhow::Error::from)?;
        acc += out
            .iter()
            .zip(target)
            .map(|(o, t)| (o - t) * (o - t))
            .sum::<f64>();
    }
    Ok(acc / pairs.len() as f64)
}

pub fn train(args: TrainArgs) -> CliResult<()> {
    let seed = resolve_seed(args.seed)?;
    let (header, samples) = load_dataset(&args.data)
        .with_context(|| format!("reading dataset {}", args.data.display()))?;
    let pairs = training_pairs(&samples, header.m);
    if pairs.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "dataset {} has no usable records",
            args.data.display()
        )));
    }
    let (train_set, test_set) = split_train_test(&pairs, args.split, derive_seed(seed, 1))
        .map_err(anyhow::Error::from)?;

    let spec = LayerSpec::for_precoder(header.m);
    let cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch,
        learning_rate: args.lr,
        train_fraction: args.split,
        seed,
    };
    let (model, _history) = train_sgd(&train_set, &spec, &cfg).map_err(anyhow::Error::from)?;

    let train_mse = mean_sample_loss(&model, &train_set)?;
    let test_mse = mean_sample_loss(&model, &test_set)?;
    println!("train_mse={train_mse:.6e} test_mse={test_mse:.6e}");
    model
        .save(&args.out)
        .with_context(|| format!("writing model to {}", args.out.display()))?;
    Ok(())
}

fn channel_from_literal(text: &str) -> CliResult<ChannelMatrix> {
    let matrix = parse_matrix(text).map_err(CliError::Usage)?;
    ChannelMatrix::from_matrix(matrix).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn sweep(args: SweepArgs) -> CliResult<()> {
    let seed = resolve_seed(args.seed)?;
    let grid = parse_grid(&args.snr_db).map_err(CliError::Usage)?;
    let constellation = args.modulation.constellation();
    let base = channel_from_literal(&args.channel)?;
    let methods: Vec<String> = args
        .methods
        .split(',')
        .map(|m| m.trim().to_string())
        .collect();
    for m in &methods {
        if !matches!(m.as_str(), "wf" | "opt" | "dl" | "identity") {
            return Err(CliError::Usage(format!(
                "unknown method `{m}` (expected wf, opt, dl, identity)"
            )));
        }
    }
    let model = if methods.iter().any(|m| m == "dl") {
        let path = args.model.as_ref().ok_or_else(|| {
            CliError::Runtime(anyhow::anyhow!("method dl requires --model"))
        })?;
        Some(MlpModel::load(path).with_context(|| format!("reading model {}", path.display()))?)
    } else {
        None
    };

    let mut csv = String::from("snr_db,method,mi_bits,std_error\n");
    for (point, &snr_db) in grid.iter().enumerate() {
        let rho = 10.0_f64.powf(snr_db / 10.0);
        let channel = base.scaled_to_snr(rho).map_err(anyhow::Error::from)?;
        let draws = NoiseSampler::new(derive_seed(seed, 1000 + point as u64))
            .draw_many(channel.receive_dim(), args.tn);
        for method in &methods {
            let precoder = precoder_for_method(method, &channel, &constellation, args.tn, seed, point, model.as_ref())?;
            let est = mi_with_draws(&channel, &precoder, &constellation, &draws)
                .map_err(anyhow::Error::from)?;
            csv.push_str(&format!(
                "{snr_db},{method},{:.6},{:.6}\n",
                est.bits, est.std_error
            ));
        }
    }
    fs::write(&args.out, csv).with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote sweep ({} points x {} methods) to {}",
        grid.len(),
        methods.len(),
        args.out.display()
    );
    Ok(())
}

fn precoder_for_method(
    method: &str,
    channel: &ChannelMatrix,
    constellation: &Constellation,
    tn: usize,
    seed: u64,
    point: usize,
    model: Option<&MlpModel>,
) -> CliResult<Precoder> {
    let p = match method {
        "wf" => wf_precoder(channel).map_err(anyhow::Error::from)?,
        "identity" => identity_precoder(channel.transmit_dim()),
        "opt" => {
            let cfg = OptimConfig {
                noise_samples: tn,
                seed: derive_seed(seed, 2000 + point as u64),
                ..OptimConfig::default()
            };
            optimize_precoder(channel, constellation, &cfg)
                .map_err(anyhow::Error::from)?
                .0
        }
        "dl" => {
            let model = model.expect("dl method checked for a model upfront");
            infer_precoder(model, channel).map_err(anyhow::Error::from)?
        }
        other => unreachable!("method {other} validated earlier"),
    };
    Ok(p)
}

pub fn bench(args: BenchArgs) -> CliResult<()> {
    let seed = resolve_seed(args.seed)?;
    if args.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let constellation = args.modulation.constellation();
    let model_path = args.model.as_ref().ok_or_else(|| {
        CliError::Runtime(anyhow::anyhow!("bench requires --model for the inference side"))
    })?;
    let model = MlpModel::load(model_path)
        .with_context(|| format!("reading model {}", model_path.display()))?;

    let grid = parse_grid("-10:2.5:20").expect("default grid");
    let mut channels = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let sample_seed = derive_seed(seed, i as u64);
        let (_, channel) = fapre_core::sample_channel(args.m, args.n, &grid, sample_seed)
            .map_err(anyhow::Error::from)?;
        channels.push((channel, derive_seed(sample_seed, 2)));
    }

    let t0 = Instant::now();
    for (channel, opt_seed) in &channels {
        let cfg = OptimConfig {
            seed: *opt_seed,
            ..OptimConfig::default()
        };
        optimize_precoder(channel, &constellation, &cfg).map_err(anyhow::Error::from)?;
    }
    let opt_total = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    for (channel, _) in &channels {
        infer_precoder(&model, channel).map_err(anyhow::Error::from)?;
    }
    let dl_total = t1.elapsed().as_secs_f64();

    let mut csv = String::from("method,channels,total_seconds,per_channel_seconds\n");
    csv.push_str(&format!(
        "opt,{},{:.6},{:.9}\n",
        args.count,
        opt_total,
        opt_total / args.count as f64
    ));
    csv.push_str(&format!(
        "dl,{},{:.6},{:.9}\n",
        args.count,
        dl_total,
        dl_total / args.count as f64
    ));
    fs::write(&args.out, &csv).with_context(|| format!("writing {}", args.out.display()))?;
    print!("{csv}");
    Ok(())
}

pub fn eval_mi(args: EvalMiArgs) -> CliResult<()> {
    let seed = resolve_seed(args.seed)?;
    let channel = channel_from_literal(&args.channel)?;
    let m = channel.transmit_dim();

    let g_raw = parse_matrix(&args.precoder).map_err(CliError::Usage)?;
    // `--g 0` is shorthand for the all-zero M x M precoder
    let g_raw = if g_raw.rows() == 1 && g_raw.cols() == 1 && g_raw[(0, 0)].norm() == 0.0 {
        fapre_core::ComplexMatrix::zeros(m, m)
    } else {
        g_raw
    };
    if g_raw.rows() != m || g_raw.cols() != m {
        return Err(CliError::Usage(format!(
            "precoder must be {m}x{m} for this channel, got {}x{}",
            g_raw.rows(),
            g_raw.cols()
        )));
    }
    let precoder = Precoder::new(g_raw).map_err(anyhow::Error::from)?;

    match args.modulation {
        crate::EvalModArg::Gaussian => {
            let bits = gaussian_mi(&channel, &precoder).map_err(anyhow::Error::from)?;
            println!("{bits:.6} ± 0.000000 bits");
        }
        other => {
            use crate::ModArg;
            let constellation = match other {
                crate::EvalModArg::Bpsk => ModArg::Bpsk,
                crate::EvalModArg::Qpsk => ModArg::Qpsk,
                crate::EvalModArg::Qam16 => ModArg::Qam16,
                crate::EvalModArg::Gaussian => unreachable!(),
            }
            .constellation();
            let mut sampler = NoiseSampler::new(seed);
            let est = mi_finite_alphabet(&channel, &precoder, &constellation, args.tn, &mut sampler)
                .map_err(anyhow::Error::from)?;
            println!("{:.6} ± {:.6} bits", est.bits, est.std_error);
        }
    }
    Ok(())
}
