//! Command implementations: each writes its tables under the output
//! directory using round-trip-safe formatting.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use zigzag_core::eigenfunctions::{
    antiperiodic_flatband_eigenfunction, dirichlet_eigenfunction, edge_values, kirchhoff_residual,
};
use zigzag_core::hill::hill_f;
use zigzag_core::magnetic::ChannelParams;
use zigzag_core::rootscan::dirichlet_spectrum;
use zigzag_core::spectra::{
    band_traces, full_spectrum, full_spectrum_from_field, lyapunov, EndpointKind, SpectrumReport,
};
use zigzag_core::verify::run_all;
use zigzag_core::ChannelParams64;

use crate::config::RunConfig;
use crate::fmt::sig17;

fn create(dir: &Path, name: &str) -> Result<fs::File> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(name);
    fs::File::create(&path).with_context(|| format!("creating {}", path.display()))
}

fn kind_str(kind: EndpointKind) -> &'static str {
    match kind {
        EndpointKind::Resonance => "resonance",
        EndpointKind::Periodic => "periodic",
        EndpointKind::Antiperiodic => "antiperiodic",
        EndpointKind::Flat => "flat",
        EndpointKind::WindowEdge => "window-edge",
    }
}

/// `discriminant`: tabulate F and the per-channel Lyapunov data over a
/// uniform λ grid.
pub fn cmd_discriminant(cfg: &RunConfig) -> Result<()> {
    let q = cfg.potential()?;
    let tube = cfg.tube()?;
    let window = cfg.window()?;
    let points = cfg.lambda_points();
    let requested = cfg.channels()?;

    let mut channels: Vec<ChannelParams64> = Vec::new();
    for &k in &requested {
        let ch = ChannelParams::new(tube.n, k, tube.a)?;
        if ch.singular {
            eprintln!(
                "note: channel k={k} is singular (|c_k| < 1e-9); it has no Lyapunov function and is omitted from the table"
            );
        } else {
            channels.push(ch);
        }
    }

    let mut out = create(&cfg.out_dir, "discriminant.csv")?;
    let mut header = String::from("lambda,F");
    for ch in &channels {
        let k = ch.k;
        header += &format!(",T_{k},R_{k},ReFp_{k},ImFp_{k},ReFm_{k},ImFm_{k}");
    }
    writeln!(out, "{header}")?;

    for i in 0..points {
        let lam = window.lo + (window.hi - window.lo) * i as f64 / (points - 1) as f64;
        let f = hill_f(&q, lam)?;
        let mut row = format!("{},{}", sig17(lam), sig17(f));
        for ch in &channels {
            let v = lyapunov(&q, lam, ch)?;
            row += &format!(
                ",{},{},{},{},{},{}",
                sig17(v.t_k),
                sig17(v.r_k),
                sig17(v.f_plus.re),
                sig17(v.f_plus.im),
                sig17(v.f_minus.re),
                sig17(v.f_minus.im)
            );
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}

fn write_band_rows(out: &mut impl Write, rep: &SpectrumReport<f64>) -> Result<()> {
    for ch in &rep.channels {
        for band in &ch.bands {
            writeln!(
                out,
                "{},{},{},{},{},{},{}/{}",
                sig17(rep.b_field),
                sig17(rep.a),
                ch.k,
                band.n,
                sig17(band.lo),
                sig17(band.hi),
                kind_str(band.lo_kind),
                kind_str(band.hi_kind)
            )?;
        }
        for (i, &pt) in ch.flat_points.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},flat",
                sig17(rep.b_field),
                sig17(rep.a),
                ch.k,
                i + 1,
                sig17(pt),
                sig17(pt)
            )?;
        }
    }
    Ok(())
}

fn write_gap_rows(out: &mut impl Write, rep: &SpectrumReport<f64>) -> Result<()> {
    for gap in &rep.gaps {
        writeln!(
            out,
            "{},{},{},{},{}",
            sig17(rep.b_field),
            sig17(rep.a),
            gap.n,
            sig17(gap.lo),
            sig17(gap.hi)
        )?;
    }
    Ok(())
}

fn write_flat_rows(out: &mut impl Write, rep: &SpectrumReport<f64>) -> Result<()> {
    for ch in &rep.channels {
        for &pt in &ch.flat_points {
            writeln!(
                out,
                "{},{},{},antiperiodic,{}",
                sig17(rep.b_field),
                sig17(rep.a),
                ch.k,
                sig17(pt)
            )?;
        }
    }
    for &pt in &rep.dirichlet {
        writeln!(
            out,
            "{},{},all,dirichlet,{}",
            sig17(rep.b_field),
            sig17(rep.a),
            sig17(pt)
        )?;
    }
    Ok(())
}

/// `spectrum`: bands, gaps and flat points at a single field value, plus
/// the full JSON report.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<()> {
    let q = cfg.potential()?;
    let tube = cfg.tube()?;
    let window = cfg.window()?;
    let rep = full_spectrum(&q, &tube, window, &cfg.opts)?;

    let mut bands = create(&cfg.out_dir, "bands.csv")?;
    writeln!(bands, "b,a,k,n,lo,hi,kind")?;
    write_band_rows(&mut bands, &rep)?;

    let mut gaps = create(&cfg.out_dir, "gaps.csv")?;
    writeln!(gaps, "b,a,n,lo,hi")?;
    write_gap_rows(&mut gaps, &rep)?;

    let mut flat = create(&cfg.out_dir, "flat.csv")?;
    writeln!(flat, "b,a,k,kind,lambda")?;
    write_flat_rows(&mut flat, &rep)?;

    let mut report = create(&cfg.out_dir, "report.json")?;
    serde_json::to_writer_pretty(&mut report, &rep)?;
    writeln!(report)?;
    Ok(())
}

/// `sweep`: long-format band/gap tables keyed by B plus a gnuplot-ready
/// band-edge trace file.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let q = cfg.potential()?;
    let n = cfg.n()?;
    let window = cfg.window()?;
    let grid = cfg.sweep_grid()?;

    let mut reports = Vec::with_capacity(grid.len());
    for &b in &grid {
        reports.push(full_spectrum_from_field(&q, n, b, window, &cfg.opts)?);
    }

    let mut bands = create(&cfg.out_dir, "sweep_bands.csv")?;
    writeln!(bands, "b,a,k,n,lo,hi,kind")?;
    for rep in &reports {
        write_band_rows(&mut bands, rep)?;
    }
    let mut gaps = create(&cfg.out_dir, "sweep_gaps.csv")?;
    writeln!(gaps, "b,a,n,lo,hi")?;
    for rep in &reports {
        write_gap_rows(&mut gaps, rep)?;
    }

    // gnuplot: one block per (k, n) band, columns B lo hi
    let mut traces = create(&cfg.out_dir, "traces.dat")?;
    for trace in band_traces(&reports) {
        writeln!(traces, "# band k={} n={}", trace.k, trace.n)?;
        for (b, lo, hi) in &trace.points {
            writeln!(traces, "{} {} {}", sig17(*b), sig17(*lo), sig17(*hi))?;
        }
        writeln!(traces)?;
    }
    Ok(())
}

/// `eigenfunction`: sample a constructed compactly supported eigenfunction
/// at 64 points per edge.
pub fn cmd_eigenfunction(cfg: &RunConfig) -> Result<()> {
    let q = cfg.potential()?;
    let tube = cfg.tube()?;
    let window = cfg.window()?;
    let spec = cfg
        .file
        .eigenfunction
        .clone()
        .ok_or_else(|| anyhow!("config field `eigenfunction` is required for this command"))?;
    if spec.index < 1 {
        bail!("eigenfunction.index is 1-based");
    }
    let ch = ChannelParams::new(tube.n, spec.channel, tube.a)?;

    let psi = match spec.kind.as_str() {
        "dirichlet" => {
            let mu = dirichlet_spectrum(&q, window, &cfg.opts)?;
            let lam = *mu.get(spec.index - 1).ok_or_else(|| {
                anyhow!("only {} Dirichlet eigenvalues in the window", mu.len())
            })?;
            dirichlet_eigenfunction(&q, lam, &ch)?
        }
        "flat" => {
            let ap = zigzag_core::rootscan::solve_f_equals(&q, -1.0, window, &cfg.opts)?;
            let lam = ap
                .roots
                .get(spec.index - 1)
                .map(|r| r.lambda)
                .ok_or_else(|| anyhow!("only {} σ_AP points in the window", ap.roots.len()))?;
            antiperiodic_flatband_eigenfunction(&q, lam, &ch)?
        }
        other => bail!("eigenfunction.kind must be `dirichlet` or `flat`, got `{other}`"),
    };

    let residual = kirchhoff_residual(&q, &psi)?;
    eprintln!(
        "eigenfunction at lambda = {}: Kirchhoff residual {:.3e}",
        sig17(psi.lambda),
        residual
    );

    let mut out = create(&cfg.out_dir, "eigenfunction.csv")?;
    writeln!(out, "n,j,t,re,im")?;
    let (min_cell, max_cell) = psi.support_cells();
    for cell in min_cell..=max_cell {
        for j in 0..3u8 {
            for i in 0..64 {
                let t = i as f64 / 63.0;
                let (v, _) = edge_values(&q, &psi, cell, j, t)?;
                writeln!(
                    out,
                    "{cell},{j},{},{},{}",
                    sig17(t),
                    sig17(v.re),
                    sig17(v.im)
                )?;
            }
        }
    }
    Ok(())
}

/// `verify`: run the acceptance suite; returns whether everything passed.
pub fn cmd_verify(cfg: &RunConfig) -> Result<bool> {
    let report = run_all(cfg.seed, &cfg.opts);
    for check in &report.checks {
        println!("{}", check.line());
    }
    println!(
        "verify: {} ({} checks, seed {})",
        if report.passed { "PASS" } else { "FAIL" },
        report.checks.len(),
        report.seed
    );
    let mut out = create(&cfg.out_dir, "verify_report.json")?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    Ok(report.passed)
}
