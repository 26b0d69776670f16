use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use bandnodal::field::{build_mesh, mc_nodal_lengths, min_level, write_lengths_csv, POINTS_PER_WAVELENGTH};
use bandnodal::chaos::HermiteMc;
use bandnodal::kacrice::{k_asymptotic, k_twopoint, mean_length, variance_integral, VarianceOptions};
use bandnodal::kernel::{gamma_asym, gamma_cd, gamma_exact};
use bandnodal::{BandWindow, ChaosReport, KMethod, Mesh, NodalStats};
use serde_json::{json, Value};

use crate::config::{Command, ExperimentConfig, PsiRange};
use crate::error::CliError;
use crate::output::{num, Row};

/// Parameter columns shared by every row.
fn base_row(cfg: &ExperimentConfig, win: &BandWindow) -> Row {
    let mut r = Row::new();
    r.insert("command".into(), json!(cfg.command.name()));
    r.insert("n".into(), json!(win.n()));
    r.insert("g".into(), num(win.g()));
    r.insert("g_rule".into(), json!(cfg.g_rule.label()));
    r.insert("l0".into(), json!(win.l0()));
    r.insert("seed".into(), cfg.seed.map_or(Value::Null, |s| json!(s)));
    r.insert("tol".into(), num(cfg.tol));
    r
}

fn windows(cfg: &ExperimentConfig) -> Result<Vec<BandWindow>, CliError> {
    cfg.n_list
        .iter()
        .map(|&n| cfg.g_rule.window(n).map_err(|e| CliError::Config { line: None, msg: format!("n={n}: {e}") }))
        .collect()
}

fn psi_points(cfg: &ExperimentConfig, win: &BandWindow) -> Result<Vec<f64>, CliError> {
    let r: PsiRange = cfg.psi_range.expect("validated");
    let top = win.psi_of(std::f64::consts::PI);
    if r.max > top {
        return Err(CliError::Config {
            line: None,
            msg: format!("psi_range max {} beyond the antipode psi = {top:.6} at n={}", r.max, win.n()),
        });
    }
    Ok(r.points())
}

fn mesh_for(cfg: &ExperimentConfig, win: &BandWindow) -> Result<Mesh, CliError> {
    let level = cfg.mesh_level.unwrap_or_else(|| min_level(win.n(), POINTS_PER_WAVELENGTH));
    Ok(build_mesh(win, level)?)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Row>, CliError> {
    match cfg.command {
        Command::KernelCurve => kernel_curve(cfg),
        Command::KacriceCurve => kacrice_curve(cfg),
        Command::Variance => variance(cfg),
        Command::McNodal => mc_nodal(cfg),
        Command::Chaos2 => chaos2(cfg),
        Command::Selfcheck => unreachable!("selfcheck has its own runner"),
    }
}

fn kernel_curve(cfg: &ExperimentConfig) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for win in windows(cfg)? {
        for psi in psi_points(cfg, &win)? {
            let theta = win.theta_of(psi);
            let exact = gamma_exact(&win, theta)?.gamma;
            let cd = gamma_cd(&win, theta)?.gamma;
            let asym = gamma_asym(&win, psi);
            let mut r = base_row(cfg, &win);
            r.insert("psi".into(), num(psi));
            r.insert("theta".into(), num(theta));
            r.insert("gamma_exact".into(), num(exact));
            r.insert("gamma_cd".into(), num(cd));
            r.insert("gamma_asym".into(), num(asym.value));
            r.insert("asym_in_regime".into(), json!(asym.in_regime));
            r.insert("resid_cd".into(), num(cd - exact));
            r.insert("resid_asym".into(), num(asym.value - exact));
            rows.push(r);
        }
    }
    Ok(rows)
}

fn kacrice_curve(cfg: &ExperimentConfig) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for win in windows(cfg)? {
        for psi in psi_points(cfg, &win)? {
            let series = k_twopoint(&win, psi, KMethod::Series)?;
            let oracle = k_twopoint(&win, psi, KMethod::Oracle)?;
            let asym = k_asymptotic(&win, psi);
            let mut r = base_row(cfg, &win);
            r.insert("psi".into(), num(psi));
            r.insert("theta".into(), num(win.theta_of(psi)));
            r.insert("k_series".into(), num(series));
            r.insert("k_oracle".into(), num(oracle));
            r.insert("k_asym".into(), num(asym.value));
            r.insert("asym_in_regime".into(), json!(asym.in_regime));
            r.insert("resid_series".into(), num(series - oracle));
            r.insert("resid_asym".into(), num(asym.value - oracle));
            rows.push(r);
        }
    }
    Ok(rows)
}

fn variance(cfg: &ExperimentConfig) -> Result<Vec<Row>, CliError> {
    let opts = VarianceOptions { tol: cfg.tol, ..Default::default() };
    let mut rows = Vec::new();
    for win in windows(cfg)? {
        let rep = variance_integral(&win, &opts)?;
        eprintln!("variance n={}: {:.3}s", rep.n, rep.wall_time);
        let mut r = base_row(cfg, &win);
        r.insert("domain".into(), serde_json::to_value(rep.domain).expect("unit enum"));
        r.insert("split_c".into(), num(rep.split_c));
        r.insert("i1".into(), num(rep.i1));
        r.insert("i1_normalized".into(), num(rep.i1_normalized));
        r.insert("i2".into(), num(rep.i2));
        r.insert("total".into(), num(rep.total));
        r.insert("leading".into(), num(rep.leading));
        r.insert("quad_error".into(), num(rep.quad_error));
        r.insert("evals".into(), json!(rep.evals));
        r.insert("mean_length".into(), num(mean_length(&win)));
        rows.push(r);
    }
    Ok(rows)
}

/// `out.csv` becomes `out_n200.csv` when several windows share one dump path.
fn dump_path_for(base: &str, n: u32, many: bool) -> String {
    if !many {
        return base.to_string();
    }
    let p = Path::new(base);
    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("lengths");
    let name = match p.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_n{n}.{ext}"),
        None => format!("{stem}_n{n}"),
    };
    p.with_file_name(name).to_string_lossy().into_owned()
}

fn mc_nodal(cfg: &ExperimentConfig) -> Result<Vec<Row>, CliError> {
    let samples = cfg.samples.expect("validated");
    let seed = cfg.seed.expect("validated");
    let mut rows = Vec::new();
    for win in windows(cfg)? {
        let mesh = mesh_for(cfg, &win)?;
        let t = std::time::Instant::now();
        let lengths = mc_nodal_lengths(&win, samples, &mesh, seed)?;
        eprintln!("mc-nodal n={}: {samples} samples in {:.3}s", win.n(), t.elapsed().as_secs_f64());
        if let Some(base) = &cfg.dump_path {
            let path = dump_path_for(base, win.n(), cfg.n_list.len() > 1);
            let f = File::create(&path).map_err(CliError::io(&path))?;
            write_lengths_csv(BufWriter::new(f), &lengths).map_err(CliError::io(&path))?;
        }
        let xs: Vec<f64> = lengths.iter().map(|p| p.1).collect();
        let s = NodalStats::from_lengths(&xs, &mesh, seed)?;
        let mut r = base_row(cfg, &win);
        r.insert("samples".into(), json!(samples));
        r.insert("mesh_level".into(), json!(mesh.level()));
        r.insert("n_samples".into(), json!(s.n_samples));
        r.insert("mean_length".into(), num(s.mean_length));
        r.insert("var_length".into(), num(s.var_length));
        r.insert("stderr_mean".into(), num(s.stderr_mean));
        r.insert("stderr_var".into(), num(s.stderr_var));
        r.insert("mean_theory".into(), num(mean_length(&win)));
        r.insert("mesh_resolution".into(), json!(s.mesh_resolution));
        r.insert("discretization_note".into(), json!(s.discretization_note));
        rows.push(r);
    }
    Ok(rows)
}

fn hermite_cols(r: &mut Row, name: &str, h: &HermiteMc) {
    r.insert(format!("{name}_mean"), num(h.mean.value));
    r.insert(format!("{name}_mean_stderr"), num(h.mean.stderr));
    r.insert(format!("{name}_var"), num(h.variance.value));
    r.insert(format!("{name}_var_stderr"), num(h.variance.stderr));
}

fn chaos2(cfg: &ExperimentConfig) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for win in windows(cfg)? {
        let mut rep = ChaosReport::new(&win);
        let mut r = base_row(cfg, &win);
        if let Some(samples) = cfg.samples {
            let mesh = mesh_for(cfg, &win)?;
            rep = rep.with_mc(&win, &mesh, samples, cfg.seed.expect("validated"))?;
            r.insert("samples".into(), json!(samples));
            r.insert("mesh_level".into(), json!(mesh.level()));
        }
        r.insert("var2_exact".into(), num(rep.var2_exact));
        r.insert("var2_asym".into(), num(rep.var2_asym));
        r.insert("ratio".into(), num(rep.ratio));
        if let (Some(h2), Some(h4)) = (&rep.h2_mc, &rep.h4_mc) {
            hermite_cols(&mut r, "h2", h2);
            hermite_cols(&mut r, "h4", h4);
        }
        rows.push(r);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_paths() {
        assert_eq!(dump_path_for("a/out.csv", 7, false), "a/out.csv");
        assert_eq!(dump_path_for("a/out.csv", 7, true), "a/out_n7.csv");
        assert_eq!(dump_path_for("raw", 12, true), "raw_n12");
    }

    #[test]
    fn psi_beyond_antipode_is_config_error() {
        let text = "n_list = 10\ng_rule = const(0.3)\npsi_range = 1, 500, 3\n";
        let cfg = ExperimentConfig::parse(text, Command::KernelCurve).unwrap();
        assert_eq!(run(&cfg).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn kernel_rows_carry_parameters() {
        let text = "n_list = 30, 40\ng_rule = const(0.2)\npsi_range = 2, 10, 5\n";
        let cfg = ExperimentConfig::parse(text, Command::KernelCurve).unwrap();
        let rows = run(&cfg).unwrap();
        assert_eq!(rows.len(), 10);
        assert_eq!(rows[7]["n"], json!(40));
        assert!(rows[3]["resid_cd"].as_f64().unwrap().abs() < 1e-11);
    }
}
