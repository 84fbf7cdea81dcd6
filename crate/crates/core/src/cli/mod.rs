//! Command-line front end. Every subcommand writes CSV or JSON to stdout (or
//! `--output`) and maps its result to an exit status: 0 success, 1
//! tolerance or statistical failure, 2 usage or input error.

mod io;

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

pub use io::{
    load_local_state, load_state, num, parse_list, read_settings_file, read_state_file,
    write_state_file, StateFile,
};

use crate::bell::{chsh_value, horodecki_s, optimal_chsh_settings, ChshSettings};
use crate::filtering::{
    apply_filters, epsilon_filters, filter_scan, project_to_qubits, qubit_subspace_filter,
    richardson_limit, sequential_mc, LocalFilter, Party, ScanRow,
};
use crate::lhv::{random_settings, run_lhv_experiment, LhvModel};
use crate::qcore::{min_eig_partial_transpose, BipartiteState};
use crate::states::{
    protocol2_map, protocol2_map_one_sided, state_q, state_rho_g, state_rho_gm, StateFamily,
};
use io::Csv;

/// Tolerance on the unfiltered CHSH value and the PPT eigenvalue.
pub const EXACT_TOL: f64 = 1e-9;
/// Floor of the tolerance on the ε-filtered CHSH values.
pub const FILTERED_TOL: f64 = 1e-6;

/// Tolerance on the ε-filtered CHSH values: the filtered value approaches its
/// limit as `c·ε²/q` with `c < 6` for both families, so the check allows
/// `max(1e-6, 10·ε²/q)`.
pub fn filtered_tolerance(eps: f64, q: f64) -> f64 {
    FILTERED_TOL.max(10.0 * eps * eps / q)
}

#[derive(Debug, Parser)]
#[command(
    name = "hnl",
    version,
    about = "Hidden nonlocality: filtering, CHSH and local hidden variable models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Table of unfiltered and filtered CHSH values and the PPT eigenvalue,
    /// checked against their closed forms.
    Reproduce {
        /// Comma-separated values of q in (0, 1/2].
        #[arg(long, default_value = "0.1,0.25,0.5")]
        q: String,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
    },
    /// Monte Carlo test of a local hidden variable model against the Born rule.
    Lhv {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
        #[arg(long, default_value_t = 1_000_000)]
        rounds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `random:K` or a JSON settings file.
        #[arg(long, default_value = "random:10")]
        settings: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Applies the POVM-locality map `ρ ↦ (ρ + ρ_A⊗σ_B + σ_A⊗ρ_B + σ_A⊗σ_B)/d²`
    /// (or its one-sided form) and writes the resulting state file.
    Construct {
        /// State file or family keyword.
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
        /// `ketK` or a local state file.
        #[arg(long)]
        sigma_a: String,
        #[arg(long)]
        sigma_b: Option<String>,
        #[arg(long)]
        one_sided: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Writes a family member as a state file.
    State {
        family: String,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// CHSH value of the ε-filtered state for a list of ε.
    FilterScan {
        /// Family keyword (state_q or rho_G) or a two-qubit state file.
        #[arg(long, alias = "family")]
        input: String,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
        #[arg(long, default_value = "1e-2,1e-3,1e-4")]
        eps: String,
    },
    /// Minimum eigenvalue of the partial transpose.
    Entanglement {
        #[arg(long, alias = "family")]
        input: String,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
    },
    /// CHSH value for optimal or canonical settings.
    Chsh {
        #[arg(long, alias = "family")]
        input: String,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
        #[arg(long, value_enum, default_value_t = SettingsChoice::Optimal)]
        settings: SettingsChoice,
        /// Filter onto span{|0>,|1>} on both sides before measuring.
        #[arg(long)]
        project_qubit: bool,
    },
    /// Monte Carlo of the filter-then-measure CHSH experiment.
    Sequential {
        #[arg(long, alias = "family")]
        input: String,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
        /// ε for the two-qubit filters; ignored when local dimensions are at
        /// least 3, where the qubit-subspace filter is used.
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 1_000_000)]
        rounds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SettingsChoice {
    Optimal,
    Canonical,
}

/// What a command produced and whether its checks passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub passed: bool,
    pub messages: Vec<String>,
}

impl Output {
    fn ok(text: String) -> Self {
        Output {
            text,
            passed: true,
            messages: Vec::new(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

fn emit(text: String, output: Option<&PathBuf>) -> anyhow::Result<String> {
    match output {
        Some(path) => {
            fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

pub fn run(cli: &Cli) -> anyhow::Result<Output> {
    match &cli.command {
        Command::Reproduce { q, eps } => cmd_reproduce(&parse_list(q)?, *eps),
        Command::Lhv {
            model,
            q,
            rounds,
            seed,
            settings,
            output,
        } => cmd_lhv(model, *q, *rounds, *seed, settings, output.as_ref()),
        Command::Construct {
            input,
            q,
            sigma_a,
            sigma_b,
            one_sided,
            output,
        } => {
            let s = cmd_construct(input, *q, sigma_a, sigma_b.as_deref(), *one_sided)?;
            let text = StateFile::from_state(&s).to_json() + "\n";
            Ok(Output::ok(emit(text, output.as_ref())?))
        }
        Command::State { family, q, output } => {
            let family: StateFamily = family.parse()?;
            let text = StateFile::from_state(&family.build(*q)?).to_json() + "\n";
            Ok(Output::ok(emit(text, output.as_ref())?))
        }
        Command::FilterScan { input, q, eps } => cmd_filter_scan(input, *q, &parse_list(eps)?),
        Command::Entanglement { input, q } => cmd_entanglement(input, *q),
        Command::Chsh {
            input,
            q,
            settings,
            project_qubit,
        } => cmd_chsh(input, *q, *settings, *project_qubit),
        Command::Sequential {
            input,
            q,
            eps,
            rounds,
            seed,
            output,
        } => cmd_sequential(input, *q, *eps, *rounds, *seed, output.as_ref()),
    }
}

/// Closed form of the minimum partial-transpose eigenvalue of `state_q(q)`.
pub fn ppt_closed_form(q: f64) -> f64 {
    let r = 1.0 - q;
    (r - (r * r + 4.0 * q * q).sqrt()) / 4.0
}

fn filtered_horodecki(s: &BipartiteState, eps: f64, q: f64) -> anyhow::Result<f64> {
    let (fa, fb) = epsilon_filters(eps, q)?;
    Ok(horodecki_s(&apply_filters(s, &fa, &fb)?.filtered)?)
}

fn subspace_filters(d_a: usize, d_b: usize) -> anyhow::Result<(LocalFilter, LocalFilter)> {
    Ok((
        qubit_subspace_filter(d_a, Party::Alice)?,
        qubit_subspace_filter(d_b, Party::Bob)?,
    ))
}

/// CHSH value of `rho_GM(q)` after filtering onto the qubit subspace.
pub fn rho_gm_filtered_s(q: f64) -> anyhow::Result<f64> {
    let s = state_rho_gm(q)?;
    let (fa, fb) = subspace_filters(3, 3)?;
    let out = apply_filters(&s, &fa, &fb)?;
    Ok(horodecki_s(&project_to_qubits(&out.filtered)?)?)
}

pub fn cmd_reproduce(qs: &[f64], eps: f64) -> anyhow::Result<Output> {
    if qs.is_empty() {
        bail!("empty q grid");
    }
    if let Some(q) = qs.iter().find(|&&q| !(q > 0.0 && q <= 0.5)) {
        bail!("q = {q} outside (0, 1/2]");
    }
    let mut csv = Csv::new(&[
        "q",
        "S_unfiltered_state_q",
        "S_filtered_state_q",
        "S_filtered_rho_G",
        "S_rho_GM_filtered",
        "ppt_min_eig_state_q",
    ]);
    let mut messages = Vec::new();
    for &q in qs {
        let sq = state_q(q)?;
        let values = [
            horodecki_s(&sq)?,
            filtered_horodecki(&sq, eps, q)?,
            filtered_horodecki(&state_rho_g(q)?, eps, q)?,
            rho_gm_filtered_s(q)?,
            min_eig_partial_transpose(&sq)?,
        ];
        let expected = [
            2.0 * std::f64::consts::SQRT_2 * q,
            2.0 * (1.0 + q).sqrt(),
            2.0 * (1.0 + q / 4.0).sqrt(),
            2.0 * std::f64::consts::SQRT_2,
            ppt_closed_form(q),
        ];
        let ft = filtered_tolerance(eps, q);
        let tols = [EXACT_TOL, ft, ft, EXACT_TOL, EXACT_TOL];
        let names = [
            "S_unfiltered_state_q",
            "S_filtered_state_q",
            "S_filtered_rho_G",
            "S_rho_GM_filtered",
            "ppt_min_eig_state_q",
        ];
        for i in 0..5 {
            let dev = (values[i] - expected[i]).abs();
            if dev.is_nan() || dev > tols[i] {
                messages.push(format!(
                    "q = {q}: {} = {} differs from {} by {dev:e} (tolerance {:e})",
                    names[i], values[i], expected[i], tols[i]
                ));
            }
        }
        let mut row = vec![num(q)];
        row.extend(values.iter().map(|&v| num(v)));
        csv.row(&row);
    }
    Ok(Output {
        text: csv.finish(),
        passed: messages.is_empty(),
        messages,
    })
}

pub fn cmd_lhv(
    model: &str,
    q: f64,
    rounds: u64,
    seed: u64,
    settings: &str,
    output: Option<&PathBuf>,
) -> anyhow::Result<Output> {
    let model = LhvModel::parse(model, q)?;
    let pairs = match settings.strip_prefix("random:") {
        Some(k) => {
            let k: usize = k
                .parse()
                .with_context(|| format!("bad count in '{settings}'"))?;
            random_settings(model, k, seed)
        }
        None => read_settings_file(std::path::Path::new(settings))?,
    };
    let report = run_lhv_experiment(model, &pairs, rounds, seed)?;
    let mut messages = Vec::new();
    if !report.passed() {
        messages.push(format!("max z = {} exceeds 5", report.max_z));
    }
    Ok(Output {
        text: emit(report.to_json() + "\n", output)?,
        passed: report.passed(),
        messages,
    })
}

pub fn cmd_construct(
    input: &str,
    q: f64,
    sigma_a: &str,
    sigma_b: Option<&str>,
    one_sided: bool,
) -> anyhow::Result<BipartiteState> {
    let (_, rho0) = load_state(input, q)?;
    let (da, db) = rho0.dims();
    let sa = load_local_state(sigma_a, da)?;
    if one_sided {
        if sigma_b.is_some() {
            bail!("--sigma-b is not used with --one-sided");
        }
        return Ok(protocol2_map_one_sided(&rho0, &sa)?);
    }
    let sb = load_local_state(sigma_b.unwrap_or(sigma_a), db)?;
    Ok(protocol2_map(&rho0, &sa, &sb)?)
}

pub fn cmd_filter_scan(input: &str, q: f64, eps: &[f64]) -> anyhow::Result<Output> {
    if eps.is_empty() {
        bail!("empty eps list");
    }
    let rows: Vec<ScanRow> = match input.parse::<StateFamily>() {
        Ok(family) => filter_scan(family, q, eps)?,
        Err(_) => {
            let (_, s) = load_state(input, q)?;
            let mut rows = eps
                .iter()
                .map(|&e| {
                    let (fa, fb) = epsilon_filters(e, q)?;
                    let out = apply_filters(&s, &fa, &fb)?;
                    Ok(ScanRow {
                        eps: e,
                        s: horodecki_s(&out.filtered)?,
                        success_prob: out.success_prob,
                        closed_form: f64::NAN,
                    })
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            // no closed form for an arbitrary file: extrapolate in ε²
            let mut sorted = rows.clone();
            sorted.sort_by(|a, b| a.eps.total_cmp(&b.eps));
            let limit = match sorted.as_slice() {
                [a, b, ..] if a.eps != b.eps => richardson_limit(a, b),
                [a, ..] => a.s,
                [] => unreachable!(),
            };
            for r in &mut rows {
                r.closed_form = limit;
            }
            rows
        }
    };
    let mut csv = Csv::new(&["eps", "S", "success_prob", "S_limit"]);
    for r in rows {
        csv.row(&[
            num(r.eps),
            num(r.s),
            num(r.success_prob),
            num(r.closed_form),
        ]);
    }
    Ok(Output::ok(csv.finish()))
}

pub fn cmd_entanglement(input: &str, q: f64) -> anyhow::Result<Output> {
    let (name, s) = load_state(input, q)?;
    let (da, db) = s.dims();
    let min = min_eig_partial_transpose(&s)?;
    let mut csv = Csv::new(&[
        "state",
        "q",
        "dim_a",
        "dim_b",
        "min_eig_partial_transpose",
        "npt",
    ]);
    csv.row(&[
        name,
        num(q),
        da.to_string(),
        db.to_string(),
        num(min),
        (min < -crate::qcore::PSD_TOL).to_string(),
    ]);
    Ok(Output::ok(csv.finish()))
}

pub fn cmd_chsh(
    input: &str,
    q: f64,
    choice: SettingsChoice,
    project_qubit: bool,
) -> anyhow::Result<Output> {
    let (name, s) = load_state(input, q)?;
    let (s, success) = if project_qubit && s.dims() != (2, 2) {
        let (da, db) = s.dims();
        let (fa, fb) = subspace_filters(da, db)?;
        let out = apply_filters(&s, &fa, &fb)?;
        (project_to_qubits(&out.filtered)?, out.success_prob)
    } else {
        (s, 1.0)
    };
    if s.dims() != (2, 2) {
        bail!(crate::Error::DimensionMismatch(format!(
            "CHSH needs a two-qubit state, got {}x{} (use --project-qubit)",
            s.dim_a(),
            s.dim_b()
        )));
    }
    let settings = match choice {
        SettingsChoice::Optimal => optimal_chsh_settings(&s)?,
        SettingsChoice::Canonical => ChshSettings::canonical(),
    };
    let value = chsh_value(&s, &settings)?;
    let bound = horodecki_s(&s)?;
    let label = match choice {
        SettingsChoice::Optimal => "optimal",
        SettingsChoice::Canonical => "canonical",
    };
    let mut csv = Csv::new(&[
        "state",
        "q",
        "settings",
        "S",
        "horodecki_S",
        "projection_prob",
    ]);
    csv.row(&[
        name,
        num(q),
        label.into(),
        num(value),
        num(bound),
        num(success),
    ]);
    Ok(Output::ok(csv.finish()))
}

pub fn cmd_sequential(
    input: &str,
    q: f64,
    eps: f64,
    rounds: u64,
    seed: u64,
    output: Option<&PathBuf>,
) -> anyhow::Result<Output> {
    let (_, s) = load_state(input, q)?;
    let (fa, fb) = match s.dims() {
        (2, 2) => epsilon_filters(eps, q)?,
        (da, db) => subspace_filters(da, db)?,
    };
    let filtered = project_to_qubits(&apply_filters(&s, &fa, &fb)?.filtered)?;
    let settings = optimal_chsh_settings(&filtered)?;
    let report = sequential_mc(&s, &fa, &fb, &settings, rounds, seed)?;
    let passed = report.success_z <= 5.0 && report.s_z <= 5.0;
    let mut messages = Vec::new();
    if !passed {
        messages.push(format!(
            "success z = {}, CHSH z = {}",
            report.success_z, report.s_z
        ));
    }
    let text = serde_json::to_string_pretty(&report)? + "\n";
    Ok(Output {
        text: emit(text, output)?,
        passed,
        messages,
    })
}
