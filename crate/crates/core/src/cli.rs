//! Pipeline behind the `dbound` binary: load, prebound, build, solve,
//! re-evaluate and report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use dbound_milp::{export_lp, SolveOptions, SolveStatus};
use log::info;
use serde::{Deserialize, Serialize};

use crate::breakpoints::{self, BreakpointSet, Scheme};
use crate::error::{Error, Result};
use crate::instance::{grid_instance, Instance};
use crate::prebounds::{self, CutOptions, DistrictBounds, GradientCut, PreboundCache};
use crate::probit::{ObjectiveKind, ObjectiveSpec};
use crate::relax::{self, Family, RelaxOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub instance: Option<PathBuf>,
    /// `ROWSxCOLS` grid generated from `seed` when no instance file is given.
    pub grid: Option<String>,
    pub k: usize,
    pub tau: f64,
    pub objective: ObjectiveKind,
    pub relax: Family,
    pub ell: usize,
    pub nu: usize,
    pub resolution: usize,
    pub dominating: bool,
    pub symmetry: bool,
    pub prebounds: bool,
    pub gradient_cuts: bool,
    /// Seconds.
    pub time_limit: Option<f64>,
    pub node_limit: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Prebound cache file, read when its key matches and written otherwise.
    pub cache: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            instance: None,
            grid: None,
            k: 2,
            tau: 0.2,
            objective: ObjectiveKind::Bvap,
            relax: Family::StepMax,
            ell: 10,
            nu: 3,
            resolution: 1000,
            dominating: false,
            symmetry: false,
            prebounds: false,
            gradient_cuts: false,
            time_limit: None,
            node_limit: None,
            seed: 0,
            out: None,
            cache: None,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.instance {
            if !p.exists() {
                return Err(Error::Config(format!("instance file {} does not exist", p.display())));
            }
        } else if self.grid.is_none() {
            return Err(Error::Config("give an instance file or a grid".into()));
        }
        if self.objective == ObjectiveKind::Cpvi && !matches!(self.relax, Family::StepMax | Family::StepExp) {
            return Err(Error::Config(format!("cpvi sums two ratios and needs a step relaxation, not {}", self.relax)));
        }
        Ok(())
    }

    pub fn spec(&self) -> ObjectiveSpec {
        ObjectiveSpec::new(self.objective)
    }

    pub fn load_instance(&self) -> Result<Instance> {
        if let Some(p) = &self.instance {
            return Ok(Instance::load(p)?);
        }
        let g = self.grid.as_deref().ok_or_else(|| Error::Config("no instance".into()))?;
        let (r, c) = g
            .split_once('x')
            .and_then(|(r, c)| Some((r.trim().parse().ok()?, c.trim().parse().ok()?)))
            .ok_or_else(|| Error::Config(format!("grid {g:?} is not ROWSxCOLS")))?;
        Ok(grid_instance(r, c, self.k, self.tau, self.seed)?)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            node_limit: self.node_limit,
            time_limit: self.time_limit.map(Duration::from_secs_f64),
            ..Default::default()
        }
    }

    fn relax_options(&self) -> RelaxOptions {
        RelaxOptions {
            ell: self.ell,
            nu: self.nu,
            dominating: self.dominating,
            symmetry: self.symmetry,
            resolution: self.resolution,
            ..Default::default()
        }
    }
}

/// One row of the results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub objective: ObjectiveKind,
    pub relax: Family,
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    pub nu: usize,
    /// Whether the MIP bound is a certified bound on the true optimum.
    pub certified: bool,
    pub mip_bound: f64,
    pub mip_obj: Option<f64>,
    pub status: String,
    pub mip_gap: Option<f64>,
    pub true_objective: Option<f64>,
    /// `(bound − true) / true`.
    pub true_gap: Option<f64>,
    /// `Σ_j Δ_j` of the step families.
    pub error_bound: Option<f64>,
    pub nodes: usize,
    pub contiguity_cuts: usize,
    pub gradient_cuts: usize,
    pub assignment: Option<Vec<usize>>,
    /// Wall clock; left out of the JSON so repeated runs compare equal.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl Report {
    /// Runtime when solved to optimality, else the final gap.
    pub fn time_or_gap(&self) -> String {
        if self.status == SolveStatus::Optimal.as_str() {
            format!("{:.2}s", self.elapsed.as_secs_f64())
        } else {
            self.mip_gap.map_or("-".into(), |g| format!("{:.2}%", 100.0 * g))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        let header = ["objective", "relax", "MIP Bound", "MIP Obj.", "Time/Gap", "True Obj.", "True Gap"];
        let row = [
            self.objective.as_str().to_string(),
            format!("{}{}", self.relax, if self.certified { "" } else { "*" }),
            format!("{:.4}", self.mip_bound),
            opt(self.mip_obj),
            self.time_or_gap(),
            opt(self.true_objective),
            self.true_gap.map_or("-".into(), |g| format!("{:.2}%", 100.0 * g)),
        ];
        let widths: Vec<usize> = header.iter().zip(&row).map(|(h, r)| h.len().max(r.len())).collect();
        let mut s = String::new();
        for (cells, w) in [header.map(String::from), row].iter().zip([0, 1]) {
            let line: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            let _ = writeln!(s, "{}", line.join("  "));
            if w == 0 {
                let _ = writeln!(s, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
            }
        }
        if !self.certified {
            s.push_str("* restriction: the MIP bound does not bound the true optimum\n");
        }
        s
    }
}

/// Prebound ranges and cuts for `cfg`, through the cache when configured.
pub fn prebound(cfg: &RunConfig, inst: &Instance, spec: &ObjectiveSpec) -> Result<(Option<DistrictBounds>, Vec<GradientCut>)> {
    if !cfg.prebounds && !cfg.gradient_cuts {
        return Ok((None, Vec::new()));
    }
    let key = prebounds::cache_key(
        inst,
        spec,
        &format!("prebounds={} cuts={} ell={}", cfg.prebounds, cfg.gradient_cuts, cfg.ell),
    );
    if let Some(path) = &cfg.cache {
        if let Some(c) = prebounds::load_cache(path, &key) {
            info!("prebounds: cache hit in {}, skipping range solves", path.display());
            return Ok((cfg.prebounds.then_some(c.bounds), c.cuts));
        }
    }
    let solve = cfg.solve_options();
    let bounds = prebounds::compute_variable_ranges(inst, spec, &solve)?;
    let cuts = if cfg.gradient_cuts {
        let f_star = incumbent_value(cfg, inst, spec).unwrap_or(0.0);
        let opts = CutOptions {
            solve: solve.clone(),
            ..Default::default()
        };
        prebounds::gradient_cuts(inst, spec, cfg.prebounds.then_some(&bounds), f_star, &opts)?.cuts
    } else {
        Vec::new()
    };
    if let Some(path) = &cfg.cache {
        prebounds::save_cache(
            path,
            &PreboundCache {
                key,
                bounds: bounds.clone(),
                cuts: cuts.clone(),
            },
        )?;
    }
    Ok((cfg.prebounds.then_some(bounds), cuts))
}

/// True objective of a quick step-max incumbent, the target of the cut loop.
fn incumbent_value(cfg: &RunConfig, inst: &Instance, spec: &ObjectiveSpec) -> Option<f64> {
    let r = relax::build(inst, spec, Family::StepMax, &cfg.relax_options()).ok()?;
    let opts = SolveOptions {
        node_limit: Some(500),
        ..cfg.solve_options()
    };
    let a = r.solve(inst, &opts).ok()?.assignment?;
    spec.true_objective(inst, &a).ok()
}

pub fn build_relaxation(cfg: &RunConfig, inst: &Instance, spec: &ObjectiveSpec) -> Result<(relax::Relaxation, usize)> {
    let (bounds, cuts) = prebound(cfg, inst, spec)?;
    let ncuts = cuts.len();
    let opts = RelaxOptions {
        bounds,
        cuts,
        ..cfg.relax_options()
    };
    Ok((relax::build(inst, spec, cfg.relax, &opts)?, ncuts))
}

pub fn run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let inst = cfg.load_instance()?;
    let spec = cfg.spec();
    spec.check_instance(&inst)?;
    if spec.saturated(&inst) {
        log::warn!("{} is within 1e-3 of 1 on the whole ratio domain", spec.kind.as_str());
    }
    let (model, ncuts) = build_relaxation(cfg, &inst, &spec)?;
    let s = model.solve(&inst, &cfg.solve_options())?;
    let true_objective = s.assignment.as_ref().and_then(|a| spec.true_objective(&inst, a).ok());
    let bound = s.result.dual_bound;
    Ok(Report {
        objective: cfg.objective,
        relax: cfg.relax,
        n: inst.n(),
        k: inst.k,
        ell: cfg.ell,
        nu: cfg.nu,
        certified: cfg.relax.gives_bound(),
        mip_bound: bound,
        mip_obj: s.result.objective,
        status: s.result.status.as_str().to_string(),
        mip_gap: s.result.gap(),
        true_objective,
        true_gap: true_objective.map(|t| (bound - t) / t),
        error_bound: model.error_bound,
        nodes: s.result.nodes,
        contiguity_cuts: s.contiguity_cuts,
        gradient_cuts: ncuts,
        assignment: s.assignment.map(|a| a.district),
        elapsed: start.elapsed(),
    })
}

/// Files written by [`export`].
#[derive(Clone, Debug, PartialEq)]
pub struct Artifacts {
    pub lp: String,
    pub breakpoints: String,
    pub bounds: Option<String>,
}

pub fn export(cfg: &RunConfig) -> Result<Artifacts> {
    cfg.validate()?;
    let inst = cfg.load_instance()?;
    let spec = cfg.spec();
    let (bounds, cuts) = prebound(cfg, &inst, &spec)?;
    let opts = RelaxOptions {
        bounds: bounds.clone(),
        cuts: cuts.clone(),
        ..cfg.relax_options()
    };
    let model = relax::build(&inst, &spec, cfg.relax, &opts)?;
    let sets: Vec<&BreakpointSet> = model.breakpoints.iter().collect();
    let bounds = bounds.map(|b| {
        serde_json::to_string_pretty(&serde_json::json!({ "bounds": b, "cuts": cuts })).expect("bounds serialize")
    });
    Ok(Artifacts {
        lp: export_lp(&model.model),
        breakpoints: serde_json::to_string_pretty(&sets).expect("breakpoints serialize"),
        bounds,
    })
}

/// Writes the artifacts as `<out>.lp`, `<out>.breakpoints.json` and
/// `<out>.bounds.json`.
pub fn write_artifacts(a: &Artifacts, out: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |ext: &str, text: &str| -> Result<()> {
        let p = out.with_extension(ext);
        std::fs::write(&p, text)?;
        written.push(p);
        Ok(())
    };
    put("lp", &a.lp)?;
    put("breakpoints.json", &a.breakpoints)?;
    if let Some(b) = &a.bounds {
        put("bounds.json", b)?;
    }
    Ok(written)
}

/// Breakpoints of `scheme` over the objective's ratio domain, with their errors.
#[derive(Clone, Debug, Serialize)]
pub struct BreakpointReport {
    pub scheme: Scheme,
    pub b: Vec<f64>,
    pub max_error: f64,
    pub expected_error: f64,
}

pub fn breakpoint_report(cfg: &RunConfig, domain: Option<(f64, f64)>) -> Result<Vec<BreakpointReport>> {
    let spec = cfg.spec();
    let domains = match domain {
        Some(d) => vec![d; spec.terms.len()],
        None => spec.ratio_domain(&cfg.load_instance()?),
    };
    let curves = crate::relax::term_curves(&spec, &domains);
    domains
        .into_iter()
        .zip(curves)
        .map(|((lo, hi), curve)| {
            let bs = breakpoints::build(cfg.relax.scheme(), &curve, lo, hi, cfg.ell)?;
            Ok(BreakpointReport {
                scheme: cfg.relax.scheme(),
                max_error: breakpoints::max_error(&curve, &bs),
                expected_error: breakpoints::expected_error(&curve, &bs),
                b: bs.b,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node_file(dir: &Path) -> PathBuf {
        let p = dir.join("two.json");
        std::fs::write(
            &p,
            r#"{"k":2,"tau":0.5,"nodes":[{"id":0,"pop":100,"vap":100,"bvap":60},{"id":1,"pop":100,"vap":100,"bvap":20}],"edges":[[0,1]]}"#,
        )
        .unwrap();
        p
    }

    #[test]
    fn two_node_report() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            instance: Some(two_node_file(dir.path())),
            ell: 4,
            ..Default::default()
        };
        let r = run(&cfg).unwrap();
        let t = r.true_objective.unwrap();
        assert!((t - 0.9696).abs() < 1e-3);
        assert!(r.mip_bound >= t);
        assert_eq!(r.to_json(), run(&cfg).unwrap().to_json());
        assert!(r.to_table().contains("MIP Bound"));
    }

    #[test]
    fn cpvi_without_votes_fails() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            instance: Some(two_node_file(dir.path())),
            objective: ObjectiveKind::Cpvi,
            ..Default::default()
        };
        assert!(matches!(run(&cfg), Err(Error::Objective(_))));
        let bad = RunConfig {
            relax: Family::Loge,
            ..cfg
        };
        assert!(matches!(run(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn export_is_stable() {
        let cfg = RunConfig {
            grid: Some("2x3".into()),
            seed: 3,
            ell: 5,
            ..Default::default()
        };
        let a = export(&cfg).unwrap();
        assert_eq!(a, export(&cfg).unwrap());
        let back = dbound_milp::parse_lp(&a.lp).unwrap();
        let inst = cfg.load_instance().unwrap();
        let (orig, _) = build_relaxation(&cfg, &inst, &cfg.spec()).unwrap();
        let opts = SolveOptions {
            abs_gap: 1e-9,
            rel_gap: 1e-9,
            ..Default::default()
        };
        let x = dbound_milp::solve(&orig.model, &opts).unwrap();
        let y = dbound_milp::solve(&back, &opts).unwrap();
        assert!((x.dual_bound - y.dual_bound).abs() < 1e-7);
    }

    #[test]
    fn config_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"grid": "3x3", "relax": "loge", "nu": 2}"#).unwrap();
        let c = RunConfig::from_json_file(&p).unwrap();
        assert_eq!((c.relax, c.nu, c.ell), (Family::Loge, 2, 10));
        std::fs::write(&p, r#"{"gird": "3x3"}"#).unwrap();
        assert!(RunConfig::from_json_file(&p).is_err());
    }
}
