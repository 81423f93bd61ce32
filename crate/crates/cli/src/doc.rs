//! The problem-spec document: JSON with `schema`, `problem`, `nonlinearity`,
//! `functionals` and `solver` sections. Real numbers are decimal strings.

use std::path::Path;

use hammer_core::bvfun::{BvFunction, Domain};
use hammer_core::bvp::{self, BvpKind, BvpSpec, LwParams};
use hammer_core::kernels::{Kernel, Table};
use hammer_core::operators::{LinearPerturbation, Nonlinearity, PerturbedProblem};
use hammer_core::stieltjes::Functional;
use serde::Deserialize;

use crate::Failure;

pub const SCHEMA: u32 = 1;

/// A real number written as a decimal string.
#[derive(Debug, Clone, Deserialize)]
#[serde(transparent)]
pub struct Dec(pub String);

impl Dec {
    fn value(&self, what: &str) -> Result<f64, Failure> {
        let v: f64 = self
            .0
            .trim()
            .parse()
            .map_err(|_| Failure::malformed(format!("{what}: {:?} is not a decimal number", self.0)))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Failure::malformed(format!("{what}: {:?} is not finite", self.0)))
        }
    }
}

fn opt(d: &Option<Dec>, what: &str) -> Result<Option<f64>, Failure> {
    d.as_ref().map(|d| d.value(what)).transpose()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDoc {
    pub schema: u32,
    pub problem: ProblemDoc,
    #[serde(default)]
    pub nonlinearity: Option<NonlinearityDoc>,
    #[serde(default)]
    pub functionals: Option<FunctionalsDoc>,
    #[serde(default)]
    pub solver: SolverDoc,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    /// `catalog`, `periodic`, `nonlocal` or `hammerstein`.
    pub kind: String,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub lambda: Option<Dec>,
    #[serde(default)]
    pub omega: Option<Dec>,
    #[serde(default)]
    pub kernel: Option<KernelDoc>,
    /// Intervals of `Ω₀`; defaults to `[0, 1]`.
    #[serde(default)]
    pub domain: Option<Vec<[Dec; 2]>>,
    #[serde(default)]
    pub eigen: Option<EigenDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelDoc {
    Periodic { omega: Dec },
    Dirichlet,
    Tabulated {
        #[serde(default)]
        rows: Option<Vec<Vec<Dec>>>,
        /// CSV matrix path, relative to the document file.
        #[serde(default)]
        csv: Option<String>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenDoc {
    #[serde(default)]
    pub m: Option<Dec>,
    #[serde(default)]
    pub p: Option<Dec>,
    #[serde(default)]
    pub r: Option<Dec>,
    #[serde(default)]
    pub theta: Option<Dec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityDoc {
    #[serde(default)]
    pub name: Option<String>,
    /// `[coefficient, power of t, power of u]` rows.
    #[serde(default)]
    pub terms: Option<Vec<(Dec, u32, u32)>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalsDoc {
    pub alpha: FunctionalDoc,
    pub beta: FunctionalDoc,
    #[serde(default)]
    pub v: Option<BvDoc>,
    #[serde(default)]
    pub w: Option<BvDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum FunctionalDoc {
    Dx { a: BvDoc },
    Da { a: BvDoc },
    Points { rows: Vec<[Dec; 2]> },
    Zero,
}

/// A BV function in one of four forms: full (`breakpoints`, `pieces`,
/// `jumps`), `steps`, `polyline` or `constant`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BvDoc {
    #[serde(default)]
    pub breakpoints: Option<Vec<Dec>>,
    #[serde(default)]
    pub pieces: Option<Vec<Vec<Dec>>>,
    #[serde(default)]
    pub jumps: Option<Vec<[Dec; 2]>>,
    #[serde(default)]
    pub steps: Option<Vec<[Dec; 2]>>,
    #[serde(default)]
    pub polyline: Option<Vec<[Dec; 2]>>,
    #[serde(default)]
    pub constant: Option<Dec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverDoc {
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub tol: Option<Dec>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    /// Radius for the fixed-point solver.
    #[serde(default)]
    pub r: Option<Dec>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenParams {
    pub m: f64,
    pub p: f64,
    pub r: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverSettings {
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub r: Option<f64>,
}

/// A validated problem ready for the solvers.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub name: String,
    /// Present when the document describes a boundary value problem.
    pub bvp: Option<BvpSpec>,
    pub problem: PerturbedProblem,
    pub domain: Domain,
    pub eigen: Option<EigenParams>,
    pub solver: SolverSettings,
}

fn pairs(rows: &[[Dec; 2]], what: &str) -> Result<Vec<(f64, f64)>, Failure> {
    rows.iter()
        .map(|[a, b]| Ok((a.value(what)?, b.value(what)?)))
        .collect()
}

impl BvDoc {
    pub fn build(&self) -> Result<BvFunction, Failure> {
        let forms = [
            self.breakpoints.is_some() || self.pieces.is_some() || self.jumps.is_some(),
            self.steps.is_some(),
            self.polyline.is_some(),
            self.constant.is_some(),
        ];
        if forms.iter().filter(|f| **f).count() != 1 {
            return Err(Failure::malformed(
                "a BV function needs exactly one of: breakpoints/pieces/jumps, steps, polyline, constant",
            ));
        }
        if let Some(c) = &self.constant {
            return Ok(BvFunction::constant(c.value("constant")?));
        }
        if let Some(s) = &self.steps {
            return Ok(BvFunction::steps(&pairs(s, "steps")?)?);
        }
        if let Some(p) = &self.polyline {
            return Ok(BvFunction::polyline(&pairs(p, "polyline")?)?);
        }
        let breakpoints = self
            .breakpoints
            .as_ref()
            .ok_or_else(|| Failure::malformed("missing breakpoints"))?
            .iter()
            .map(|d| d.value("breakpoint"))
            .collect::<Result<Vec<_>, _>>()?;
        let pieces = self
            .pieces
            .as_ref()
            .ok_or_else(|| Failure::malformed("missing pieces"))?
            .iter()
            .map(|row| row.iter().map(|d| d.value("coefficient")).collect())
            .collect::<Result<Vec<Vec<f64>>, _>>()?;
        let jumps = match &self.jumps {
            Some(j) => pairs(j, "jump")?,
            None => Vec::new(),
        };
        Ok(BvFunction::new(breakpoints, pieces, jumps)?)
    }
}

impl FunctionalDoc {
    fn build(&self) -> Result<Functional, Failure> {
        Ok(match self {
            FunctionalDoc::Dx { a } => Functional::dx(a.build()?),
            FunctionalDoc::Da { a } => Functional::da(a.build()?),
            FunctionalDoc::Points { rows } => Functional::points(&pairs(rows, "point row")?)?,
            FunctionalDoc::Zero => Functional::zero(),
        })
    }
}

impl NonlinearityDoc {
    fn build(&self) -> Result<Nonlinearity, Failure> {
        match (&self.name, &self.terms) {
            (Some(name), None) => Ok(Nonlinearity::catalog(name)?),
            (None, Some(terms)) => {
                let terms = terms
                    .iter()
                    .map(|(c, i, j)| Ok((c.value("term coefficient")?, *i, *j)))
                    .collect::<Result<Vec<_>, Failure>>()?;
                Ok(Nonlinearity::polynomial(terms)?)
            }
            _ => Err(Failure::malformed("nonlinearity needs exactly one of name, terms")),
        }
    }
}

impl SolverDoc {
    fn settings(&self) -> Result<SolverSettings, Failure> {
        Ok(SolverSettings {
            grid: self.grid,
            tol: opt(&self.tol, "solver.tol")?,
            max_iter: self.max_iter,
            r: opt(&self.r, "solver.r")?,
        })
    }
}

fn eigen_params(doc: Option<&EigenDoc>, omega: Option<f64>) -> Result<Option<EigenParams>, Failure> {
    let defaults = omega.map(LwParams::periodic_default);
    let Some(doc) = doc else {
        return Ok(defaults.map(|d| EigenParams {
            m: d.m,
            p: d.p,
            r: d.r,
            theta: 0.5,
        }));
    };
    let m = opt(&doc.m, "eigen.m")?.or(defaults.map(|d| d.m));
    let m = m.ok_or_else(|| Failure::malformed("eigen.m is required for this kernel"))?;
    Ok(Some(EigenParams {
        m,
        p: opt(&doc.p, "eigen.p")?.unwrap_or(1.0),
        r: opt(&doc.r, "eigen.r")?.unwrap_or(1.0),
        theta: opt(&doc.theta, "eigen.theta")?.unwrap_or(0.5),
    }))
}

fn domain(doc: &ProblemDoc) -> Result<Domain, Failure> {
    match &doc.domain {
        None => Ok(Domain::full()),
        Some(rows) => Ok(Domain::new(pairs(rows, "domain")?)?),
    }
}

impl SpecDoc {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let doc: SpecDoc =
            serde_json::from_str(text).map_err(|e| Failure::malformed(format!("spec document: {e}")))?;
        if doc.schema != SCHEMA {
            return Err(Failure::malformed(format!(
                "unsupported schema {}; expected {SCHEMA}",
                doc.schema
            )));
        }
        Ok(doc)
    }

    /// Builds the problem. `base` resolves relative paths inside the document.
    pub fn load(&self, base: &Path) -> Result<Loaded, Failure> {
        let p = &self.problem;
        let solver = self.solver.settings()?;
        let lambda = opt(&p.lambda, "problem.lambda")?;
        let nonlinearity = || -> Result<Nonlinearity, Failure> {
            self.nonlinearity
                .as_ref()
                .ok_or_else(|| Failure::malformed("missing nonlinearity section"))?
                .build()
        };
        let domain = domain(p)?;
        match p.kind.as_str() {
            "catalog" => {
                let name = p.name.as_deref().ok_or_else(|| Failure::malformed("catalog problem needs a name"))?;
                let mut spec = bvp::catalog_entry(name)
                    .ok_or_else(|| Failure::malformed(format!("no catalog entry {name:?}")))?;
                if let Some(l) = lambda {
                    spec.lambda = l;
                }
                if let Some(nl) = &self.nonlinearity {
                    spec.f = nl.build()?;
                }
                let omega = match spec.kind {
                    BvpKind::Periodic { omega } => Some(omega),
                    _ => None,
                };
                let eigen = match (p.eigen.as_ref(), spec.lw) {
                    (None, Some(lw)) => Some(EigenParams {
                        m: lw.m,
                        p: lw.p,
                        r: lw.r,
                        theta: 0.5,
                    }),
                    (doc, _) => eigen_params(doc, omega)?,
                };
                self.finish_bvp(spec, domain, eigen, solver)
            }
            "periodic" => {
                let omega = p
                    .omega
                    .as_ref()
                    .ok_or_else(|| Failure::malformed("periodic problem needs omega"))?
                    .value("problem.omega")?;
                let spec = BvpSpec::new(
                    p.name.clone().unwrap_or_else(|| "periodic".into()),
                    BvpKind::Periodic { omega },
                    nonlinearity()?,
                    lambda.unwrap_or(1.0),
                )?;
                let eigen = eigen_params(p.eigen.as_ref(), Some(omega))?;
                self.finish_bvp(spec, domain, eigen, solver)
            }
            "nonlocal" => {
                let fs = self
                    .functionals
                    .as_ref()
                    .ok_or_else(|| Failure::malformed("nonlocal problem needs a functionals section"))?;
                if fs.v.is_some() || fs.w.is_some() {
                    return Err(Failure::malformed(
                        "v and w are fixed to 1 − t and t for boundary value problems",
                    ));
                }
                let kind = match (&fs.alpha, &fs.beta) {
                    (FunctionalDoc::Dx { a }, FunctionalDoc::Dx { a: b }) => BvpKind::NonlocalDx {
                        a: a.build()?,
                        b: b.build()?,
                    },
                    (FunctionalDoc::Da { a }, FunctionalDoc::Da { a: b }) => BvpKind::NonlocalDa {
                        a: a.build()?,
                        b: b.build()?,
                    },
                    (FunctionalDoc::Points { rows: a }, FunctionalDoc::Points { rows: b }) => {
                        BvpKind::Multipoint {
                            alpha: pairs(a, "point row")?,
                            beta: pairs(b, "point row")?,
                        }
                    }
                    _ => {
                        return Err(Failure::malformed(
                            "alpha and beta must both be dx, both da or both points",
                        ))
                    }
                };
                let spec = BvpSpec::new(
                    p.name.clone().unwrap_or_else(|| "nonlocal".into()),
                    kind,
                    nonlinearity()?,
                    lambda.unwrap_or(1.0),
                )?;
                self.finish_bvp(spec, domain, None, solver)
            }
            "hammerstein" => {
                let kernel = match p
                    .kernel
                    .as_ref()
                    .ok_or_else(|| Failure::malformed("hammerstein problem needs a kernel"))?
                {
                    KernelDoc::Periodic { omega } => Kernel::periodic(omega.value("kernel.omega")?)?,
                    KernelDoc::Dirichlet => Kernel::dirichlet(),
                    KernelDoc::Tabulated { rows, csv } => {
                        let table = match (rows, csv) {
                            (Some(rows), None) => Table::new(
                                rows.iter()
                                    .map(|r| r.iter().map(|d| d.value("kernel row")).collect())
                                    .collect::<Result<Vec<Vec<f64>>, _>>()?,
                            )?,
                            (None, Some(path)) => {
                                let path = base.join(path);
                                let text = std::fs::read_to_string(&path).map_err(|e| {
                                    Failure::malformed(format!("{}: {e}", path.display()))
                                })?;
                                Table::from_csv(&text)?
                            }
                            _ => return Err(Failure::malformed("tabulated kernel needs exactly one of rows, csv")),
                        };
                        Kernel::tabulated(table)
                    }
                };
                let omega = match kernel.kind() {
                    hammer_core::kernels::KernelKind::Periodic { omega } => Some(*omega),
                    _ => None,
                };
                let perturbation = match &self.functionals {
                    None => LinearPerturbation::zero(),
                    Some(fs) => {
                        let v = fs.v.as_ref().map(BvDoc::build).transpose()?;
                        let w = fs.w.as_ref().map(BvDoc::build).transpose()?;
                        let v = v.unwrap_or_else(|| BvFunction::polyline(&[(0.0, 1.0), (1.0, 0.0)]).unwrap());
                        let w = w.unwrap_or_else(BvFunction::identity);
                        LinearPerturbation::new(fs.alpha.build()?, fs.beta.build()?, v, w)?
                    }
                };
                Ok(Loaded {
                    name: p.name.clone().unwrap_or_else(|| "hammerstein".into()),
                    bvp: None,
                    problem: PerturbedProblem {
                        kernel,
                        f: nonlinearity()?,
                        perturbation,
                        lambda: lambda.unwrap_or(1.0),
                    },
                    domain,
                    eigen: eigen_params(p.eigen.as_ref(), omega)?,
                    solver,
                })
            }
            other => Err(Failure::malformed(format!(
                "unknown problem kind {other:?}; expected catalog, periodic, nonlocal or hammerstein"
            ))),
        }
    }

    fn finish_bvp(
        &self,
        spec: BvpSpec,
        domain: Domain,
        eigen: Option<EigenParams>,
        solver: SolverSettings,
    ) -> Result<Loaded, Failure> {
        if self.problem.kernel.is_some() {
            return Err(Failure::malformed("boundary value problems fix their own kernel"));
        }
        let problem = bvp::reduce(&spec)?;
        Ok(Loaded {
            name: spec.name.clone(),
            bvp: Some(spec),
            problem,
            domain,
            eigen,
            solver,
        })
    }
}
